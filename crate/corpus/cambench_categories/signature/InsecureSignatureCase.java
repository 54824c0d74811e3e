import java.security.*;

public class InsecureSignatureCase {
  byte[] sign(PrivateKey key, byte[] message) throws Exception {
    Signature signer = Signature.getInstance("SHA1withRSA");
    signer.initSign(key);
    signer.update(message);
    return signer.sign();
  }
}
