import java.security.*;
import java.math.BigInteger;

public class WithAsset {
  byte[] signCri(PrivateKey key, BigInteger cri) throws Exception {
    Signature ecdsa = Signature.getInstance("SHA256withECDSA");
    ecdsa.initSign(key);
    ecdsa.update(cri.toByteArray());
    return ecdsa.sign();
  }

  KeyPair newPair() throws Exception {
    KeyPairGenerator pairGen = KeyPairGenerator.getInstance("RSA");
    pairGen.initialize(2048);
    KeyPair keyPair = pairGen.generateKeyPair();
    return keyPair;
  }
}
