import java.security.*;

public class JwtSigner {
  byte[] issue(PrivateKey key, byte[] claims) throws Exception {
    Signature signer = Signature.getInstance("SHA256withRSA");
    signer.initSign(key);
    signer.update(claims);
    return signer.sign();
  }

  boolean accept(PublicKey key, byte[] claims, byte[] signature) throws Exception {
    Signature verifier = Signature.getInstance("SHA256withRSA");
    verifier.initVerify(key);
    verifier.update(claims);
    return verifier.verify(signature);
  }
}
