import javax.crypto.*;
import java.security.*;

public class RsaSeal {
  KeyPair newPair() throws Exception {
    KeyPairGenerator generator = KeyPairGenerator.getInstance("RSA");
    generator.initialize(3072);
    return generator.generateKeyPair();
  }

  byte[] seal(PublicKey recipient, byte[] data) throws Exception {
    Cipher cipher = Cipher.getInstance("RSA/ECB/OAEPWithSHA-256AndMGF1Padding");
    cipher.init(Cipher.ENCRYPT_MODE, recipient);
    return cipher.doFinal(data);
  }

  byte[] open(PrivateKey mine, byte[] sealed) throws Exception {
    Cipher cipher = Cipher.getInstance("RSA/ECB/OAEPWithSHA-256AndMGF1Padding");
    cipher.init(Cipher.DECRYPT_MODE, mine);
    return cipher.doFinal(sealed);
  }
}
