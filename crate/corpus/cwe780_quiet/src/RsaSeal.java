import javax.crypto.*;
import java.security.*;

public class RsaSeal {
  byte[] seal(PublicKey recipient, byte[] data) throws Exception {
    Cipher cipher = Cipher.getInstance("RSA/ECB/OAEPWithSHA-256AndMGF1Padding");
    cipher.init(Cipher.ENCRYPT_MODE, recipient);
    return cipher.doFinal(data);
  }
}
