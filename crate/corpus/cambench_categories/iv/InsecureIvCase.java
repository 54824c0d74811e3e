import javax.crypto.*;
import javax.crypto.spec.*;

public class InsecureIvCase {
  byte[] seal(SecretKey key, byte[] plain) throws Exception {
    byte[] fixed = new byte[]{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    IvParameterSpec iv = new IvParameterSpec(fixed);
    Cipher cipher = Cipher.getInstance("AES/CBC/PKCS5Padding");
    cipher.init(Cipher.ENCRYPT_MODE, key, iv);
    return cipher.doFinal(plain);
  }
}
