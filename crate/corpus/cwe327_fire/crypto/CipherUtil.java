import javax.crypto.*;

public class CipherUtil {
  byte[] encrypt(SecretKey key, byte[] data) throws Exception {
    Cipher cipher = Cipher.getInstance("DES");
    cipher.init(Cipher.ENCRYPT_MODE, key);
    return cipher.doFinal(data);
  }
}
