import javax.crypto.*;

public class DefaultAes {
  byte[] seal(SecretKey key, byte[] plain) throws Exception {
    Cipher cipher = Cipher.getInstance("AES");
    cipher.init(Cipher.ENCRYPT_MODE, key);
    return cipher.doFinal(plain);
  }
}
