import javax.crypto.*;
import javax.crypto.spec.*;

public class FreshKey {
  byte[] seal(byte[] iv, byte[] plain) throws Exception {
    KeyGenerator gen = KeyGenerator.getInstance("AES");
    gen.init(256);
    SecretKey key = gen.generateKey();
    Cipher cipher = Cipher.getInstance("AES/CBC/PKCS5Padding");
    cipher.init(Cipher.ENCRYPT_MODE, key, new IvParameterSpec(iv));
    return cipher.doFinal(plain);
  }
}
