import javax.crypto.*;
import javax.crypto.spec.*;

public class InsecureKeyCase {
  byte[] seal(byte[] iv, byte[] plain) throws Exception {
    SecretKeySpec key = new SecretKeySpec("a1b2c3d4e5f60718".getBytes(), "AES");
    Cipher cipher = Cipher.getInstance("AES/CBC/PKCS5Padding");
    cipher.init(Cipher.ENCRYPT_MODE, key, new IvParameterSpec(iv));
    return cipher.doFinal(plain);
  }
}
