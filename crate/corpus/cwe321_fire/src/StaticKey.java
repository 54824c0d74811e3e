import javax.crypto.*;
import javax.crypto.spec.*;

public class StaticKey {
  byte[] seal(byte[] iv, byte[] plain) throws Exception {
    SecretKeySpec key = new SecretKeySpec("0123456789abcdef".getBytes(), "AES");
    Cipher cipher = Cipher.getInstance("AES/CBC/PKCS5Padding");
    cipher.init(Cipher.ENCRYPT_MODE, key, new IvParameterSpec(iv));
    return cipher.doFinal(plain);
  }
}
