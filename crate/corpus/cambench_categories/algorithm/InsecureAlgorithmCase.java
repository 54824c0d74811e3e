import javax.crypto.*;

public class InsecureAlgorithmCase {
  byte[] seal(SecretKey key, byte[] plain) throws Exception {
    Cipher cipher = Cipher.getInstance("DES");
    cipher.init(Cipher.ENCRYPT_MODE, key);
    return cipher.doFinal(plain);
  }
}
