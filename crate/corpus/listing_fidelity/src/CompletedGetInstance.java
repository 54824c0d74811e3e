import javax.crypto.*;

public class CompletedGetInstance {
  byte[] seal(SecretKey key, byte[] plain) throws Exception {
    Cipher c = Cipher.getInstance("AES/GCM/NoPadding");
    c.init(Cipher.ENCRYPT_MODE, key);
    return c.doFinal(plain);
  }
}
