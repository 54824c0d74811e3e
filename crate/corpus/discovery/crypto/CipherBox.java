import javax.crypto.*;

public class CipherBox {
  public byte[] run(String transformation, SecretKey key, byte[] data) throws Exception {
    Cipher cipher = Cipher.getInstance(transformation);
    cipher.init(Cipher.ENCRYPT_MODE, key);
    return cipher.doFinal(data);
  }
}
