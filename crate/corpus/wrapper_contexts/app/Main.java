import javax.crypto.SecretKey;

public class Main {
  byte[] modern(SecretKey key, byte[] data) throws Exception {
    Encryptor box = new Encryptor();
    return box.run("AES/CBC/PKCS5Padding", key, data);
  }

  byte[] legacy(SecretKey key, byte[] data) throws Exception {
    Encryptor box = new Encryptor();
    return box.run("DES/ECB/PKCS5Padding", key, data);
  }
}
