import javax.crypto.*;

public class Wrapping {
  SecretKey newWrappingKey() throws Exception {
    KeyGenerator generator = KeyGenerator.getInstance("AES");
    generator.init(256);
    return generator.generateKey();
  }

  byte[] protect(SecretKey wrappingKey, SecretKey payload) throws Exception {
    Cipher cipher = Cipher.getInstance("AESWrap");
    cipher.init(Cipher.WRAP_MODE, wrappingKey);
    return cipher.wrap(payload);
  }

  Key recover(SecretKey wrappingKey, byte[] wrapped) throws Exception {
    Cipher cipher = Cipher.getInstance("AESWrap");
    cipher.init(Cipher.UNWRAP_MODE, wrappingKey);
    return cipher.unwrap(wrapped, "AES", Cipher.SECRET_KEY);
  }
}
