import javax.crypto.*;
import javax.crypto.spec.*;

public class SaltedDerivation {
  SecretKey derive(char[] password, byte[] salt) throws Exception {
    PBEKeySpec spec = new PBEKeySpec(password, salt, 65536, 256);
    SecretKeyFactory factory = SecretKeyFactory.getInstance("PBKDF2WithHmacSHA256");
    return factory.generateSecret(spec);
  }
}
