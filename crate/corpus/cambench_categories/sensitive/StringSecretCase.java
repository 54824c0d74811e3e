import javax.crypto.*;
import javax.crypto.spec.*;

public class StringSecretCase {
  SecretKey derive(String password, byte[] salt) throws Exception {
    PBEKeySpec spec = new PBEKeySpec(password.toCharArray(), salt, 65536, 256);
    SecretKeyFactory factory = SecretKeyFactory.getInstance("PBKDF2WithHmacSHA256");
    return factory.generateSecret(spec);
  }
}
