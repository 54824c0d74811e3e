import javax.crypto.*;
import javax.crypto.spec.*;

public class Registration {
  SecretKey derive(byte[] salt) throws Exception {
    PBEKeySpec spec = new PBEKeySpec("sup3r-s3cret".toCharArray(), salt, 65536, 256);
    SecretKeyFactory factory = SecretKeyFactory.getInstance("PBKDF2WithHmacSHA256");
    return factory.generateSecret(spec);
  }
}
