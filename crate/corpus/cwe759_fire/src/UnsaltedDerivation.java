import javax.crypto.*;
import javax.crypto.spec.*;

public class UnsaltedDerivation {
  SecretKey derive(char[] password) throws Exception {
    PBEKeySpec spec = new PBEKeySpec(password);
    SecretKeyFactory factory = SecretKeyFactory.getInstance("PBKDF2WithHmacSHA256");
    return factory.generateSecret(spec);
  }
}
