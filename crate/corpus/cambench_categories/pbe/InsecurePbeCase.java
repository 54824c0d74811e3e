import javax.crypto.*;
import javax.crypto.spec.*;

public class InsecurePbeCase {
  SecretKey derive(char[] password, byte[] salt) throws Exception {
    PBEKeySpec spec = new PBEKeySpec(password, salt, 65536, 128);
    SecretKeyFactory factory = SecretKeyFactory.getInstance("PBEWithMD5AndDES");
    return factory.generateSecret(spec);
  }
}
