import java.security.*;
import javax.crypto.*;

public class Checksums {
  byte[] fileDigest(byte[] contents) throws Exception {
    MessageDigest digest = MessageDigest.getInstance("SHA-512");
    return digest.digest(contents);
  }

  byte[] manifestTag(SecretKey key, byte[] manifest) throws Exception {
    Mac mac = Mac.getInstance("HmacSHA512");
    mac.init(key);
    return mac.doFinal(manifest);
  }
}
