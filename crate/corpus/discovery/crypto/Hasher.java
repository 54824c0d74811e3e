import java.security.*;
import javax.crypto.*;

public class Hasher {
  byte[] contentHash(byte[] data) throws Exception {
    MessageDigest digest = MessageDigest.getInstance("SHA-256");
    return digest.digest(data);
  }

  byte[] authTag(SecretKey key, byte[] data) throws Exception {
    Mac mac = Mac.getInstance("HmacSHA256");
    mac.init(key);
    return mac.doFinal(data);
  }
}
