import java.security.*;

public class Fingerprint {
  byte[] hash(byte[] data) throws Exception {
    MessageDigest digest = MessageDigest.getInstance("MD5");
    return digest.digest(data);
  }
}
