import java.security.*;

public class InsecureDigestCase {
  byte[] hash(byte[] data) throws Exception {
    MessageDigest digest = MessageDigest.getInstance("MD5");
    return digest.digest(data);
  }
}
