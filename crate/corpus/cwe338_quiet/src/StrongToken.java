import java.security.*;

public class StrongToken {
  byte[] next() {
    SecureRandom random = new SecureRandom();
    byte[] out = new byte[32];
    random.nextBytes(out);
    return out;
  }
}
