import java.security.*;

public class SeededToken {
  byte[] token() throws Exception {
    SecureRandom random = new SecureRandom();
    random.setSeed(123456789L);
    byte[] out = new byte[16];
    random.nextBytes(out);
    return out;
  }
}
