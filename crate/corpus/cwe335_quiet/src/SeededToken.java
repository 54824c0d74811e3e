import java.security.*;

public class SeededToken {
  byte[] token(byte[] entropy) throws Exception {
    SecureRandom random = new SecureRandom();
    random.setSeed(entropy);
    byte[] out = new byte[16];
    random.nextBytes(out);
    return out;
  }
}
