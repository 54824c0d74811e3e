import javax.crypto.SecretKey;
import java.security.SecureRandom;

public class TokenService {
  byte[] freshToken() {
    SecureRandom random = new SecureRandom();
    byte[] token = new byte[32];
    random.nextBytes(token);
    return token;
  }

  byte[] sealToken(SecretKey key, byte[] token) throws Exception {
    CipherBox box = new CipherBox();
    return box.run("AES/CBC/PKCS5Padding", key, token);
  }
}
