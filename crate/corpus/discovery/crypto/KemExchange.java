import javax.crypto.*;
import java.security.*;

public class KemExchange {
  SecretKey offer(PublicKey recipient) throws Exception {
    KEM kem = KEM.getInstance("ML-KEM");
    KEM.Encapsulator encapsulator = kem.newEncapsulator(recipient);
    KEM.Encapsulated result = encapsulator.encapsulate();
    return result.key();
  }

  SecretKey accept(PrivateKey mine, byte[] ciphertext) throws Exception {
    KEM kem = KEM.getInstance("ML-KEM");
    KEM.Decapsulator decapsulator = kem.newDecapsulator(mine);
    return decapsulator.decapsulate(ciphertext);
  }
}
