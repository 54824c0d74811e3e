import javax.crypto.*;

public class InsecureMacCase {
  byte[] tag(SecretKey key, byte[] data) throws Exception {
    Mac mac = Mac.getInstance("HmacMD5");
    mac.init(key);
    return mac.doFinal(data);
  }
}
