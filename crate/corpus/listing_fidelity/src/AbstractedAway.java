public class AbstractedAway {
  byte[] run() throws Exception {
    String text = "my bytes";
    MyHash hash = new MyHash();
    byte[] digest = hash.sha256(text.getBytes());
    return digest;
  }
}
