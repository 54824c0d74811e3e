import java.security.*;

public enum Algorithms {
  SHA256("SHA-256"),
  SHA512("SHA-512");

  private final String standardName;

  Algorithms(String standardName) {
    this.standardName = standardName;
  }

  byte[] digest(byte[] data) throws Exception {
    MessageDigest digest = MessageDigest.getInstance(standardName);
    return digest.digest(data);
  }
}
