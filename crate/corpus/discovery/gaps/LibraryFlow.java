import com.acme.vault.VaultClient;

public class LibraryFlow {
  byte[] seal(byte[] data) {
    VaultClient client = VaultClient.connect("production");
    return client.encrypt(data);
  }
}
