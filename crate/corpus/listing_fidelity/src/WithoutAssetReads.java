import java.security.*;
import java.security.cert.*;
import java.io.InputStream;

public class WithoutAssetReads {
  Certificate readCertificate(InputStream certificateStream) throws Exception {
    CertificateFactory factory = CertificateFactory.getInstance("X.509");
    return factory.generateCertificate(certificateStream);
  }

  PrivateKey readKey(KeyStore.PrivateKeyEntry pkEntry) throws Exception {
    KeyStore k = KeyStore.getInstance("PKCS12");
    PrivateKey tmpPrv = pkEntry.getPrivateKey();
    return tmpPrv;
  }
}
