import java.util.Random;

public class WeakToken {
  int next() {
    Random random = new Random();
    return random.nextInt();
  }
}
