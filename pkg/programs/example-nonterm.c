extern unsigned int __VERIFIER_nondet_uint();

int main() {
  unsigned int x = __VERIFIER_nondet_uint();
  while (x < 10) {
    x = x + 2;
    if (x == 8) {
      x = 4;
    }
  }
  return 0;
}
