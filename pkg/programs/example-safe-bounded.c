extern unsigned int __VERIFIER_nondet_uint();
extern void __assert_fail();

int main() {
  unsigned int n = __VERIFIER_nondet_uint();
  unsigned int x = __VERIFIER_nondet_uint();
  unsigned int y = n - x;
  while (x > 0 && x < 3) {
    x = x - 1;
    y = y + 1;
  }
  if (x + y != n) {
    __assert_fail();
  }
  return 0;
}
