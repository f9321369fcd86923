extern unsigned int __VERIFIER_nondet_uint();
extern void __assert_fail();
int main() {
  unsigned int x = __VERIFIER_nondet_uint();
  unsigned int y = x;
  unsigned int z = __VERIFIER_nondet_uint();
  while (x < 2) {
    x = x + 1;
    y = y + 1;
    z = x + z;
  }
  if (x != y) {
    __assert_fail();
  }
  return 0;
}
