extern unsigned int __VERIFIER_nondet_uint();

int main() {
  unsigned int x = __VERIFIER_nondet_uint();
  unsigned int y = 0;
  if (x > 10) {
    y = x - 10;
  } else {
    y = 10 - x;
  }
  return 0;
}
