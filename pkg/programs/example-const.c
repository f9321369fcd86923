extern void __assert_fail();
int main() {
  unsigned int x = 0;
  unsigned int y = 0;
  unsigned int z = 0;
  while (x < 2) {
    x++;
    y = z + 1;
  }
  if (z != 0) {
    __assert_fail();
  }
  return 0;
}
