#include <cstdio>

int main() {
  std::puts("reflux cli placeholder");
  return 0;
}
