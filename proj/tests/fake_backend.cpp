// stdio protocol server used by tests: one JSON request per line in, one
// response per line out.
#include <iostream>
#include <string>

#include "fake_server.hpp"

int main() {
  std::ios::sync_with_stdio(false);
  for (std::string line; std::getline(std::cin, line);) {
    if (line.empty()) continue;
    std::cout << genscore::fake::respond(line) << '\n' << std::flush;
  }
}
