#include <vector>

#include "rrlaws/cli.hpp"

int main(int argc, char** argv) {
  return rrlaws::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
