#include <iostream>

#include "slc/cli.hpp"
#include "slc/runtime.hpp"

int main(int argc, char** argv) {
  slc::configure_allocator();
  return slc::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
