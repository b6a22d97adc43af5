#include <iostream>

#include "crm/cli.hpp"

int main(int argc, char** argv) {
  return crm::cli::run(argc, argv, std::cout, std::cerr);
}
