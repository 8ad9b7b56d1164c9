#include "examples.hpp"

#include <exception>
#include <iostream>

// Usage: turnkit-example <dir>
int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <dir>\n";
    return 1;
  }
  try {
    turnkit::app::write_example_job(argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
