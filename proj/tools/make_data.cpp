// Regenerates the bundled data files:
//   make_data <out-dir>
// writes dct_12x12x144.srec and synthetic_64x64x8.srec.

#include <filesystem>
#include <iostream>

#include "specrec/csc.hpp"
#include "specrec/fixtures.hpp"
#include "specrec/io.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_data <out-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  try {
    std::filesystem::create_directories(dir);
    specrec::save_dictionary(specrec::dct_dictionary(12, 12), dir / "dct_12x12x144.srec");
    specrec::save_cube(specrec::make_synthetic_cube({}), dir / "synthetic_64x64x8.srec");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
