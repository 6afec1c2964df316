#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seed {

// Binary PGM (P5, maxval 255), row-major.
struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void write_pgm(const PgmImage& image, const std::string& path);
PgmImage read_pgm(const std::string& path);

}  // namespace seed
