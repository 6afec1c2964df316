#include "seed/pgm.hpp"

#include <fstream>

#include "seed/error.hpp"

namespace seed {

void write_pgm(const PgmImage& image, const std::string& path) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw validation_error("write_pgm: inconsistent image dims");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error(tensor_io_code::open_failed, "write_pgm: cannot open " + path);
  os << "P5\n" << image.width << " " << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()),
           static_cast<std::streamsize>(image.pixels.size()));
  os.flush();
  if (!os) throw io_error(tensor_io_code::write_failed, "write_pgm: write failed for " + path);
}

PgmImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error(tensor_io_code::open_failed, "read_pgm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || w < 1 || h < 1) {
    throw io_error(tensor_io_code::bad_magic, "read_pgm: not a P5/255 image: " + path);
  }
  is.get();  // single whitespace after maxval
  PgmImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size()))) {
    throw io_error(tensor_io_code::truncated, "read_pgm: truncated pixel data in " + path);
  }
  return img;
}

}  // namespace seed
