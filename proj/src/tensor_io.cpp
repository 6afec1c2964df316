#include "seed/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "seed/error.hpp"

namespace seed {

namespace {

constexpr char kMagic[5] = {'B', 'E', 'V', 'T', '1'};

void put_u32le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32le(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

void put_f32le(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32le(os, bits);
}

bool get_f32le(std::istream& is, float& v) {
  std::uint32_t bits;
  if (!get_u32le(is, bits)) return false;
  std::memcpy(&v, &bits, 4);
  return true;
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

void write_tensor(const std::string& path, const std::vector<std::uint32_t>& dims,
                  const std::vector<float>& data) {
  if (dims.empty()) {
    throw io_error(tensor_io_code::bad_dims, "write_tensor: empty dims list");
  }
  std::size_t expect = 1;
  for (auto d : dims) {
    if (d == 0) throw io_error(tensor_io_code::bad_dims, "write_tensor: zero dim");
    expect *= d;
  }
  if (expect != data.size()) {
    throw io_error(tensor_io_code::size_mismatch,
                   "write_tensor: dims product " + std::to_string(expect) +
                       " != data length " + std::to_string(data.size()));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error(tensor_io_code::open_failed, "write_tensor: cannot open " + path);
  os.write(kMagic, 5);
  put_u32le(os, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32le(os, d);
  for (float v : data) put_f32le(os, v);
  os.flush();
  if (!os) throw io_error(tensor_io_code::write_failed, "write_tensor: write failed for " + path);
}

Tensor read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error(tensor_io_code::open_failed, "read_tensor: cannot open " + path);
  char magic[5];
  if (!is.read(magic, 5)) {
    throw io_error(tensor_io_code::truncated, "read_tensor: truncated magic in " + path);
  }
  if (std::memcmp(magic, kMagic, 5) != 0) {
    throw io_error(tensor_io_code::bad_magic, "read_tensor: bad magic in " + path);
  }
  std::uint32_t ndim = 0;
  if (!get_u32le(is, ndim)) {
    throw io_error(tensor_io_code::truncated, "read_tensor: truncated header in " + path);
  }
  if (ndim == 0 || ndim > 8) {
    throw io_error(tensor_io_code::bad_dims,
                   "read_tensor: ndim " + std::to_string(ndim) + " out of range in " + path);
  }
  Tensor t;
  t.dims.resize(ndim);
  std::size_t count = 1;
  for (auto& d : t.dims) {
    if (!get_u32le(is, d)) {
      throw io_error(tensor_io_code::truncated, "read_tensor: truncated dims in " + path);
    }
    if (d == 0) throw io_error(tensor_io_code::bad_dims, "read_tensor: zero dim in " + path);
    if (count > std::numeric_limits<std::size_t>::max() / d) {
      throw io_error(tensor_io_code::bad_dims, "read_tensor: dims overflow in " + path);
    }
    count *= d;
  }
  t.data.resize(count);
  for (auto& v : t.data) {
    if (!get_f32le(is, v)) {
      throw io_error(tensor_io_code::truncated, "read_tensor: truncated data in " + path);
    }
  }
  // Trailing bytes mean the header undercounts the payload.
  char extra;
  if (is.read(&extra, 1)) {
    throw io_error(tensor_io_code::size_mismatch, "read_tensor: trailing bytes in " + path);
  }
  return t;
}

void write_tensor_f64(const std::string& path, const std::vector<std::uint32_t>& dims,
                      const std::vector<double>& data) {
  std::vector<float> f(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) f[i] = static_cast<float>(data[i]);
  write_tensor(path, dims, f);
}

std::pair<std::vector<std::uint32_t>, std::vector<double>> read_tensor_f64(
    const std::string& path) {
  Tensor t = read_tensor(path);
  std::vector<double> d(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) d[i] = static_cast<double>(t.data[i]);
  return {std::move(t.dims), std::move(d)};
}

}  // namespace seed
