#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seed {

// BEVT1 tensor file: bytes 0-4 magic "BEVT1", u32 LE ndim, ndim x u32 LE dims,
// then product(dims) x f32 LE values, row-major (last dim fastest).
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

void write_tensor(const std::string& path, const std::vector<std::uint32_t>& dims,
                  const std::vector<float>& data);
Tensor read_tensor(const std::string& path);

// Double-precision convenience wrappers; values pass through f32 at the file
// boundary.
void write_tensor_f64(const std::string& path, const std::vector<std::uint32_t>& dims,
                      const std::vector<double>& data);
std::pair<std::vector<std::uint32_t>, std::vector<double>> read_tensor_f64(
    const std::string& path);

}  // namespace seed
