#pragma once

#include <span>
#include <vector>

#include "seed/boxgeom.hpp"

namespace seed {

// Flat index of a query that was not lifted from a BEV cell.
inline constexpr long long kSyntheticIndex = -1;

// Ordered collection of query feature vectors with optional boxes and named
// score vectors. Attached vectors are either empty or of length count.
struct QuerySet {
  int count = 0;
  int channels = 0;
  std::vector<double> features;          // count x channels, row-major
  std::vector<long long> flat_indices;   // source cell in [0, H*W) or synthetic
  std::vector<Box3D> boxes;
  std::vector<double> cls_scores;        // classification score
  std::vector<double> loc_scores;        // localization score (predicted 3D IoU)
  std::vector<double> quality_scores;    // fused quality score
  std::vector<double> fused_scores;      // quality score carried by selected queries

  static QuerySet empty(int channels);

  std::span<double> row(int i) {
    return {features.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const double> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }

  bool has_boxes() const { return !boxes.empty(); }

  // Throws validation_error when any attached vector length disagrees with
  // count or a score falls outside [0, 1].
  void validate() const;
};

}  // namespace seed
