#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seed/bev.hpp"
#include "seed/boxgeom.hpp"
#include "seed/dga.hpp"
#include "seed/queryset.hpp"

namespace seed {

// Monte Carlo BEV IoU: uniform samples over the joint axis-aligned bounding
// box of both footprints, counted by point-in-rotated-rectangle tests. An
// independent route around the polygon-clipping implementation.
double monte_carlo_bev_iou(const Box3D& a, const Box3D& b, std::uint64_t seed,
                           std::size_t samples);

// Central finite difference of bilinear_sample w.r.t. (row, col).
std::vector<double> finite_difference_sample_gradient(const BevFeatureMap& map,
                                                      const FeatureCoord& rc, double step);

// Attention over the undisplaced k x k grid of each reference box: the
// zero-offset special case of deformable grid attention, composed directly
// from grid points, bilinear samples, per-head softmax weights, and the
// value/output projections.
std::vector<double> box_attention_reference(const QuerySet& queries, const BevFeatureMap& map,
                                            const DgaParams& params);

struct OracleSuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double max_error = 0.0;
};

struct OracleReport {
  std::vector<OracleSuiteResult> suites;
  bool passed() const;
};

// Runs the derived-oracle suites: Hungarian vs brute force, rotated IoU vs
// Monte Carlo, analytic sampling Jacobian vs central differences, and
// zero-offset DGA vs box attention. inject_bug corrupts one comparison to
// exercise the failure path.
OracleReport run_oracle_suites(std::uint64_t seed, int trials, bool inject_bug = false);

}  // namespace seed
