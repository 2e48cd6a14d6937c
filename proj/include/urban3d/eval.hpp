#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace urban3d::eval {

struct SplitConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  bool stratify = false;
};

void validate_config(const SplitConfig& cfg);

/// Row positions, each side sorted ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then the first round(n * fraction) rows go to the test
/// side. Stratified splits do this per distinct outcome value, so each class
/// keeps its share up to rounding; a class missing from either side is an
/// InputError.
Split split(std::span<const double> y, const SplitConfig& cfg);

double rmse(std::span<const double> y, std::span<const double> yhat);

/// Mann-Whitney statistic with average ranks for ties. `y` must be 0/1 with
/// both classes present.
double auc(std::span<const double> y, std::span<const double> scores);

}  // namespace urban3d::eval
