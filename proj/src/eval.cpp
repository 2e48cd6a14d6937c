#include "urban3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "urban3d/error.hpp"
#include "urban3d/random.hpp"

namespace urban3d::eval {

void validate_config(const SplitConfig& cfg) {
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    throw InputError("split: test_fraction must be in (0, 1)");
  }
}

Split split(std::span<const double> y, const SplitConfig& cfg) {
  validate_config(cfg);
  const std::size_t n = y.size();
  if (n < 10) throw InputError("split: need at least 10 observations");
  Rng rng(derive_seed(cfg.seed, 0x5B17));
  Split out;

  auto take = [&](std::vector<std::size_t> group) {
    rng.shuffle(group.begin(), group.end());
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(group.size()) * cfg.test_fraction));
    out.test.insert(out.test.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(k));
    out.train.insert(out.train.end(), group.begin() + static_cast<std::ptrdiff_t>(k), group.end());
    return k;
  };

  if (cfg.stratify) {
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[y[i]].push_back(i);
    for (auto& [value, members] : groups) {
      const std::size_t size = members.size();
      const std::size_t k = take(std::move(members));
      if (k == 0 || k == size) {
        throw InputError("split: class " + std::to_string(value) + " with " + std::to_string(size) +
                         " members is absent from one side of the split");
      }
    }
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const std::size_t k = take(std::move(all));
    if (k == 0 || k == n) throw InputError("split: one side of the split is empty");
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.empty()) throw InputError("rmse: lengths differ or are zero");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(y.size()));
}

double auc(std::span<const double> y, std::span<const double> scores) {
  if (y.size() != scores.size()) throw InputError("auc: lengths differ");
  const std::size_t n = y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Average of the 1-based ranks i+1 .. j is a half-integer, exact in binary.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      const double v = y[order[k]];
      if (v != 0.0 && v != 1.0) throw InputError("auc: outcome must be 0/1");
      if (v == 1.0) {
        pos += 1.0;
        rank_sum += avg;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw InputError("auc: both classes must be present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace urban3d::eval
