#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracles {

// Zermelo's fixed-point iteration (minorization-maximization) for the
// Bradley-Terry MLE, independent of the Newton solver. w[i][j] counts wins
// of i over j. Returns log-strengths pinned at item 0.
inline std::vector<double> bt_mm(const std::vector<std::vector<double>>& w) {
  const std::size_t k = w.size();
  std::vector<double> p(k, 1.0);
  for (int it = 0; it < 200000; ++it) {
    double change = 0;
    for (std::size_t i = 0; i < k; ++i) {
      double wins = 0, denom = 0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        wins += w[i][j];
        const double n = w[i][j] + w[j][i];
        if (n > 0) denom += n / (p[i] + p[j]);
      }
      const double next = wins / denom;
      change = std::max(change, std::abs(std::log(next / p[i])));
      p[i] = next;
    }
    const double p0 = p[0];
    for (double& x : p) x /= p0;
    if (change < 1e-13) break;
  }
  std::vector<double> s(k);
  for (std::size_t i = 0; i < k; ++i) s[i] = std::log(p[i]);
  return s;
}

}  // namespace oracles
