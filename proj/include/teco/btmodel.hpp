#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace teco {

/// Pairwise preference counts: wins[i][j] = times item i was preferred over j.
struct VoteMatrix {
  std::vector<std::string> items;
  std::vector<std::vector<long long>> wins;

  std::size_t size() const noexcept { return items.size(); }
  void validate() const;
};

/// Reads `winner,loser,count` rows (optional header). Items are ordered by
/// first appearance; `anchor`, if given, is moved to position 0.
VoteMatrix read_votes_csv(const std::filesystem::path& path, const std::string& anchor = {});

struct BtOptions {
  bool smoothing = false;  // add half a pseudo-win each way to every compared pair
  double gradient_tolerance = 1e-10;
  int max_iterations = 500;
};

struct BtFit {
  std::vector<std::string> items;
  std::vector<double> scores;   // log-strengths, scores[0] == 0
  std::vector<double> stderrs;  // from inverse observed information; stderrs[0] == 0
  double log_likelihood = 0.0;
  int iterations = 0;
  bool smoothed = false;
};

/// Maximum-likelihood Bradley-Terry fit, P(i beats j) = e^si / (e^si + e^sj),
/// by Newton's method. Throws kDisconnected, kSeparation (no finite MLE,
/// e.g. a unanimous pair, unless smoothing is on) or kNotConverged.
BtFit fit_bradley_terry(const VoteMatrix& votes, const BtOptions& options = {});

double predict_win_prob(const std::vector<double>& scores, std::size_t i, std::size_t j);

}  // namespace teco
