#include "teco/btmodel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

#include "teco/error.hpp"

namespace teco {

void VoteMatrix::validate() const {
  const std::size_t k = items.size();
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two items");
  if (wins.size() != k) throw Error(ErrorCode::kShapeMismatch, "vote matrix must be k x k");
  for (std::size_t i = 0; i < k; ++i) {
    if (wins[i].size() != k) throw Error(ErrorCode::kShapeMismatch, "vote matrix must be k x k");
    if (wins[i][i] != 0) {
      throw Error(ErrorCode::kInvalidArgument, "item '" + items[i] + "' has self-comparisons");
    }
    for (long long w : wins[i]) {
      if (w < 0) throw Error(ErrorCode::kInvalidArgument, "vote counts must be non-negative");
    }
  }
}

VoteMatrix read_votes_csv(const std::filesystem::path& path, const std::string& anchor) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open votes file " + path.string());
  std::vector<std::string> order;
  std::map<std::string, std::size_t> index;
  std::vector<std::tuple<std::size_t, std::size_t, long long>> rows;
  auto id = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, order.size());
    if (inserted) order.push_back(name);
    return it->second;
  };
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string winner, loser, count;
    if (!std::getline(ss, winner, ',') || !std::getline(ss, loser, ',') || !std::getline(ss, count)) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": expected winner,loser,count");
    }
    winner = trim(winner);
    loser = trim(loser);
    count = trim(count);
    long long n = 0;
    try {
      std::size_t used = 0;
      n = std::stoll(count, &used);
      if (used != count.size()) throw std::invalid_argument(count);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": bad count '" + count + "'");
    }
    if (winner == loser) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": item compared with itself");
    }
    const std::size_t wi = id(winner);
    const std::size_t li = id(loser);
    rows.emplace_back(wi, li, n);
  }
  if (!anchor.empty()) {
    auto it = std::find(order.begin(), order.end(), anchor);
    if (it == order.end()) {
      throw Error(ErrorCode::kInvalidArgument, "anchor item '" + anchor + "' not in votes");
    }
    std::rotate(order.begin(), it, it + 1);
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  std::vector<std::size_t> remap(order.size());
  for (const auto& [name, old] : index) remap[old] = pos[name];

  VoteMatrix v;
  v.items = order;
  v.wins.assign(order.size(), std::vector<long long>(order.size(), 0));
  for (const auto& [w, l, n] : rows) {
    if (n < 0) throw Error(ErrorCode::kInvalidArgument, "vote counts must be non-negative");
    v.wins[remap[w]][remap[l]] += n;
  }
  return v;
}

namespace {

// Reachability over edges i -> j where adj(i, j) is true.
std::vector<bool> reachable_from(std::size_t start, std::size_t k,
                                 const std::function<bool(std::size_t, std::size_t)>& adj) {
  std::vector<bool> seen(k, false);
  std::vector<std::size_t> stack = {start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < k; ++j) {
      if (!seen[j] && adj(i, j)) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

BtFit fit_bradley_terry(const VoteMatrix& votes, const BtOptions& options) {
  votes.validate();
  const std::size_t k = votes.size();

  std::vector<std::vector<double>> w(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) w[i][j] = static_cast<double>(votes.wins[i][j]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += w[i][j] + w[j][i];
    if (total == 0.0) {
      throw Error(ErrorCode::kDisconnected, "item '" + votes.items[i] + "' has no comparisons");
    }
  }
  const auto undirected = reachable_from(0, k, [&](auto i, auto j) { return w[i][j] + w[j][i] > 0; });
  for (std::size_t i = 0; i < k; ++i) {
    if (!undirected[i]) {
      throw Error(ErrorCode::kDisconnected, "item '" + votes.items[i] +
                                                "' is not connected to '" + votes.items[0] + "'");
    }
  }
  if (options.smoothing) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (w[i][j] + w[j][i] > 0) {
          w[i][j] += 0.5;
          w[j][i] += 0.5;
        }
      }
    }
  }
  // A finite maximum exists iff every item can reach every other through
  // "beat" edges.
  for (std::size_t s = 0; s < k; ++s) {
    const auto down = reachable_from(s, k, [&](auto i, auto j) { return w[i][j] > 0; });
    for (std::size_t t = 0; t < k; ++t) {
      if (!down[t]) {
        throw Error(ErrorCode::kSeparation,
                    "no finite fit: '" + votes.items[s] + "' never beats '" + votes.items[t] +
                        "' even indirectly (use smoothing)");
      }
    }
  }

  const Eigen::Index m = static_cast<Eigen::Index>(k) - 1;  // free parameters s_1..s_{k-1}
  std::vector<double> s(k, 0.0);

  auto log_likelihood = [&](const std::vector<double>& x) {
    double ll = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (w[i][j] > 0) ll += w[i][j] * log_sigmoid(x[i] - x[j]);
      }
    }
    return ll;
  };
  auto derivatives = [&](const std::vector<double>& x, Eigen::VectorXd& grad, Eigen::MatrixXd& info) {
    grad.setZero(m);
    info.setZero(m, m);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double n = w[i][j] + w[j][i];
        if (n == 0.0) continue;
        const double p = sigmoid(x[i] - x[j]);
        const double g = w[i][j] - n * p;  // d ll / d s_i; the negation for s_j
        const double h = n * p * (1.0 - p);
        const Eigen::Index a = static_cast<Eigen::Index>(i) - 1, b = static_cast<Eigen::Index>(j) - 1;
        if (i > 0) {
          grad[a] += g;
          info(a, a) += h;
        }
        if (j > 0) {
          grad[b] -= g;
          info(b, b) += h;
        }
        if (i > 0 && j > 0) {
          info(a, b) -= h;
          info(b, a) -= h;
        }
      }
    }
  };

  Eigen::VectorXd grad;
  Eigen::MatrixXd info;
  BtFit fit;
  fit.items = votes.items;
  fit.smoothed = options.smoothing;
  double ll = log_likelihood(s);
  bool converged = false;
  for (int it = 0; it <= options.max_iterations; ++it) {
    derivatives(s, grad, info);
    if (grad.norm() <= options.gradient_tolerance) {
      fit.iterations = it;
      converged = true;
      break;
    }
    if (it == options.max_iterations) break;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    double t = 1.0;
    std::vector<double> trial(k, 0.0);
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      for (Eigen::Index a = 0; a < m; ++a) trial[a + 1] = s[a + 1] + t * step[a];
      const double trial_ll = log_likelihood(trial);
      if (trial_ll >= ll - 1e-12 * std::abs(ll)) {
        ll = trial_ll;
        break;
      }
    }
    s = trial;
  }
  if (!converged) {
    throw Error(ErrorCode::kNotConverged, "Bradley-Terry fit did not converge in " +
                                              std::to_string(options.max_iterations) + " iterations");
  }
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
  fit.scores = s;
  fit.stderrs.assign(k, 0.0);
  for (Eigen::Index a = 0; a < m; ++a) fit.stderrs[a + 1] = std::sqrt(std::max(cov(a, a), 0.0));
  fit.log_likelihood = log_likelihood(s);
  return fit;
}

double predict_win_prob(const std::vector<double>& scores, std::size_t i, std::size_t j) {
  if (i >= scores.size() || j >= scores.size()) {
    throw Error(ErrorCode::kInvalidArgument, "item index out of range");
  }
  return sigmoid(scores[i] - scores[j]);
}

}  // namespace teco
