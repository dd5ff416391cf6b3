#include "teco/losses.hpp"

#include <algorithm>
#include <cmath>

#include "teco/error.hpp"
#include "teco/metrics.hpp"

namespace teco::losses {

FeatureMap::FeatureMap(int channels, int positions, std::vector<double> data)
    : channels_(channels), positions_(positions), data_(std::move(data)) {
  if (channels <= 0 || positions <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "feature map needs positive channels and positions");
  }
  if (data_.size() != static_cast<std::size_t>(channels) * positions) {
    throw Error(ErrorCode::kShapeMismatch, "feature data length does not match channels x positions");
  }
}

FeatureMap::FeatureMap(int channels, int positions, double fill)
    : FeatureMap(channels, positions,
                 std::vector<double>(static_cast<std::size_t>(std::max(channels, 0)) *
                                         static_cast<std::size_t>(std::max(positions, 0)),
                                     fill)) {}

void LossWeights::validate() const {
  for (double w : {warp, pp, adv, phi, phi_discriminator, content}) {
    if (!std::isfinite(w) || w < 0) {
      throw Error(ErrorCode::kInvalidArgument, "loss weights must be finite and >= 0");
    }
  }
}

LossWeights LossWeights::vsr() {
  return LossWeights{.warp = 1.0, .pp = 0.5, .adv = 1e-3, .phi = 0.2, .phi_discriminator = 1.0,
                     .content = 1.0};
}

LossWeights LossWeights::uvt() {
  return LossWeights{.warp = 0.0, .pp = 100.0, .adv = 0.5, .phi = 1e6, .phi_discriminator = 1e6,
                     .content = 10.0};
}

namespace {

double interior_mse(const Frame& a, const Frame& b, int margin) {
  if (margin == 0) return mean_sq_diff(a, b);
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShapeMismatch, "loss inputs differ: " + a.shape_string() + " vs " +
                                               b.shape_string());
  }
  if (margin < 0 || 2 * margin >= std::min(a.height(), a.width())) {
    throw Error(ErrorCode::kInvalidArgument, "margin too large for " + a.shape_string());
  }
  const int h = a.height() - 2 * margin, w = a.width() - 2 * margin;
  return mean_sq_diff(crop(a, margin, margin, h, w), crop(b, margin, margin, h, w));
}

}  // namespace

double warp_loss(const Sequence& a, std::span<const FlowField> flows, int margin) {
  if (flows.size() + 1 != a.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "warp loss needs one flow per consecutive pair: " + std::to_string(a.size()) +
                    " frames, " + std::to_string(flows.size()) + " flows");
  }
  double sum = 0.0;
  for (std::size_t t = 1; t < a.size(); ++t) {
    sum += interior_mse(a[t], backward_warp(a[t - 1], flows[t - 1]), margin);
  }
  return sum;
}

double pp_loss(std::span<const Frame> forward, std::span<const Frame> backward) {
  if (forward.size() != backward.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "ping-pong legs differ in length: " + std::to_string(forward.size()) + " vs " +
                    std::to_string(backward.size()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < forward.size(); ++t) sum += mean_sq_diff(forward[t], backward[t]);
  return sum;
}

double pp_loss(const Sequence& forward, const Sequence& backward) {
  return pp_loss(std::span<const Frame>(forward.frames()), std::span<const Frame>(backward.frames()));
}

double content_loss_vsr(const Frame& generated, const Frame& target) {
  return mean_sq_diff(generated, target);
}

double content_loss_uvt(const Frame& cycle_a, const Frame& a, const Frame& cycle_b, const Frame& b) {
  return mean_sq_diff(cycle_a, a) + mean_sq_diff(cycle_b, b);
}

namespace {

void require_scores(std::span<const double> d, const char* what) {
  if (d.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": no scores");
  for (double x : d) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": scores must be finite");
    }
  }
}

double neg_log(double p) { return -std::log(std::clamp(p, kLogEps, 1.0)); }

template <typename Fn>
double mean_over(std::span<const double> d, Fn fn) {
  double sum = 0.0;
  for (double x : d) sum += fn(x);
  return sum / static_cast<double>(d.size());
}

}  // namespace

double adv_g_vsr(std::span<const double> d_fake) {
  require_scores(d_fake, "adv_g_vsr");
  return mean_over(d_fake, neg_log);
}

double adv_g_uvt(std::span<const double> d_fake) {
  require_scores(d_fake, "adv_g_uvt");
  return mean_over(d_fake, [](double d) { return (d - 1.0) * (d - 1.0); });
}

double d_loss_vsr(std::span<const double> d_real, std::span<const double> d_fake) {
  require_scores(d_real, "d_loss_vsr");
  require_scores(d_fake, "d_loss_vsr");
  return mean_over(d_real, neg_log) + mean_over(d_fake, [](double d) { return neg_log(1.0 - d); });
}

double d_loss_uvt(std::span<const double> d_real, std::span<const double> d_fake) {
  require_scores(d_real, "d_loss_uvt");
  require_scores(d_fake, "d_loss_uvt");
  return mean_over(d_real, [](double d) { return (d - 1.0) * (d - 1.0); }) +
         mean_over(d_fake, [](double d) { return d * d; });
}

namespace {

void require_same(const FeatureMap& a, const FeatureMap& b, const char* what) {
  if (a.channels() != b.channels() || a.positions() != b.positions()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": feature shapes differ");
  }
}

}  // namespace

double cosine_feature_loss(const FeatureMap& generated, const FeatureMap& target) {
  require_same(generated, target, "cosine_feature_loss");
  double dot = 0.0, na = 0.0, nb = 0.0;
  const auto a = generated.data(), b = target.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na) * std::sqrt(nb), kCosineEps);
  return std::clamp(1.0 - dot / denom, 0.0, 2.0);
}

Gram gram_matrix(const FeatureMap& f) {
  const int c = f.channels(), p = f.positions();
  Gram g{c, std::vector<double>(static_cast<std::size_t>(c) * c)};
  for (int i = 0; i < c; ++i) {
    for (int j = i; j < c; ++j) {
      double sum = 0.0;
      for (int k = 0; k < p; ++k) sum += f.at(i, k) * f.at(j, k);
      sum /= p;
      g.data[static_cast<std::size_t>(i) * c + j] = sum;
      g.data[static_cast<std::size_t>(j) * c + i] = sum;
    }
  }
  return g;
}

double gram_loss(const FeatureMap& generated, const FeatureMap& target) {
  require_same(generated, target, "gram_loss");
  const Gram a = gram_matrix(generated), b = gram_matrix(target);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

TotalLoss total_generator_loss(const std::map<std::string, double>& parts, const LossWeights& w) {
  w.validate();
  const std::pair<const char*, double> weighted[] = {
      {"warp", w.warp}, {"pp", w.pp},   {"adv", w.adv}, {"phi", w.phi},
      {"phi_discriminator", w.phi_discriminator}, {"content", w.content}};
  for (const auto& [name, value] : parts) {
    const bool known = std::any_of(std::begin(weighted), std::end(weighted),
                                   [&](const auto& e) { return name == e.first; });
    if (!known) throw Error(ErrorCode::kInvalidArgument, "unknown loss part '" + name + "'");
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kInvalidArgument, "loss part '" + name + "' is not finite");
    }
  }
  TotalLoss total;
  for (const auto& [name, weight] : weighted) {
    auto it = parts.find(name);
    if (it == parts.end()) {
      if (weight != 0.0) total.missing.emplace_back(name);
      continue;
    }
    total.value += weight * it->second;
  }
  return total;
}

}  // namespace teco::losses
