#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "teco/imgseq.hpp"
#include "teco/warp.hpp"

// Loss terms for the VSR and UVT generator/discriminator objectives. Every
// squared L2 norm is a mean squared error, so values do not depend on
// resolution.
namespace teco::losses {

inline constexpr double kLogEps = 1e-8;
inline constexpr double kCosineEps = 1e-12;

/// Channels x positions feature activations, row-major by channel.
class FeatureMap {
 public:
  FeatureMap(int channels, int positions, std::vector<double> data);
  FeatureMap(int channels, int positions, double fill = 0.0);

  int channels() const noexcept { return channels_; }
  int positions() const noexcept { return positions_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  double at(int c, int p) const { return data_[static_cast<std::size_t>(c) * positions_ + p]; }
  double& at(int c, int p) { return data_[static_cast<std::size_t>(c) * positions_ + p]; }

 private:
  int channels_;
  int positions_;
  std::vector<double> data_;
};

/// Square matrix stored row-major.
struct Gram {
  int size = 0;
  std::vector<double> data;
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * size + j]; }
};

struct LossWeights {
  double warp = 0.0;
  double pp = 0.0;
  double adv = 0.0;
  double phi = 0.0;             // feature-space term on the fixed perceptual network
  double phi_discriminator = 0.0;  // feature-space term on discriminator features
  double content = 0.0;

  void validate() const;

  /// VSR preset: warp 1.0, pp 0.5, adv 1e-3, phi 0.2 (VGG) / 1.0 (D), content 1.0.
  static LossWeights vsr();
  /// UVT preset: warp 0 (pre-trained flow), pp 100, adv 0.5, content 10,
  /// phi at its initial value 1e6 for both feature terms.
  static LossWeights uvt();
};

/// Sum over t of MSE(a_t, W(a_{t-1}, flows[t-1])), optionally ignoring a
/// `margin`-pixel frame border.
double warp_loss(const Sequence& a, std::span<const FlowField> flows, int margin = 0);
double pp_loss(const Sequence& forward, const Sequence& backward);
/// Empty legs (a one-frame PP sequence) give zero.
double pp_loss(std::span<const Frame> forward, std::span<const Frame> backward);

double content_loss_vsr(const Frame& generated, const Frame& target);
double content_loss_uvt(const Frame& cycle_a, const Frame& a, const Frame& cycle_b, const Frame& b);

/// Non-saturating generator loss: mean(-log d).
double adv_g_vsr(std::span<const double> d_fake);
/// Least-squares generator loss: mean((d - 1)^2).
double adv_g_uvt(std::span<const double> d_fake);
double d_loss_vsr(std::span<const double> d_real, std::span<const double> d_fake);
double d_loss_uvt(std::span<const double> d_real, std::span<const double> d_fake);

double cosine_feature_loss(const FeatureMap& generated, const FeatureMap& target);
/// G = F F^T / positions.
Gram gram_matrix(const FeatureMap& features);
double gram_loss(const FeatureMap& generated, const FeatureMap& target);

struct TotalLoss {
  double value = 0.0;
  std::vector<std::string> missing;  // parts absent from the input, counted as 0
  bool warning() const noexcept { return !missing.empty(); }
};

/// Part names: warp, pp, adv, phi, phi_discriminator, content. Parts with a
/// non-zero weight that are absent are reported in `missing`.
TotalLoss total_generator_loss(const std::map<std::string, double>& parts, const LossWeights& w);

}  // namespace teco::losses
