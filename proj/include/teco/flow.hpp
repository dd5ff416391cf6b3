#pragma once

#include <array>
#include <vector>

#include "teco/imgseq.hpp"
#include "teco/warp.hpp"

namespace teco {

/// Farnebäck parameters. `levels` counts pyramid images including the full
/// resolution one; `poly_n` is the radius of the expansion window.
struct FlowParams {
  double pyramid_scale = 0.5;
  int levels = 3;
  int window = 15;
  int iterations = 3;
  int poly_n = 5;
  double poly_sigma = 1.2;

  void validate() const;
};

inline constexpr int kMinPyramidSide = 16;

/// Level 0 is the input; each further level is blurred and resampled by
/// `scale` from the previous one. Stops before any side drops below 16 px.
std::vector<Frame> gaussian_pyramid(const Frame& luma, int levels, double scale);

/// Local quadratic model f(p + d) ~ d^T A d + b^T d + c per pixel, with
/// A = [[axx, axy], [axy, ayy]] and b = (bx, by) in pixel units.
struct PolyCoeffs {
  double c = 0, bx = 0, by = 0, axx = 0, ayy = 0, axy = 0;
};

struct PolyExpansion {
  int height = 0;
  int width = 0;
  std::vector<PolyCoeffs> coeffs;

  const PolyCoeffs& at(int y, int x) const {
    return coeffs[static_cast<std::size_t>(y) * width + x];
  }
};

PolyExpansion poly_expansion(const Frame& luma, int poly_n, double poly_sigma);

/// Dense flow from prev to next (prev(p) ~ next(p + flow(p))). Colour input
/// is converted to luma. Deterministic and single-threaded.
FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowParams& params = {});

}  // namespace teco
