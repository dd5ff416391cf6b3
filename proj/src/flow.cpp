#include "teco/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "teco/error.hpp"

namespace teco {

void FlowParams::validate() const {
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pyramid_scale must lie in (0, 1)");
  }
  if (levels < 1) throw Error(ErrorCode::kInvalidArgument, "levels must be >= 1");
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "window must be a positive odd size");
  }
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  if (poly_n < 1 || poly_n % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "poly_n must be a positive odd size");
  }
  if (!(poly_sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "poly_sigma must be > 0");
}

std::vector<Frame> gaussian_pyramid(const Frame& luma, int levels, double scale) {
  if (luma.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian_pyramid expects a 1-channel frame");
  }
  if (!(scale > 0.0 && scale < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pyramid scale must lie in (0, 1)");
  }
  std::vector<Frame> pyramid;
  pyramid.push_back(luma);
  const double sigma = (1.0 / scale - 1.0) * 0.5;
  const int ksize = std::max(3, static_cast<int>(std::lround(sigma * 5)) | 1);
  for (int k = 1; k < levels; ++k) {
    const Frame& prev = pyramid.back();
    const int h = static_cast<int>(std::lround(prev.height() * scale));
    const int w = static_cast<int>(std::lround(prev.width() * scale));
    if (h < kMinPyramidSide || w < kMinPyramidSide) break;
    pyramid.push_back(resize_bilinear(gaussian_blur(prev, sigma, ksize), h, w));
  }
  return pyramid;
}

namespace {

// Basis order: 1, x, y, x^2, y^2, xy.
using Mat6 = std::array<std::array<double, 6>, 6>;

Mat6 invert6(Mat6 a) {
  Mat6 inv{};
  for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 6; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 6; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = a[col][col];
    for (int j = 0; j < 6; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (int r = 0; r < 6; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (int j = 0; j < 6; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

}  // namespace

PolyExpansion poly_expansion(const Frame& luma, int poly_n, double poly_sigma) {
  if (luma.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "poly_expansion expects a 1-channel frame");
  }
  if (poly_n < 1 || !(poly_sigma > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "poly_n must be >= 1 and poly_sigma > 0");
  }
  const int n = poly_n;
  const int h = luma.height(), w = luma.width();

  // Gaussian applicability, normalized to unit sum.
  std::vector<double> g(2 * n + 1);
  double gsum = 0.0;
  for (int k = -n; k <= n; ++k) {
    g[k + n] = std::exp(-0.5 * k * k / (poly_sigma * poly_sigma));
    gsum += g[k + n];
  }
  for (double& x : g) x /= gsum;

  Mat6 gram{};
  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      const double wgt = g[y + n] * g[x + n];
      const std::array<double, 6> basis = {1.0, double(x), double(y), double(x) * x,
                                           double(y) * y, double(x) * y};
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) gram[i][j] += wgt * basis[i] * basis[j];
      }
    }
  }
  const Mat6 inv = invert6(gram);

  // Vertical pass: per pixel, sums of g, k*g, k^2*g against the column.
  std::vector<std::array<double, 3>> vert(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::array<double, 3> acc{};
      for (int k = -n; k <= n; ++k) {
        const double f = luma.at(std::clamp(y + k, 0, h - 1), x);
        const double gk = g[k + n];
        acc[0] += gk * f;
        acc[1] += gk * k * f;
        acc[2] += gk * k * k * f;
      }
      vert[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }

  PolyExpansion out;
  out.height = h;
  out.width = w;
  out.coeffs.resize(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const auto* row = &vert[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      std::array<double, 6> r{};
      for (int k = -n; k <= n; ++k) {
        const auto& v = row[std::clamp(x + k, 0, w - 1)];
        const double gk = g[k + n];
        r[0] += gk * v[0];
        r[1] += gk * k * v[0];
        r[2] += gk * v[1];
        r[3] += gk * k * k * v[0];
        r[4] += gk * v[2];
        r[5] += gk * k * v[1];
      }
      std::array<double, 6> coef{};
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) coef[i] += inv[i][j] * r[j];
      }
      out.coeffs[static_cast<std::size_t>(y) * w + x] =
          PolyCoeffs{coef[0], coef[1], coef[2], coef[3], coef[4], coef[5] * 0.5};
    }
  }
  return out;
}

namespace {

// Intensities are expanded in 8-bit units so the solver regularizer below
// has its conventional magnitude.
constexpr double kIntensityScale = 255.0;
constexpr double kSolveRegularizer = 1e-3;
constexpr int kBorder = 5;
constexpr std::array<double, kBorder> kBorderWeight = {0.14, 0.14, 0.4472, 0.4472, 0.4472};

// Per pixel normal-equation terms: G11, G12, G22, h1, h2 (x, y order).
using Terms = std::array<double, 5>;

struct Displacement {
  std::vector<double> u;
  std::vector<double> v;
};

PolyCoeffs sample_bilinear(const PolyExpansion& r, double fx, double fy) {
  fx = std::clamp(fx, 0.0, r.width - 1.0);
  fy = std::clamp(fy, 0.0, r.height - 1.0);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, r.width - 1), y1 = std::min(y0 + 1, r.height - 1);
  const double ax = fx - x0, ay = fy - y0;
  const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
  const PolyCoeffs &p00 = r.at(y0, x0), &p01 = r.at(y0, x1), &p10 = r.at(y1, x0), &p11 = r.at(y1, x1);
  auto mix = [&](double PolyCoeffs::*m) {
    return w00 * p00.*m + w01 * p01.*m + w10 * p10.*m + w11 * p11.*m;
  };
  return PolyCoeffs{mix(&PolyCoeffs::c),   mix(&PolyCoeffs::bx),  mix(&PolyCoeffs::by),
                    mix(&PolyCoeffs::axx), mix(&PolyCoeffs::ayy), mix(&PolyCoeffs::axy)};
}

std::vector<Terms> update_terms(const PolyExpansion& r0, const PolyExpansion& r1,
                                const Displacement& d) {
  const int h = r0.height, w = r0.width;
  std::vector<Terms> terms(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double dx = d.u[i], dy = d.v[i];
      const PolyCoeffs& p0 = r0.at(y, x);
      const PolyCoeffs p1 = sample_bilinear(r1, x + dx, y + dy);

      const double axx = 0.5 * (p0.axx + p1.axx);
      const double ayy = 0.5 * (p0.ayy + p1.ayy);
      const double axy = 0.5 * (p0.axy + p1.axy);
      double bx = 0.5 * (p0.bx - p1.bx) + axx * dx + axy * dy;
      double by = 0.5 * (p0.by - p1.by) + axy * dx + ayy * dy;

      double s = 1.0;
      if (x < kBorder) s *= kBorderWeight[x];
      if (x >= w - kBorder) s *= kBorderWeight[w - 1 - x];
      if (y < kBorder) s *= kBorderWeight[y];
      if (y >= h - kBorder) s *= kBorderWeight[h - 1 - y];
      const double sxx = axx * s, syy = ayy * s, sxy = axy * s;
      bx *= s;
      by *= s;

      terms[i] = {sxx * sxx + sxy * sxy, sxy * (sxx + syy), syy * syy + sxy * sxy,
                  sxx * bx + sxy * by, sxy * bx + syy * by};
    }
  }
  return terms;
}

// Normalized box mean with replicated borders.
std::vector<Terms> box_mean(const std::vector<Terms>& src, int h, int w, int window) {
  const int m = window / 2;
  std::vector<Terms> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Terms acc{};
      for (int k = -m; k <= m; ++k) {
        const auto& s = src[static_cast<std::size_t>(y) * w + std::clamp(x + k, 0, w - 1)];
        for (int j = 0; j < 5; ++j) acc[j] += s[j];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  const double norm = 1.0 / (static_cast<double>(window) * window);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Terms acc{};
      for (int k = -m; k <= m; ++k) {
        const auto& s = tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
        for (int j = 0; j < 5; ++j) acc[j] += s[j];
      }
      for (int j = 0; j < 5; ++j) acc[j] *= norm;
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

void solve_displacement(const std::vector<Terms>& blurred, Displacement& d) {
  for (std::size_t i = 0; i < blurred.size(); ++i) {
    const auto& [g11, g12, g22, h1, h2] = blurred[i];
    const double inv_det = 1.0 / (g11 * g22 - g12 * g12 + kSolveRegularizer);
    d.u[i] = (g22 * h1 - g12 * h2) * inv_det;
    d.v[i] = (g11 * h2 - g12 * h1) * inv_det;
  }
}

Frame scaled(const Frame& f, double factor) {
  Frame out = f;
  for (float& x : out.data()) x = static_cast<float>(x * factor);
  return out;
}

Displacement upsample(const Displacement& d, int h0, int w0, int h1, int w1) {
  const Frame u(h0, w0, 1, std::vector<float>(d.u.begin(), d.u.end()));
  const Frame v(h0, w0, 1, std::vector<float>(d.v.begin(), d.v.end()));
  const Frame uu = resize_bilinear(u, h1, w1);
  const Frame vv = resize_bilinear(v, h1, w1);
  const double sx = static_cast<double>(w1) / w0, sy = static_cast<double>(h1) / h0;
  Displacement out;
  out.u.resize(uu.size());
  out.v.resize(vv.size());
  for (std::size_t i = 0; i < uu.size(); ++i) {
    out.u[i] = uu.data()[i] * sx;
    out.v[i] = vv.data()[i] * sy;
  }
  return out;
}

}  // namespace

FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowParams& params) {
  params.validate();
  if (!prev.same_shape(next)) {
    throw Error(ErrorCode::kShapeMismatch,
                "flow inputs differ: " + prev.shape_string() + " vs " + next.shape_string());
  }
  const auto pyr0 = gaussian_pyramid(scaled(to_luma(prev), kIntensityScale), params.levels,
                                     params.pyramid_scale);
  const auto pyr1 = gaussian_pyramid(scaled(to_luma(next), kIntensityScale), params.levels,
                                     params.pyramid_scale);

  Displacement d;
  for (int k = static_cast<int>(pyr0.size()) - 1; k >= 0; --k) {
    const int h = pyr0[k].height(), w = pyr0[k].width();
    if (d.u.empty()) {
      d.u.assign(static_cast<std::size_t>(h) * w, 0.0);
      d.v.assign(static_cast<std::size_t>(h) * w, 0.0);
    } else {
      d = upsample(d, pyr0[k + 1].height(), pyr0[k + 1].width(), h, w);
    }
    const PolyExpansion r0 = poly_expansion(pyr0[k], params.poly_n, params.poly_sigma);
    const PolyExpansion r1 = poly_expansion(pyr1[k], params.poly_n, params.poly_sigma);
    for (int it = 0; it < params.iterations; ++it) {
      solve_displacement(box_mean(update_terms(r0, r1, d), h, w, params.window), d);
    }
  }

  std::vector<float> u(d.u.size()), v(d.v.size());
  std::transform(d.u.begin(), d.u.end(), u.begin(), [](double x) { return static_cast<float>(x); });
  std::transform(d.v.begin(), d.v.end(), v.begin(), [](double x) { return static_cast<float>(x); });
  return FlowField(prev.height(), prev.width(), std::move(u), std::move(v), FlowDirection::kForward);
}

}  // namespace teco
