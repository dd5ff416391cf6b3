#include <Eigen/Dense>

#include <chrono>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "teco/error.hpp"
#include "teco/flow.hpp"

using namespace teco;

namespace {

// Weighted least squares fit of the six-term quadratic at (y0, x0), solved
// with explicit normal equations over a replicated-border window.
Eigen::Matrix<double, 6, 1> fit_oracle(const Frame& f, int y0, int x0, int n, double sigma) {
  Eigen::Matrix<double, 6, 6> lhs = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  for (int dy = -n; dy <= n; ++dy) {
    for (int dx = -n; dx <= n; ++dx) {
      const double w = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
      Eigen::Matrix<double, 6, 1> basis;
      basis << 1, dx, dy, dx * dx, dy * dy, dx * dy;
      const int y = std::clamp(y0 + dy, 0, f.height() - 1), x = std::clamp(x0 + dx, 0, f.width() - 1);
      lhs += w * basis * basis.transpose();
      rhs += w * basis * f.at(y, x);
    }
  }
  return lhs.ldlt().solve(rhs);
}

struct Stats {
  double mean_u = 0, mean_v = 0, epe = 0;
};

Stats interior_stats(const FlowField& f, double u, double v, double keep) {
  const int my = static_cast<int>(f.height() * (1 - keep) / 2), mx = static_cast<int>(f.width() * (1 - keep) / 2);
  Stats s;
  int n = 0;
  for (int y = my; y < f.height() - my; ++y) {
    for (int x = mx; x < f.width() - mx; ++x) {
      s.mean_u += f.u_at(y, x);
      s.mean_v += f.v_at(y, x);
      s.epe += std::hypot(f.u_at(y, x) - u, f.v_at(y, x) - v);
      ++n;
    }
  }
  s.mean_u /= n;
  s.mean_v /= n;
  s.epe /= n;
  return s;
}

}  // namespace

TEST_CASE("params validation") {
  FlowParams p;
  CHECK_NOTHROW(p.validate());
  p.window = 4;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.pyramid_scale = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.levels = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("gaussian pyramid sizes") {
  const auto p = gaussian_pyramid(fixtures::texture(64, 64, 1), 3, 0.5);
  REQUIRE(p.size() == 3);
  CHECK(p[0].width() == 64);
  CHECK(p[1].width() == 32);
  CHECK(p[2].width() == 16);
  CHECK(gaussian_pyramid(Frame(16, 16, 1, 0.5f), 3, 0.5).size() == 1);
  for (const Frame& level : gaussian_pyramid(Frame(80, 64, 1, 0.3f), 4, 0.5)) {
    for (float x : level.data()) CHECK(x == doctest::Approx(0.3).epsilon(1e-6));
  }
}

TEST_CASE("poly expansion closed forms") {
  const int n = 5;
  const double sigma = 1.2;
  SUBCASE("constant") {
    const auto e = poly_expansion(Frame(24, 24, 1, 0.7f), n, sigma);
    for (int y = n; y < 24 - n; ++y) {
      for (int x = n; x < 24 - n; ++x) {
        const auto& p = e.at(y, x);
        CHECK(p.c == doctest::Approx(0.7).epsilon(1e-6));
        CHECK(std::abs(p.bx) < 1e-9);
        CHECK(std::abs(p.by) < 1e-9);
        CHECK(std::abs(p.axx) < 1e-9);
        CHECK(std::abs(p.ayy) < 1e-9);
        CHECK(std::abs(p.axy) < 1e-9);
      }
    }
  }
  SUBCASE("ramp") {
    Frame f(24, 24, 1);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) f.at(y, x) = 0.03f * x;
    }
    const auto e = poly_expansion(f, n, sigma);
    for (int y = n; y < 24 - n; ++y) {
      for (int x = n; x < 24 - n; ++x) {
        CHECK(e.at(y, x).bx == doctest::Approx(0.03).epsilon(1e-5));
        CHECK(std::abs(e.at(y, x).by) < 1e-7);
        CHECK(std::abs(e.at(y, x).axx) < 1e-7);
      }
    }
  }
  SUBCASE("quadratic") {
    Frame f(24, 24, 1);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) f.at(y, x) = static_cast<float>((x - 12) * (x - 12));
    }
    const auto e = poly_expansion(f, n, sigma);
    const auto& p = e.at(12, 12);
    CHECK(p.axx == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.axx > 0);
    CHECK(std::abs(p.ayy) < 1e-6);
    CHECK(std::abs(p.axy) < 1e-6);
  }
}

TEST_CASE("poly expansion matches brute-force normal equations everywhere") {
  const Frame f = fixtures::random_frame(15, 17, 1, 77);
  for (int n : {2, 3, 5}) {
    const double sigma = n == 5 ? 1.2 : 0.9;
    const auto e = poly_expansion(f, n, sigma);
    for (int y = 0; y < f.height(); y += 2) {
      for (int x = 0; x < f.width(); x += 3) {
        const auto want = fit_oracle(f, y, x, n, sigma);
        const auto& p = e.at(y, x);
        CHECK(p.c == doctest::Approx(want[0]).epsilon(1e-7));
        CHECK(p.bx == doctest::Approx(want[1]).epsilon(1e-7));
        CHECK(p.by == doctest::Approx(want[2]).epsilon(1e-7));
        CHECK(p.axx == doctest::Approx(want[3]).epsilon(1e-7));
        CHECK(p.ayy == doctest::Approx(want[4]).epsilon(1e-7));
        CHECK(p.axy == doctest::Approx(want[5] / 2).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("identical frames give near-zero flow") {
  const Frame a = fixtures::texture(96, 128, 3);
  const FlowField f = estimate_flow(a, a);
  double m = 0;
  for (std::size_t i = 0; i < f.pixel_count(); ++i) m = std::max({m, double(std::abs(f.u()[i])), double(std::abs(f.v()[i]))});
  CHECK(m <= 0.05);
  CHECK(f.direction() == FlowDirection::kForward);
}

TEST_CASE("recovers a (3, -2) roll of a smooth texture") {
  const Frame a = fixtures::texture(256, 256, 7);
  const Frame b = fixtures::roll(a, 3, -2);
  const auto t0 = std::chrono::steady_clock::now();
  const FlowField f = estimate_flow(a, b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Stats s = interior_stats(f, 3.0, -2.0, 0.8);
  CHECK(std::abs(s.mean_u - 3.0) <= 0.3);
  CHECK(std::abs(s.mean_v + 2.0) <= 0.3);
  CHECK(s.epe <= 0.5);
  CHECK(secs <= 2.0);
}

TEST_CASE("one pixel translation of a strong-gradient pattern") {
  Frame a(96, 96, 1);
  for (int y = 0; y < 96; ++y) {
    for (int x = 0; x < 96; ++x) {
      a.at(y, x) = static_cast<float>(0.5 + 0.4 * std::sin(x * 0.45) * std::cos(y * 0.35));
    }
  }
  const FlowField f = estimate_flow(a, fixtures::roll(a, 1, 0));
  const Stats s = interior_stats(f, 1.0, 0.0, 0.8);
  CHECK(s.mean_u == doctest::Approx(1.0).epsilon(0.2));
  CHECK(std::abs(s.mean_v) <= 0.2);
}

TEST_CASE("approximate antisymmetry") {
  const Frame a = fixtures::texture(128, 128, 21);
  const Frame b = fixtures::roll(a, -2, 1);
  const FlowField ab = estimate_flow(a, b), ba = estimate_flow(b, a);
  double dev = 0;
  for (std::size_t i = 0; i < ab.pixel_count(); ++i) {
    dev += std::abs(ab.u()[i] + ba.u()[i]) + std::abs(ab.v()[i] + ba.v()[i]);
  }
  CHECK(dev / (2.0 * ab.pixel_count()) <= 0.3);
}

TEST_CASE("constant intensity offset barely moves the flow") {
  const Frame a = fixtures::texture(96, 96, 5);
  const Frame b = fixtures::roll(a, 1, 1);
  Frame a2 = a, b2 = b;
  for (float& x : a2.data()) x += 0.05f;
  for (float& x : b2.data()) x += 0.05f;
  const FlowField f1 = estimate_flow(a, b), f2 = estimate_flow(a2, b2);
  double m = 0;
  for (std::size_t i = 0; i < f1.pixel_count(); ++i) {
    m = std::max({m, double(std::abs(f1.u()[i] - f2.u()[i])), double(std::abs(f1.v()[i] - f2.v()[i]))});
  }
  CHECK(m <= 1e-3);
}

TEST_CASE("deterministic and colour input goes through luma") {
  const Frame a = fixtures::texture(64, 80, 8, 2.0, 3);
  const Frame b = fixtures::roll(a, 2, 0);
  const FlowField f1 = estimate_flow(a, b), f2 = estimate_flow(a, b);
  CHECK(std::equal(f1.u().begin(), f1.u().end(), f2.u().begin()));
  CHECK(std::equal(f1.v().begin(), f1.v().end(), f2.v().begin()));
  const FlowField fl = estimate_flow(to_luma(a), to_luma(b));
  CHECK(std::equal(f1.u().begin(), f1.u().end(), fl.u().begin()));
}

TEST_CASE("flow rejects mismatched frames") {
  CHECK_THROWS_AS(estimate_flow(Frame(32, 32, 1), Frame(32, 33, 1)), Error);
}
