#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "teco/imgseq.hpp"
#include "teco/warp.hpp"

namespace fixtures {

inline teco::Frame random_frame(int h, int w, int c, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  teco::Frame f(h, w, c);
  for (float& x : f.data()) x = u(rng);
  return f;
}

// Uniform noise blurred to a smooth texture, rescaled to [0.1, 0.9].
inline teco::Frame texture(int h, int w, std::uint32_t seed, double sigma = 2.0, int channels = 1) {
  const int ksize = static_cast<int>(std::lround(sigma * 6)) | 1;
  teco::Frame f = teco::gaussian_blur(random_frame(h, w, channels, seed), sigma, ksize);
  float lo = 1e9f, hi = -1e9f;
  for (float x : f.data()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (float& x : f.data()) x = 0.1f + 0.8f * (x - lo) / (hi - lo);
  return f;
}

// out(y + dy, x + dx) = f(y, x), wrapping.
inline teco::Frame roll(const teco::Frame& f, int dx, int dy) {
  teco::Frame out(f.height(), f.width(), f.channels());
  const int h = f.height(), w = f.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < f.channels(); ++c) {
        out.at(((y + dy) % h + h) % h, ((x + dx) % w + w) % w, c) = f.at(y, x, c);
      }
    }
  }
  return out;
}

// Frames of `base` translated by t * (dx, dy).
inline teco::Sequence translating(const teco::Frame& base, int n, int dx, int dy) {
  std::vector<teco::Frame> frames;
  for (int t = 0; t < n; ++t) frames.push_back(roll(base, t * dx, t * dy));
  return teco::Sequence(frames);
}

inline teco::Sequence constant_sequence(const teco::Frame& f, int n) {
  return teco::Sequence(std::vector<teco::Frame>(static_cast<std::size_t>(n), f));
}

inline teco::Frame add_noise(const teco::Frame& f, double sigma, std::mt19937& rng) {
  std::normal_distribution<float> n(0.0f, static_cast<float>(sigma));
  teco::Frame out = f;
  for (float& x : out.data()) x = std::clamp(x + n(rng), 0.0f, 1.0f);
  return out;
}

inline teco::FlowField constant_flow(int h, int w, float u, float v) {
  return teco::FlowField(h, w, std::vector<float>(static_cast<std::size_t>(h) * w, u),
                         std::vector<float>(static_cast<std::size_t>(h) * w, v));
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("teco_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
