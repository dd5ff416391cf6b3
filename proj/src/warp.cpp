#include "teco/warp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "teco/error.hpp"

namespace teco {

FlowField::FlowField(int height, int width, FlowDirection direction)
    : height_(height), width_(width), direction_(direction) {
  if (height <= 0 || width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "flow dimensions must be positive");
  }
  u_.assign(pixel_count(), 0.0f);
  v_.assign(pixel_count(), 0.0f);
}

FlowField::FlowField(int height, int width, std::vector<float> u, std::vector<float> v,
                     FlowDirection direction)
    : FlowField(height, width, direction) {
  if (u.size() != pixel_count() || v.size() != pixel_count()) {
    throw Error(ErrorCode::kShapeMismatch, "flow component length does not match its shape");
  }
  auto finite = [](const std::vector<float>& c) {
    return std::all_of(c.begin(), c.end(), [](float x) { return std::isfinite(x); });
  };
  if (!finite(u) || !finite(v)) {
    throw Error(ErrorCode::kInvalidArgument, "flow must be finite everywhere");
  }
  u_ = std::move(u);
  v_ = std::move(v);
}

Frame backward_warp(const Frame& frame, const FlowField& flow) {
  if (!flow.matches(frame)) {
    throw Error(ErrorCode::kShapeMismatch,
                "flow " + std::to_string(flow.height()) + "x" + std::to_string(flow.width()) +
                    " does not match frame " + frame.shape_string());
  }
  const int h = frame.height(), w = frame.width(), c = frame.channels();
  Frame out(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = std::clamp(x + static_cast<double>(flow.u_at(y, x)), 0.0, w - 1.0);
      const double sy = std::clamp(y + static_cast<double>(flow.v_at(y, x)), 0.0, h - 1.0);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
      const double w10 = (1 - fx) * fy, w11 = fx * fy;
      for (int k = 0; k < c; ++k) {
        out.at(y, x, k) = static_cast<float>(w00 * frame.at(y0, x0, k) + w01 * frame.at(y0, x1, k) +
                                             w10 * frame.at(y1, x0, k) + w11 * frame.at(y1, x1, k));
      }
    }
  }
  out.set_label(frame.label());
  return out;
}

FlowField scale_flow(const FlowField& flow, float factor) {
  FlowField out = flow;
  for (float& x : out.u()) x *= factor;
  for (float& x : out.v()) x *= factor;
  return out;
}

Frame zero_border(const Frame& frame, int margin) {
  if (margin < 0 || 2 * margin >= std::min(frame.height(), frame.width())) {
    throw Error(ErrorCode::kInvalidArgument,
                "border margin " + std::to_string(margin) + " too large for " +
                    frame.shape_string());
  }
  Frame out = frame;
  const int h = frame.height(), w = frame.width(), c = frame.channels();
  for (int y = 0; y < h; ++y) {
    const bool row_border = y < margin || y >= h - margin;
    for (int x = 0; x < w; ++x) {
      if (row_border || x < margin || x >= w - margin) {
        for (int k = 0; k < c; ++k) out.at(y, x, k) = 0.0f;
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------ .flo

namespace {

constexpr float kFloTag = 202021.25f;  // "PIEH" read as a little-endian float

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  os.write(reinterpret_cast<const char*>(&bits), 4);
}

template <typename T>
T get_le(std::istream& is) {
  std::uint32_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

}  // namespace

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  os.write("PIEH", 4);
  put_le<std::int32_t>(os, flow.width());
  put_le<std::int32_t>(os, flow.height());
  const auto u = flow.u();
  const auto v = flow.v();
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    put_le<float>(os, u[i]);
    put_le<float>(os, v[i]);
  }
  if (!os) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  if (get_le<float>(is) != kFloTag) {
    throw Error(ErrorCode::kUnsupportedFormat, "missing PIEH tag in " + path.string());
  }
  const auto width = get_le<std::int32_t>(is);
  const auto height = get_le<std::int32_t>(is);
  if (!is || width <= 0 || height <= 0) {
    throw Error(ErrorCode::kUnsupportedFormat, "bad .flo header in " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<float> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = get_le<float>(is);
    v[i] = get_le<float>(is);
  }
  if (!is) throw Error(ErrorCode::kUnsupportedFormat, "truncated .flo file " + path.string());
  return FlowField(height, width, std::move(u), std::move(v));
}

}  // namespace teco
