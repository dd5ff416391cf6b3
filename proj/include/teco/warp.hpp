#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "teco/imgseq.hpp"

namespace teco {

enum class FlowDirection { kForward, kBackward };

/// Per-pixel displacement in pixels. u is the x (column) component, v the y
/// (row) component. A flow estimated from (prev, next) satisfies
/// prev(p) ~ next(p + flow(p)).
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width, FlowDirection direction = FlowDirection::kForward);
  FlowField(int height, int width, std::vector<float> u, std::vector<float> v,
            FlowDirection direction = FlowDirection::kForward);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  FlowDirection direction() const noexcept { return direction_; }
  void set_direction(FlowDirection d) noexcept { direction_ = d; }

  std::span<const float> u() const noexcept { return u_; }
  std::span<const float> v() const noexcept { return v_; }
  std::span<float> u() noexcept { return u_; }
  std::span<float> v() noexcept { return v_; }

  float u_at(int y, int x) const noexcept { return u_[static_cast<std::size_t>(y) * width_ + x]; }
  float v_at(int y, int x) const noexcept { return v_[static_cast<std::size_t>(y) * width_ + x]; }

  bool matches(const Frame& f) const noexcept {
    return f.height() == height_ && f.width() == width_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> u_;
  std::vector<float> v_;
  FlowDirection direction_ = FlowDirection::kForward;
};

/// out(x, y) = f(x + u, y + v), bilinear, sample coordinates clamped to the
/// image. Zero flow returns the input bit-exactly.
Frame backward_warp(const Frame& frame, const FlowField& flow);

FlowField scale_flow(const FlowField& flow, float factor);

/// Sets every pixel closer than `margin` to any side to zero.
Frame zero_border(const Frame& frame, int margin = 16);

// Middlebury .flo: "PIEH", int32 width, int32 height, interleaved float32 (u, v).
void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

}  // namespace teco
