#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace teco {

enum class ColorSpace { kRgb, kLuma };

/// One image as float32 intensities, row-major with channels interleaved
/// (index = (y * width + x) * channels + c). Channels is 1 (luma) or 3 (rgb).
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, int channels, float fill = 0.0f);
  Frame(int height, int width, int channels, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  ColorSpace colorspace() const noexcept {
    return channels_ == 1 ? ColorSpace::kLuma : ColorSpace::kRgb;
  }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  float at(int y, int x, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float& at(int y, int x, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  bool same_shape(const Frame& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  std::string shape_string() const;

  // Identifies the frame to lookup-based perceptual backends
  // ("<parent dir>/<file name>" when loaded from disk).
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
  std::string label_;
};

/// Ordered frames of identical shape. start_index is the file index of
/// frames()[0].
class Sequence {
 public:
  Sequence() = default;
  explicit Sequence(std::vector<Frame> frames, int start_index = 0);

  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }
  int start_index() const noexcept { return start_index_; }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Frame>& frames() const noexcept { return frames_; }

  int height() const { return frames_.front().height(); }
  int width() const { return frames_.front().width(); }
  int channels() const { return frames_.front().channels(); }

  // Frames [first, first + count) with start_index advanced accordingly.
  Sequence slice(std::size_t first, std::size_t count) const;

 private:
  std::vector<Frame> frames_;
  int start_index_ = 0;
};

struct IndexRange {
  int first = 0;
  int last = 0;  // inclusive
};

Frame load_frame(const std::filesystem::path& path);
void save_frame(const Frame& frame, const std::filesystem::path& path);

Sequence load_sequence(const std::filesystem::path& dir,
                       const std::string& pattern = "%04d.png",
                       std::optional<IndexRange> range = std::nullopt);
void save_sequence(const Sequence& seq, const std::filesystem::path& dir,
                   const std::string& pattern = "%04d.png");

// Expands a printf-style template with a single integer conversion.
std::string format_frame_name(const std::string& pattern, int index);

/// BT.601 luma. Luma input is returned unchanged.
Frame to_luma(const Frame& frame);

Frame crop(const Frame& frame, int top, int left, int height, int width);

/// Drops `border` pixels from every side, then trims the remainder
/// symmetrically (floor before, ceil after) so both sides are multiples of
/// `divisor`.
Sequence protocol_crop(const Sequence& seq, int border = 8, int divisor = 8);
Frame protocol_crop(const Frame& frame, int border = 8, int divisor = 8);

Sequence skip_frames(const Sequence& seq, std::size_t head, std::size_t tail);

Frame resize_bilinear(const Frame& frame, int height, int width);
// Keys cubic (a = -0.5), edge-clamped.
Frame resize_bicubic(const Frame& frame, int height, int width);
// Separable Gaussian with replicated borders; ksize odd.
Frame gaussian_blur(const Frame& frame, double sigma, int ksize);

}  // namespace teco
