#include "teco/imgseq.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "teco/error.hpp"

namespace teco {

namespace fs = std::filesystem;

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kLengthMismatch: return "length mismatch";
    case ErrorCode::kFileNotFound: return "file not found";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kUnsupportedBitDepth: return "unsupported bit depth";
    case ErrorCode::kMissingFrame: return "missing frame";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBackend: return "backend error";
    case ErrorCode::kDisconnected: return "disconnected comparison graph";
    case ErrorCode::kSeparation: return "separation";
    case ErrorCode::kNotConverged: return "not converged";
  }
  return "unknown";
}

// ---------------------------------------------------------------- Frame

Frame::Frame(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame must have 1 or 3 channels, got " + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Frame::Frame(int height, int width, int channels, std::vector<float> data)
    : Frame(height, width, channels) {
  if (data.size() != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "frame data length " + std::to_string(data.size()) +
                    " does not match " + shape_string());
  }
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "frame data must be finite");
    }
  }
  data_ = std::move(data);
}

std::string Frame::shape_string() const {
  std::ostringstream os;
  os << height_ << "x" << width_ << "x" << channels_;
  return os.str();
}

// ------------------------------------------------------------- Sequence

Sequence::Sequence(std::vector<Frame> frames, int start_index)
    : frames_(std::move(frames)), start_index_(start_index) {
  if (frames_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sequence must contain at least one frame");
  }
  const Frame& first = frames_.front();
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (!frames_[i].same_shape(first)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "frame " + std::to_string(start_index + static_cast<int>(i)) +
                      " has shape " + frames_[i].shape_string() + ", expected " +
                      first.shape_string());
    }
  }
}

Sequence Sequence::slice(std::size_t first, std::size_t count) const {
  if (first + count > frames_.size() || count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sequence slice out of range");
  }
  std::vector<Frame> out(frames_.begin() + static_cast<std::ptrdiff_t>(first),
                         frames_.begin() + static_cast<std::ptrdiff_t>(first + count));
  return Sequence(std::move(out), start_index_ + static_cast<int>(first));
}

// ------------------------------------------------------------------ PNG

namespace {

struct PngHeader {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

PngHeader read_png_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::array<unsigned char, 29> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  static constexpr std::array<unsigned char, 8> kSignature = {0x89, 'P', 'N', 'G',
                                                              '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != static_cast<std::streamsize>(buf.size()) ||
      !std::equal(kSignature.begin(), kSignature.end(), buf.begin()) ||
      std::string(buf.begin() + 12, buf.begin() + 16) != "IHDR") {
    throw Error(ErrorCode::kUnsupportedFormat, "not a PNG file: " + path.string());
  }
  PngHeader h;
  h.width = static_cast<int>(read_be32(buf.data() + 16));
  h.height = static_cast<int>(read_be32(buf.data() + 20));
  h.bit_depth = buf[24];
  h.color_type = buf[25];
  return h;
}

}  // namespace

Frame load_frame(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, "no such file: " + path.string());
  }
  const PngHeader header = read_png_header(path);
  if (header.bit_depth != 8) {
    throw Error(ErrorCode::kUnsupportedBitDepth,
                "unsupported bit depth " + std::to_string(header.bit_depth) + " in " +
                    path.string());
  }
  int channels = 0;
  switch (header.color_type) {
    case PNG_COLOR_TYPE_GRAY: channels = 1; break;
    case PNG_COLOR_TYPE_RGB:
    case PNG_COLOR_TYPE_PALETTE: channels = 3; break;
    default:
      throw Error(ErrorCode::kUnsupportedFormat,
                  "PNG with alpha channel is not supported: " + path.string());
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "cannot decode " + path.string() + ": " + image.message);
  }
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kUnsupportedFormat, "cannot decode " + path.string() + ": " + msg);
  }

  std::vector<float> data(raw.size());
  std::transform(raw.begin(), raw.end(), data.begin(),
                 [](png_byte v) { return static_cast<float>(v) / 255.0f; });
  Frame frame(static_cast<int>(image.height), static_cast<int>(image.width), channels,
              std::move(data));
  const fs::path parent = path.parent_path().filename();
  frame.set_label(parent.empty() ? path.filename().string()
                                 : (parent / path.filename()).generic_string());
  return frame;
}

void save_frame(const Frame& frame, const fs::path& path) {
  if (frame.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot save an empty frame");
  std::vector<png_byte> raw(frame.size());
  const auto src = frame.data();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const float v = std::clamp(src[i], 0.0f, 1.0f);
    raw[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = frame.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + image.message);
  }
}

// ------------------------------------------------------------- sequences

std::string format_frame_name(const std::string& pattern, int index) {
  const int n = std::snprintf(nullptr, 0, pattern.c_str(), index);
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "bad frame name pattern: " + pattern);
  std::string out(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(out.data(), out.size(), pattern.c_str(), index);
  out.resize(static_cast<std::size_t>(n));
  return out;
}

namespace {

// Translates a printf template with exactly one %d / %0Nd into a regex with
// one capture group.
std::regex pattern_to_regex(const std::string& pattern) {
  static const std::regex conv(R"(%(0?)(\d*)d)");
  std::smatch m;
  if (!std::regex_search(pattern, m, conv)) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame name pattern needs one integer conversion: " + pattern);
  }
  auto escape = [](const std::string& s) {
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    return std::regex_replace(s, special, R"(\$&)");
  };
  std::string digits = m[2].length() > 0 && m[1].length() > 0
                           ? "(\\d{" + m[2].str() + ",})"
                           : "(\\d+)";
  return std::regex(escape(m.prefix().str()) + digits + escape(m.suffix().str()));
}

}  // namespace

Sequence load_sequence(const fs::path& dir, const std::string& pattern,
                       std::optional<IndexRange> range) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kFileNotFound, "no such directory: " + dir.string());
  }
  const std::regex re = pattern_to_regex(pattern);
  std::map<int, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, re)) {
      const int index = std::stoi(m[1].str());
      if (format_frame_name(pattern, index) == name) found.emplace(index, entry.path());
    }
  }
  if (found.empty()) {
    throw Error(ErrorCode::kFileNotFound,
                "no frames matching '" + pattern + "' in " + dir.string());
  }
  int first = found.begin()->first;
  int last = found.rbegin()->first;
  if (range) {
    if (range->first > range->last) {
      throw Error(ErrorCode::kInvalidArgument, "empty frame range");
    }
    first = range->first;
    last = range->last;
  }
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(last - first + 1));
  for (int i = first; i <= last; ++i) {
    auto it = found.find(i);
    if (it == found.end()) {
      throw Error(ErrorCode::kMissingFrame,
                  "missing frame " + std::to_string(i) + " in " + dir.string());
    }
    frames.push_back(load_frame(it->second));
  }
  return Sequence(std::move(frames), first);
}

void save_sequence(const Sequence& seq, const fs::path& dir, const std::string& pattern) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    save_frame(seq[i], dir / format_frame_name(pattern, seq.start_index() + static_cast<int>(i)));
  }
}

// ------------------------------------------------------ colour and crops

Frame to_luma(const Frame& frame) {
  if (frame.channels() == 1) return frame;
  Frame out(frame.height(), frame.width(), 1);
  const auto src = frame.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    dst[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2];
  }
  out.set_label(frame.label());
  return out;
}

Frame crop(const Frame& frame, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height <= 0 || width <= 0 || top + height > frame.height() ||
      left + width > frame.width()) {
    throw Error(ErrorCode::kInvalidArgument, "crop window outside frame " + frame.shape_string());
  }
  Frame out(height, width, frame.channels());
  const int c = frame.channels();
  for (int y = 0; y < height; ++y) {
    const auto row = frame.data().subspan(
        (static_cast<std::size_t>(top + y) * frame.width() + left) * c, static_cast<std::size_t>(width) * c);
    std::copy(row.begin(), row.end(), &out.at(y, 0));
  }
  out.set_label(frame.label());
  return out;
}

namespace {

struct CropWindow {
  int top, left, height, width;
};

CropWindow protocol_window(int height, int width, int border, int divisor) {
  if (border < 0 || divisor < 1) {
    throw Error(ErrorCode::kInvalidArgument, "border must be >= 0 and divisor >= 1");
  }
  int h = height - 2 * border;
  int w = width - 2 * border;
  if (h <= 0 || w <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "protocol crop leaves no pixels for " + std::to_string(height) + "x" +
                    std::to_string(width) + " with border " + std::to_string(border));
  }
  const int excess_h = h % divisor;
  const int excess_w = w % divisor;
  CropWindow win{border + excess_h / 2, border + excess_w / 2, h - excess_h, w - excess_w};
  if (win.height <= 0 || win.width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "protocol crop leaves no divisor-aligned pixels");
  }
  return win;
}

}  // namespace

Frame protocol_crop(const Frame& frame, int border, int divisor) {
  const CropWindow w = protocol_window(frame.height(), frame.width(), border, divisor);
  return crop(frame, w.top, w.left, w.height, w.width);
}

Sequence protocol_crop(const Sequence& seq, int border, int divisor) {
  const CropWindow w = protocol_window(seq.height(), seq.width(), border, divisor);
  std::vector<Frame> out;
  out.reserve(seq.size());
  for (const Frame& f : seq.frames()) out.push_back(crop(f, w.top, w.left, w.height, w.width));
  return Sequence(std::move(out), seq.start_index());
}

Sequence skip_frames(const Sequence& seq, std::size_t head, std::size_t tail) {
  if (head + tail >= seq.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "skipping " + std::to_string(head) + "+" + std::to_string(tail) +
                    " frames leaves nothing of " + std::to_string(seq.size()));
  }
  return seq.slice(head, seq.size() - head - tail);
}

// ------------------------------------------------------------ resampling

Frame resize_bilinear(const Frame& frame, int height, int width) {
  if (height == frame.height() && width == frame.width()) return frame;
  Frame out(height, width, frame.channels());
  const int c = frame.channels();
  const double sy = static_cast<double>(frame.height()) / height;
  const double sx = static_cast<double>(frame.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, frame.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, frame.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, frame.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, frame.width() - 1);
      const double wx = fx - x0;
      for (int k = 0; k < c; ++k) {
        const double top = (1 - wx) * frame.at(y0, x0, k) + wx * frame.at(y0, x1, k);
        const double bot = (1 - wx) * frame.at(y1, x0, k) + wx * frame.at(y1, x1, k);
        out.at(y, x, k) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  }
  out.set_label(frame.label());
  return out;
}

namespace {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2.0) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0.0;
}

}  // namespace

Frame resize_bicubic(const Frame& frame, int height, int width) {
  if (height == frame.height() && width == frame.width()) return frame;
  Frame out(height, width, frame.channels());
  const int c = frame.channels();
  const double sy = static_cast<double>(frame.height()) / height;
  const double sx = static_cast<double>(frame.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int iy = static_cast<int>(std::floor(fy));
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int ix = static_cast<int>(std::floor(fx));
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int j = -1; j <= 2; ++j) {
          const int yy = std::clamp(iy + j, 0, frame.height() - 1);
          const double wy = cubic_weight(fy - (iy + j));
          for (int i = -1; i <= 2; ++i) {
            const int xx = std::clamp(ix + i, 0, frame.width() - 1);
            acc += wy * cubic_weight(fx - (ix + i)) * frame.at(yy, xx, k);
          }
        }
        out.at(y, x, k) = static_cast<float>(acc);
      }
    }
  }
  out.set_label(frame.label());
  return out;
}

Frame gaussian_blur(const Frame& frame, double sigma, int ksize) {
  if (ksize < 1 || ksize % 2 == 0 || sigma <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian kernel must be odd with sigma > 0");
  }
  const int r = ksize / 2;
  std::vector<double> kernel(static_cast<std::size_t>(ksize));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    kernel[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[static_cast<std::size_t>(i + r)];
  }
  for (double& k : kernel) k /= sum;

  const int h = frame.height(), w = frame.width(), c = frame.channels();
  std::vector<double> tmp(frame.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += kernel[static_cast<std::size_t>(i + r)] * frame.at(y, std::clamp(x + i, 0, w - 1), k);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * c + k] = acc;
      }
    }
  }
  Frame out(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[static_cast<std::size_t>(i + r)] * tmp[(static_cast<std::size_t>(yy) * w + x) * c + k];
        }
        out.at(y, x, k) = static_cast<float>(acc);
      }
    }
  }
  out.set_label(frame.label());
  return out;
}

}  // namespace teco
