#include "teco/perceptual.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "teco/error.hpp"

namespace teco {

namespace {

constexpr int kMsGradLevels = 3;
constexpr int kContrastRadius = 2;
constexpr double kContrastEps = 1e-3;

struct Plane {
  int h = 0, w = 0;
  std::vector<double> px;
  double at(int y, int x) const {
    return px[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
  }
};

Plane luma_plane(const Frame& f) {
  const Frame l = to_luma(f);
  Plane p{l.height(), l.width(), {}};
  p.px.assign(l.data().begin(), l.data().end());
  return p;
}

Plane downsample2(const Plane& p) {
  Plane out{std::max(1, p.h / 2), std::max(1, p.w / 2), {}};
  out.px.resize(static_cast<std::size_t>(out.h) * out.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.px[static_cast<std::size_t>(y) * out.w + x] =
          0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) + p.at(2 * y + 1, 2 * x) +
                  p.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

Plane normalized_gradient(const Plane& p) {
  Plane mag{p.h, p.w, std::vector<double>(p.px.size())};
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      const double gx = (p.at(y - 1, x + 1) + 2 * p.at(y, x + 1) + p.at(y + 1, x + 1)) -
                        (p.at(y - 1, x - 1) + 2 * p.at(y, x - 1) + p.at(y + 1, x - 1));
      const double gy = (p.at(y + 1, x - 1) + 2 * p.at(y + 1, x) + p.at(y + 1, x + 1)) -
                        (p.at(y - 1, x - 1) + 2 * p.at(y - 1, x) + p.at(y - 1, x + 1));
      mag.px[static_cast<std::size_t>(y) * p.w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  Plane out{p.h, p.w, std::vector<double>(p.px.size())};
  constexpr int side = 2 * kContrastRadius + 1;
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      double local = 0.0;
      for (int dy = -kContrastRadius; dy <= kContrastRadius; ++dy) {
        for (int dx = -kContrastRadius; dx <= kContrastRadius; ++dx) local += mag.at(y + dy, x + dx);
      }
      local /= side * side;
      const std::size_t i = static_cast<std::size_t>(y) * p.w + x;
      out.px[i] = mag.px[i] / (local + kContrastEps);
    }
  }
  return out;
}

}  // namespace

double msgrad_distance(const Frame& a, const Frame& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShapeMismatch,
                "perceptual inputs differ: " + a.shape_string() + " vs " + b.shape_string());
  }
  Plane pa = luma_plane(a), pb = luma_plane(b);
  double total = 0.0;
  for (int level = 0; level < kMsGradLevels; ++level) {
    if (level > 0) {
      pa = downsample2(pa);
      pb = downsample2(pb);
    }
    const Plane na = normalized_gradient(pa), nb = normalized_gradient(pb);
    double sum = 0.0;
    for (std::size_t i = 0; i < na.px.size(); ++i) sum += std::abs(na.px[i] - nb.px[i]);
    total += sum / static_cast<double>(na.px.size());
  }
  return total / kMsGradLevels;
}

// ---------------------------------------------------------------- table

namespace {

std::pair<std::string, std::string> unordered_key(const std::string& a, const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::string basename(const std::string& label) {
  const auto pos = label.find_last_of('/');
  return pos == std::string::npos ? label : label.substr(pos + 1);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

TableBackend::TableBackend(std::map<std::pair<std::string, std::string>, double> table,
                           std::string source)
    : source_(std::move(source)) {
  for (const auto& [key, value] : table) {
    if (!std::isfinite(value) || value < 0) {
      throw Error(ErrorCode::kBackend,
                  "distance for (" + key.first + ", " + key.second + ") must be finite and >= 0");
    }
    if (key.first == key.second && value != 0.0) {
      throw Error(ErrorCode::kBackend, "non-zero self distance for " + key.first);
    }
    const auto k = unordered_key(key.first, key.second);
    auto [it, inserted] = table_.emplace(k, value);
    if (!inserted && std::abs(it->second - value) > 1e-9) {
      throw Error(ErrorCode::kBackend,
                  "asymmetric distances for (" + k.first + ", " + k.second + ")");
    }
  }
}

const double* TableBackend::find(const std::string& a, const std::string& b) const {
  auto it = table_.find(unordered_key(a, b));
  return it == table_.end() ? nullptr : &it->second;
}

double TableBackend::distance(const std::string& a, const std::string& b) const {
  if (table_.empty()) throw Error(ErrorCode::kBackend, "distance table " + source_ + " is empty");
  if (a == b && !a.empty()) return 0.0;
  if (const double* d = find(a, b)) return *d;
  if (const double* d = find(basename(a), basename(b))) return *d;
  throw Error(ErrorCode::kBackend, "no tabulated distance for pair (" + a + ", " + b + ")");
}

double TableBackend::distance(const Frame& a, const Frame& b) const {
  if (a.label().empty() || b.label().empty()) {
    throw Error(ErrorCode::kBackend, "table backend needs labelled frames");
  }
  return distance(a.label(), b.label());
}

std::shared_ptr<TableBackend> external_table_backend(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open distance table " + csv.string());
  std::map<std::pair<std::string, std::string>, double> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string a, b, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, d)) {
      throw Error(ErrorCode::kBackend,
                  csv.string() + ":" + std::to_string(line_no) + ": expected frameA,frameB,distance");
    }
    a = trim(a);
    b = trim(b);
    d = trim(d);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(d, &used);
      if (used != d.size()) throw std::invalid_argument(d);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::kBackend,
                  csv.string() + ":" + std::to_string(line_no) + ": bad distance '" + d + "'");
    }
    const auto key = unordered_key(a, b);
    auto [it, inserted] = table.emplace(key, value);
    if (!inserted && std::abs(it->second - value) > 1e-9) {
      throw Error(ErrorCode::kBackend, "conflicting entries for (" + a + ", " + b + ") in " +
                                           csv.string());
    }
  }
  return std::make_shared<TableBackend>(std::move(table), csv.filename().string());
}

void check_backend_contract(const PerceptualBackend& backend,
                            const std::vector<std::pair<Frame, Frame>>& probes) {
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& [a, b] = probes[i];
    const double self = backend.distance(a, a);
    const double ab = backend.distance(a, b);
    const double ba = backend.distance(b, a);
    if (self != 0.0) {
      throw Error(ErrorCode::kBackend, backend.id() + ": probe " + std::to_string(i) +
                                           " has non-zero self distance");
    }
    if (!(ab >= 0.0) || std::abs(ab - ba) > 1e-9) {
      throw Error(ErrorCode::kBackend, backend.id() + ": probe " + std::to_string(i) +
                                           " violates symmetry or non-negativity");
    }
  }
}

namespace {

std::vector<std::pair<Frame, Frame>> synthetic_probes() {
  std::vector<std::pair<Frame, Frame>> probes;
  constexpr int n = 24;
  Frame ramp(n, n, 1), checker(n, n, 1), dots(n, n, 3), shifted(n, n, 3);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      ramp.at(y, x) = static_cast<float>(x) / (n - 1);
      checker.at(y, x) = ((x / 3 + y / 3) % 2) ? 0.9f : 0.1f;
      for (int c = 0; c < 3; ++c) {
        dots.at(y, x, c) = ((x * 7 + y * 3 + c) % 5) / 4.0f;
        shifted.at(y, x, c) = (((x + 1) * 7 + y * 3 + c) % 5) / 4.0f;
      }
    }
  }
  probes.emplace_back(ramp, checker);
  probes.emplace_back(checker, ramp);
  probes.emplace_back(dots, shifted);
  return probes;
}

}  // namespace

std::shared_ptr<const PerceptualBackend> make_backend(const std::string& id,
                                                      const std::filesystem::path& table_path) {
  if (id.empty() || id == "msgrad") {
    auto backend = std::make_shared<MsGradBackend>();
    check_backend_contract(*backend, synthetic_probes());
    return backend;
  }
  if (id == "table") {
    if (table_path.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "table backend requires a CSV path");
    }
    return external_table_backend(table_path);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown perceptual backend '" + id + "'");
}

}  // namespace teco
