#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "teco/imgseq.hpp"

namespace teco {

/// Perceptual distance LP(a, b) used by tLP and spatial reporting.
/// Implementations must be safe for concurrent distance() calls and satisfy
/// distance(a, a) == 0 and distance(a, b) == distance(b, a).
class PerceptualBackend {
 public:
  virtual ~PerceptualBackend() = default;
  virtual std::string id() const = 0;
  virtual double distance(const Frame& a, const Frame& b) const = 0;
};

/// Multi-scale contrast-normalized gradient distance. Deterministic stand-in
/// for a learned metric; its values are not comparable to LPIPS.
double msgrad_distance(const Frame& a, const Frame& b);

class MsGradBackend final : public PerceptualBackend {
 public:
  std::string id() const override { return "msgrad"; }
  double distance(const Frame& a, const Frame& b) const override { return msgrad_distance(a, b); }
};

/// Distances precomputed offline (e.g. AlexNet-LPIPS), read from a CSV with
/// header `frameA,frameB,distance`. Frames are looked up by label first and
/// by file basename second; pairs are unordered.
class TableBackend final : public PerceptualBackend {
 public:
  explicit TableBackend(std::map<std::pair<std::string, std::string>, double> table,
                        std::string source = "inline");

  std::string id() const override { return "table:" + source_; }
  double distance(const Frame& a, const Frame& b) const override;
  double distance(const std::string& a, const std::string& b) const;
  std::size_t entries() const noexcept { return table_.size(); }

 private:
  const double* find(const std::string& a, const std::string& b) const;

  std::map<std::pair<std::string, std::string>, double> table_;
  std::string source_;
};

std::shared_ptr<TableBackend> external_table_backend(const std::filesystem::path& csv);

/// Checks zero self-distance and symmetry on the given probe pairs; throws
/// Error(kBackend) naming the failing probe.
void check_backend_contract(const PerceptualBackend& backend,
                            const std::vector<std::pair<Frame, Frame>>& probes);

/// Resolves "msgrad" (default) or "table" (requires `table_path`). The
/// built-in backend is validated against three synthetic probe pairs.
std::shared_ptr<const PerceptualBackend> make_backend(const std::string& id,
                                                      const std::filesystem::path& table_path = {});

}  // namespace teco
