#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "teco/flow.hpp"
#include "teco/imgseq.hpp"
#include "teco/perceptual.hpp"
#include "teco/warp.hpp"

namespace teco {

/// PSNR of identical frames.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Peak 1.0; returns kPsnrIdentical when MSE is zero.
double psnr(const Frame& gt, const Frame& gen);

double mean_abs_diff(const Frame& a, const Frame& b);
double mean_sq_diff(const Frame& a, const Frame& b);

/// flows[t-1] aligns frame t-1 onto frame t: v_t = OF(g_t, g_{t-1}), so
/// W(g_{t-1}, v_t) ~ g_t.
std::vector<FlowField> backward_flows(const Sequence& seq, const FlowParams& params = {},
                                      int threads = 1);

/// T-diff per frame t >= 1: mean |g_t - W(g_{t-1}, v_t)|.
std::vector<double> tdiff(const Sequence& gen, std::span<const FlowField> flows);
std::vector<double> tdiff(const Sequence& gen, const FlowParams& params = {}, int threads = 1);

/// tOF per consecutive pair: mean over pixels of |du| + |dv| between
/// OF(ref_{t-1}, ref_t) and OF(gen_{t-1}, gen_t).
std::vector<double> tof(const Sequence& ref, const Sequence& gen, const FlowParams& params = {},
                        int threads = 1);

/// tLP per consecutive pair: |LP(ref_{t-1}, ref_t) - LP(gen_{t-1}, gen_t)|.
std::vector<double> tlp(const Sequence& ref, const Sequence& gen, const PerceptualBackend& backend,
                        int threads = 1);

/// Bicubically resamples an input-domain sequence to (height, width) so it
/// can serve as the tOF/tLP reference of a translated sequence.
Sequence resample_sequence(const Sequence& seq, int height, int width);

enum class RefMode { kVsr, kUvt };

const char* to_string(RefMode mode);
RefMode ref_mode_from_string(const std::string& s);

inline const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {"psnr", "lp", "tdiff", "tof", "tlp"};
  return names;
}

/// Display multiplier used in human-readable tables (values are stored
/// unscaled).
double display_scaling(const std::string& metric);
bool higher_is_better(const std::string& metric);

struct EvalConfig {
  RefMode mode = RefMode::kVsr;
  std::vector<std::string> metrics = {"psnr", "lp", "tdiff", "tof", "tlp"};
  int border = 8;
  int divisor = 8;
  std::size_t spatial_head = 2, spatial_tail = 2;
  std::size_t temporal_head = 3, temporal_tail = 2;
  FlowParams flow;
  std::shared_ptr<const PerceptualBackend> backend;  // msgrad when null
  std::string pattern = "%04d.png";
  int threads = 1;
  std::string scene;   // derived from gen_dir when empty
  std::string method;  // derived from gen_dir when empty

  void validate() const;
};

struct ProtocolRecord {
  RefMode mode = RefMode::kVsr;
  int border = 8;
  int divisor = 8;
  std::size_t spatial_head = 2, spatial_tail = 2;
  std::size_t temporal_head = 3, temporal_tail = 2;
  FlowParams flow;
  std::string backend_id;
};

struct MetricReport {
  std::string scene;
  std::string method;
  std::map<std::string, std::vector<double>> per_frame;
  std::map<std::string, std::vector<int>> frame_index;  // file index of each value
  std::map<std::string, double> mean;
  std::map<std::string, double> scaling;
  ProtocolRecord protocol;
};

/// Arithmetic mean in index order; +inf if any value is +inf.
double mean_of(std::span<const double> values);

/// Protocol evaluation of already-loaded sequences. In VSR mode `ref` is
/// the ground truth; in UVT mode it is the input sequence.
MetricReport evaluate_sequences(const Sequence& ref, const Sequence& gen, const EvalConfig& config);

MetricReport evaluate_scene(const std::filesystem::path& ref_dir,
                            const std::filesystem::path& gen_dir, const EvalConfig& config);

/// JSON (schema 1) of a list of reports; non-finite values are written as
/// the string "inf".
std::string reports_to_json(const std::vector<MetricReport>& reports);
/// One row per scene x method x metric.
std::string reports_to_csv(const std::vector<MetricReport>& reports);

}  // namespace teco
