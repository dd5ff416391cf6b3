#include "teco/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "json.hpp"
#include "teco/error.hpp"
#include "teco/parallel.hpp"

namespace teco {

int default_thread_count() {
  if (const char* env = std::getenv("TECO_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1 && n <= 1024) return static_cast<int>(n);
  }
  return 1;
}

namespace {

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_same_length(const Sequence& a, const Sequence& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + ": sequences have " +
                                                std::to_string(a.size()) + " and " +
                                                std::to_string(b.size()) + " frames");
  }
  require_same_shape(a[0], b[0], what);
}

}  // namespace

double mean_abs_diff(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "mean_abs_diff");
  const auto x = a.data(), y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(static_cast<double>(x[i]) - y[i]);
  return sum / static_cast<double>(x.size());
}

double mean_sq_diff(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "mean_sq_diff");
  const auto x = a.data(), y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

double psnr(const Frame& gt, const Frame& gen) {
  require_same_shape(gt, gen, "psnr");
  const double mse = mean_sq_diff(gt, gen);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<FlowField> backward_flows(const Sequence& seq, const FlowParams& params, int threads) {
  params.validate();
  std::vector<FlowField> flows(seq.size() > 0 ? seq.size() - 1 : 0);
  parallel_for(flows.size(), threads, [&](std::size_t i) {
    flows[i] = estimate_flow(seq[i + 1], seq[i], params);
    flows[i].set_direction(FlowDirection::kBackward);
  });
  return flows;
}

std::vector<double> tdiff(const Sequence& gen, std::span<const FlowField> flows) {
  if (flows.size() + 1 != gen.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "tdiff needs one flow per consecutive pair: " + std::to_string(gen.size()) +
                    " frames, " + std::to_string(flows.size()) + " flows");
  }
  std::vector<double> out(flows.size());
  for (std::size_t t = 1; t < gen.size(); ++t) {
    out[t - 1] = mean_abs_diff(gen[t], backward_warp(gen[t - 1], flows[t - 1]));
  }
  return out;
}

std::vector<double> tdiff(const Sequence& gen, const FlowParams& params, int threads) {
  params.validate();
  std::vector<double> out(gen.size() - 1);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const FlowField v = estimate_flow(gen[i + 1], gen[i], params);
    out[i] = mean_abs_diff(gen[i + 1], backward_warp(gen[i], v));
  });
  return out;
}

std::vector<double> tof(const Sequence& ref, const Sequence& gen, const FlowParams& params,
                        int threads) {
  require_same_length(ref, gen, "tof");
  params.validate();
  std::vector<double> out(gen.size() - 1);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const FlowField fr = estimate_flow(ref[i], ref[i + 1], params);
    const FlowField fg = estimate_flow(gen[i], gen[i + 1], params);
    double sum = 0.0;
    for (std::size_t p = 0; p < fr.pixel_count(); ++p) {
      sum += std::abs(static_cast<double>(fr.u()[p]) - fg.u()[p]) +
             std::abs(static_cast<double>(fr.v()[p]) - fg.v()[p]);
    }
    out[i] = sum / static_cast<double>(fr.pixel_count());
  });
  return out;
}

std::vector<double> tlp(const Sequence& ref, const Sequence& gen, const PerceptualBackend& backend,
                        int threads) {
  require_same_length(ref, gen, "tlp");
  std::vector<double> out(gen.size() - 1);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    try {
      const double dr = backend.distance(ref[i], ref[i + 1]);
      const double dg = backend.distance(gen[i], gen[i + 1]);
      out[i] = std::abs(dr - dg);
    } catch (const Error& e) {
      throw Error(e.code(), "tlp pair " + std::to_string(i) + "->" + std::to_string(i + 1) +
                                " (" + backend.id() + "): " + e.what());
    }
  });
  return out;
}

Sequence resample_sequence(const Sequence& seq, int height, int width) {
  std::vector<Frame> frames;
  frames.reserve(seq.size());
  for (const Frame& f : seq.frames()) frames.push_back(resize_bicubic(f, height, width));
  return Sequence(std::move(frames), seq.start_index());
}

// ------------------------------------------------------------- protocol

const char* to_string(RefMode mode) { return mode == RefMode::kVsr ? "vsr" : "uvt"; }

RefMode ref_mode_from_string(const std::string& s) {
  if (s == "vsr") return RefMode::kVsr;
  if (s == "uvt") return RefMode::kUvt;
  throw Error(ErrorCode::kInvalidArgument, "unknown reference mode '" + s + "'");
}

double display_scaling(const std::string& metric) {
  if (metric == "lp" || metric == "tof") return 10.0;
  if (metric == "tlp" || metric == "tdiff") return 100.0;
  return 1.0;
}

bool higher_is_better(const std::string& metric) { return metric == "psnr"; }

void EvalConfig::validate() const {
  if (metrics.empty()) throw Error(ErrorCode::kInvalidArgument, "no metrics selected");
  for (const auto& m : metrics) {
    if (std::find(known_metrics().begin(), known_metrics().end(), m) == known_metrics().end()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + m + "'");
    }
    if (mode == RefMode::kUvt && (m == "psnr" || m == "lp")) {
      throw Error(ErrorCode::kInvalidArgument,
                  "metric '" + m + "' needs pixel-aligned ground truth and is not allowed in uvt mode");
    }
  }
  if (threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
  flow.validate();
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace {

bool wants(const EvalConfig& c, const char* name) {
  return std::find(c.metrics.begin(), c.metrics.end(), name) != c.metrics.end();
}

}  // namespace

MetricReport evaluate_sequences(const Sequence& ref_in, const Sequence& gen_in,
                                const EvalConfig& config) {
  config.validate();
  if (ref_in.size() != gen_in.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "frame count mismatch: reference has " + std::to_string(ref_in.size()) +
                    " frames, generated has " + std::to_string(gen_in.size()));
  }
  Sequence ref = ref_in;
  if (config.mode == RefMode::kUvt &&
      (ref.height() != gen_in.height() || ref.width() != gen_in.width())) {
    ref = resample_sequence(ref, gen_in.height(), gen_in.width());
  }
  require_same_shape(ref[0], gen_in[0], "reference and generated frames");

  const Sequence r = protocol_crop(ref, config.border, config.divisor);
  const Sequence g = protocol_crop(gen_in, config.border, config.divisor);
  const auto backend = config.backend ? config.backend : make_backend("msgrad");

  MetricReport report;
  report.scene = config.scene;
  report.method = config.method;
  report.protocol = ProtocolRecord{config.mode,         config.border,        config.divisor,
                                   config.spatial_head,  config.spatial_tail,  config.temporal_head,
                                   config.temporal_tail, config.flow,          backend->id()};

  const bool spatial = wants(config, "psnr") || wants(config, "lp");
  if (spatial) {
    const Sequence sr = skip_frames(r, config.spatial_head, config.spatial_tail);
    const Sequence sg = skip_frames(g, config.spatial_head, config.spatial_tail);
    std::vector<int> index(sg.size());
    for (std::size_t i = 0; i < sg.size(); ++i) index[i] = sg.start_index() + static_cast<int>(i);
    if (wants(config, "psnr")) {
      std::vector<double> v(sg.size());
      parallel_for(v.size(), config.threads, [&](std::size_t i) { v[i] = psnr(sr[i], sg[i]); });
      report.per_frame["psnr"] = std::move(v);
      report.frame_index["psnr"] = index;
    }
    if (wants(config, "lp")) {
      std::vector<double> v(sg.size());
      parallel_for(v.size(), config.threads,
                   [&](std::size_t i) { v[i] = backend->distance(sr[i], sg[i]); });
      report.per_frame["lp"] = std::move(v);
      report.frame_index["lp"] = index;
    }
  }

  const bool temporal = wants(config, "tdiff") || wants(config, "tof") || wants(config, "tlp");
  if (temporal) {
    // Targets are frames [head, n - tail); each pairs with its predecessor.
    const std::size_t first = config.temporal_head > 0 ? config.temporal_head - 1 : 0;
    if (first + config.temporal_tail + 2 > g.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "temporal skip " + std::to_string(config.temporal_head) + "+" +
                      std::to_string(config.temporal_tail) + " leaves no frame pairs of " +
                      std::to_string(g.size()));
    }
    const std::size_t count = g.size() - first - config.temporal_tail;
    const Sequence tr = r.slice(first, count);
    const Sequence tg = g.slice(first, count);
    std::vector<int> index(count - 1);
    for (std::size_t i = 0; i + 1 < count; ++i) index[i] = tg.start_index() + static_cast<int>(i) + 1;
    if (wants(config, "tdiff")) {
      report.per_frame["tdiff"] = tdiff(tg, config.flow, config.threads);
      report.frame_index["tdiff"] = index;
    }
    if (wants(config, "tof")) {
      report.per_frame["tof"] = tof(tr, tg, config.flow, config.threads);
      report.frame_index["tof"] = index;
    }
    if (wants(config, "tlp")) {
      report.per_frame["tlp"] = tlp(tr, tg, *backend, config.threads);
      report.frame_index["tlp"] = index;
    }
  }

  for (const auto& [name, values] : report.per_frame) {
    report.mean[name] = mean_of(values);
    report.scaling[name] = display_scaling(name);
  }
  return report;
}

MetricReport evaluate_scene(const std::filesystem::path& ref_dir,
                            const std::filesystem::path& gen_dir, const EvalConfig& config) {
  EvalConfig cfg = config;
  const std::filesystem::path gen_abs = gen_dir.lexically_normal();
  std::filesystem::path leaf = gen_abs.filename();
  std::filesystem::path parent = gen_abs.parent_path();
  if (leaf.empty()) {  // trailing separator
    leaf = parent.filename();
    parent = parent.parent_path();
  }
  if (cfg.method.empty()) cfg.method = leaf.string();
  if (cfg.scene.empty()) cfg.scene = parent.filename().string();
  try {
    const Sequence ref = load_sequence(ref_dir, cfg.pattern);
    const Sequence gen = load_sequence(gen_dir, cfg.pattern);
    return evaluate_sequences(ref, gen, cfg);
  } catch (const Error& e) {
    throw Error(e.code(), "scene '" + cfg.scene + "' (" + cfg.method + "): " + e.what());
  }
}

// ---------------------------------------------------------- serialization

namespace {

nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string reports_to_json(const std::vector<MetricReport>& reports) {
  nlohmann::ordered_json root;
  root["schema"] = 1;
  root["reports"] = nlohmann::ordered_json::array();
  for (const auto& rep : reports) {
    nlohmann::ordered_json j;
    j["scene"] = rep.scene;
    j["method"] = rep.method;
    const auto& p = rep.protocol;
    j["protocol"] = {
        {"mode", to_string(p.mode)},
        {"border", p.border},
        {"divisor", p.divisor},
        {"spatial_skip", {p.spatial_head, p.spatial_tail}},
        {"temporal_skip", {p.temporal_head, p.temporal_tail}},
        {"flow",
         {{"pyramid_scale", p.flow.pyramid_scale},
          {"levels", p.flow.levels},
          {"window", p.flow.window},
          {"iterations", p.flow.iterations},
          {"poly_n", p.flow.poly_n},
          {"poly_sigma", p.flow.poly_sigma}}},
        {"perceptual_backend", p.backend_id},
    };
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [name, values] : rep.per_frame) {
      nlohmann::ordered_json m;
      m["mean"] = number(rep.mean.at(name));
      m["scaling"] = rep.scaling.at(name);
      m["frames"] = rep.frame_index.at(name);
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (double v : values) arr.push_back(number(v));
      m["per_frame"] = std::move(arr);
      metrics[name] = std::move(m);
    }
    j["metrics"] = std::move(metrics);
    root["reports"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "scene,method,metric,mean,scaling,frames,backend\n";
  for (const auto& rep : reports) {
    for (const auto& [name, values] : rep.per_frame) {
      os << rep.scene << ',' << rep.method << ',' << name << ',' << csv_number(rep.mean.at(name))
         << ',' << csv_number(rep.scaling.at(name)) << ',' << values.size() << ','
         << rep.protocol.backend_id << '\n';
    }
  }
  return os.str();
}

}  // namespace teco
