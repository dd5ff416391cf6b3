#include "teco/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "teco/btmodel.hpp"
#include "teco/error.hpp"
#include "teco/flow.hpp"
#include "teco/losses.hpp"
#include "teco/metrics.hpp"
#include "teco/parallel.hpp"
#include "teco/pipeline.hpp"

namespace teco::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void add_flow_options(CLI::App& cmd, FlowParams& p) {
  cmd.add_option("--pyr-scale", p.pyramid_scale, "Pyramid scale factor")->capture_default_str();
  cmd.add_option("--levels", p.levels, "Pyramid levels incl. full resolution")->capture_default_str();
  cmd.add_option("--winsize", p.window, "Averaging window size (odd)")->capture_default_str();
  cmd.add_option("--iterations", p.iterations, "Iterations per level")->capture_default_str();
  cmd.add_option("--poly-n", p.poly_n, "Polynomial expansion radius")->capture_default_str();
  cmd.add_option("--poly-sigma", p.poly_sigma, "Polynomial applicability sigma")->capture_default_str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  os << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ----------------------------------------------------------------- eval

struct Assertion {
  std::string metric;
  std::string op;
  double value = 0.0;

  bool holds(double x) const {
    if (op == "<=") return x <= value;
    if (op == ">=") return x >= value;
    if (op == "<") return x < value;
    return x > value;
  }
};

Assertion parse_assertion(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z]+)\s*(<=|>=|<|>)\s*([-+0-9.eE]+|inf)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw Error(ErrorCode::kInvalidArgument, "bad assertion '" + text + "', expected e.g. psnr>=25");
  }
  const std::string v = m[3].str();
  return Assertion{m[1].str(), m[2].str(),
                   v == "inf" ? std::numeric_limits<double>::infinity() : std::stod(v)};
}

const char* display_name(const std::string& metric) {
  if (metric == "psnr") return "PSNR";
  if (metric == "lp") return "LP";
  if (metric == "tdiff") return "T-diff";
  if (metric == "tof") return "tOF";
  if (metric == "tlp") return "tLP";
  return metric.c_str();
}

void print_table(std::ostream& out, const std::vector<MetricReport>& reports,
                 const std::vector<std::string>& metrics) {
  std::vector<std::string> header = {"scene", "method"};
  for (const auto& m : metrics) {
    std::string h = std::string(display_name(m)) + (higher_is_better(m) ? "↑" : "↓");
    const double s = display_scaling(m);
    if (s != 1.0) h += " x" + std::to_string(static_cast<int>(s));
    header.push_back(h);
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    std::vector<std::string> row = {r.scene, r.method};
    for (const auto& m : metrics) {
      auto it = r.mean.find(m);
      if (it == r.mean.end()) {
        row.emplace_back("-");
      } else if (!std::isfinite(it->second)) {
        row.emplace_back("inf");
      } else {
        std::ostringstream os;
        os << std::fixed << std::setprecision(m == "psnr" ? 2 : 3)
           << it->second * display_scaling(m);
        row.push_back(os.str());
      }
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  auto visible = [](const std::string& s) {
    // Count UTF-8 code points so arrows align.
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
      return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
  };
  for (std::size_t i = 0; i < header.size(); ++i) {
    width[i] = visible(header[i]);
    for (const auto& row : rows) width[i] = std::max(width[i], visible(row[i]));
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i] << std::string(width[i] - visible(row[i]) + 2, ' ');
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
}

struct EvalArgs {
  std::string ref_dir;
  std::vector<std::string> gen_dirs;
  std::string mode = "vsr";
  std::string metrics = "psnr,lp,tdiff,tof,tlp";
  std::vector<std::size_t> spatial_skip = {2, 2};
  std::vector<std::size_t> temporal_skip = {3, 2};
  std::string backend = "msgrad";
  std::string backend_file;
  std::string json_path;
  std::string csv_path;
  std::string scene;
  std::vector<std::string> asserts;
  bool quiet = false;
};

int cmd_eval(const EvalArgs& a, EvalConfig cfg, std::ostream& out, std::ostream& err) {
  cfg.mode = ref_mode_from_string(a.mode);
  cfg.metrics.clear();
  std::stringstream ss(a.metrics);
  for (std::string m; std::getline(ss, m, ',');) {
    if (!m.empty()) cfg.metrics.push_back(m);
  }
  cfg.spatial_head = a.spatial_skip.at(0);
  cfg.spatial_tail = a.spatial_skip.at(1);
  cfg.temporal_head = a.temporal_skip.at(0);
  cfg.temporal_tail = a.temporal_skip.at(1);
  cfg.scene = a.scene;
  std::vector<Assertion> asserts;
  for (const auto& s : a.asserts) asserts.push_back(parse_assertion(s));
  cfg.validate();

  const bool need_backend = std::any_of(cfg.metrics.begin(), cfg.metrics.end(),
                                        [](const std::string& m) { return m == "lp" || m == "tlp"; });
  if (need_backend) cfg.backend = make_backend(a.backend, a.backend_file);

  std::vector<MetricReport> reports;
  for (const auto& gen : a.gen_dirs) reports.push_back(evaluate_scene(a.ref_dir, gen, cfg));

  if (!a.json_path.empty()) write_text(a.json_path, reports_to_json(reports));
  if (!a.csv_path.empty()) write_text(a.csv_path, reports_to_csv(reports));
  if (!a.quiet) {
    print_table(out, reports, cfg.metrics);
    if (need_backend) out << "perceptual backend: " << reports.front().protocol.backend_id << '\n';
  }

  int status = kExitOk;
  for (const auto& r : reports) {
    for (const auto& as : asserts) {
      auto it = r.mean.find(as.metric);
      if (it == r.mean.end()) {
        throw Error(ErrorCode::kInvalidArgument, "assertion on metric '" + as.metric +
                                                     "' which was not evaluated");
      }
      if (!as.holds(it->second)) {
        err << "assertion failed for " << r.scene << "/" << r.method << ": " << as.metric
            << " = " << it->second << " (need " << as.op << " " << as.value << ")\n";
        status = kExitAssertFailed;
      }
    }
  }
  return status;
}

// ----------------------------------------------------------------- flow

int cmd_flow(const std::string& a, const std::string& b, const std::string& out_path,
             const FlowParams& params, std::ostream& out) {
  const Frame prev = load_frame(a);
  const Frame next = load_frame(b);
  const FlowField flow = estimate_flow(prev, next, params);
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  write_flo(flow, out_path);
  double su = 0, sv = 0, maxabs = 0;
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    su += flow.u()[i];
    sv += flow.v()[i];
    maxabs = std::max({maxabs, std::abs(double(flow.u()[i])), std::abs(double(flow.v()[i]))});
  }
  const double n = static_cast<double>(flow.pixel_count());
  out << "wrote " << out_path << " (" << flow.width() << "x" << flow.height()
      << "), mean (" << su / n << ", " << sv / n << "), max |component| " << maxabs << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------- pp

int cmd_pp(const std::string& input, const std::string& out_dir, const std::string& pattern,
           bool triplets, int border_reset, const FlowParams& params, std::ostream& out) {
  const Sequence seq = load_sequence(input, pattern);
  const Sequence pp = make_pp_sequence(seq);
  const fs::path root(out_dir);
  const fs::path frames_dir = root / "frames";
  fs::create_directories(frames_dir);

  json manifest;
  manifest["schema"] = 1;
  manifest["source"] = input;
  manifest["frames_in"] = seq.size();
  manifest["frames_out"] = pp.size();
  const auto positions = pp_index_map(seq.size());
  json entries = json::array();
  for (std::size_t i = 0; i < pp.size(); ++i) {
    const std::string name = format_frame_name(pattern, static_cast<int>(i));
    save_frame(pp[i], frames_dir / name);
    const int src = seq.start_index() + positions[i];
    entries.push_back({{"position", i}, {"file", "frames/" + name}, {"source_index", src}});
  }
  manifest["sequence"] = std::move(entries);
  const std::size_t n = seq.size();
  json fwd = json::array(), bwd = json::array();
  for (std::size_t t = 0; t + 1 < n; ++t) {
    fwd.push_back(t);
    bwd.push_back(2 * n - 2 - t);
  }
  manifest["legs"] = {{"forward", fwd}, {"backward", bwd}, {"shared_middle", n - 1}};

  if (triplets) {
    json list = json::array();
    const fs::path tdir = root / "triplets";
    fs::create_directories(tdir);
    for (std::size_t t = 1; t + 1 < seq.size(); ++t) {
      const NeighborFlows flows = neighbor_flows(seq, t, params);
      const Triplet kinds[] = {triplet_original(seq, t),
                               triplet_warped(seq, flows.prev, flows.next, t, border_reset),
                               triplet_static(seq[t], seq.start_index() + static_cast<int>(t))};
      for (const Triplet& trip : kinds) {
        json files = json::array();
        for (int s = 0; s < 3; ++s) {
          char name[64];
          std::snprintf(name, sizeof name, "t%04d_%s_%d.png", trip.center_index, to_string(trip.kind), s);
          save_frame(trip.slots[static_cast<std::size_t>(s)], tdir / name);
          files.push_back(std::string("triplets/") + name);
        }
        list.push_back({{"center_index", trip.center_index},
                        {"kind", to_string(trip.kind)},
                        {"slots", files}});
      }
    }
    manifest["triplets"] = std::move(list);
    manifest["border_reset"] = border_reset;
    manifest["slot_order"] = {"t-1", "t", "t+1"};
    manifest["notes"] =
        "Warped triplets are inputs to the discriminator only; training code should stop "
        "gradients from them into the flow estimator.";
  }
  write_text(root / "manifest.json", dump(manifest));
  out << "wrote " << pp.size() << " frames to " << frames_dir.string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- losses

struct LossArgs {
  std::string seq_dir;
  std::string pp_dir;
  std::string gen_dir;
  std::string gt_dir;
  std::string preset = "vsr";
  std::string json_path;
  int margin = 0;
};

int cmd_losses(const LossArgs& a, const std::string& pattern, const FlowParams& params, int threads,
               std::ostream& out) {
  if (a.seq_dir.empty() && a.pp_dir.empty() && a.gen_dir.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give at least one of --seq, --pp, --gen/--gt");
  }
  std::map<std::string, double> parts;
  if (!a.seq_dir.empty()) {
    const Sequence s = load_sequence(a.seq_dir, pattern);
    const auto flows = backward_flows(s, params, threads);
    parts["warp"] = losses::warp_loss(s, flows, a.margin);
  }
  if (!a.pp_dir.empty()) {
    const PpLegs legs = split_pp_outputs(load_sequence(a.pp_dir, pattern));
    parts["pp"] = losses::pp_loss(legs.forward, legs.backward);
  }
  if (!a.gen_dir.empty() || !a.gt_dir.empty()) {
    if (a.gen_dir.empty() || a.gt_dir.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--gen and --gt must be given together");
    }
    const Sequence gen = load_sequence(a.gen_dir, pattern);
    const Sequence gt = load_sequence(a.gt_dir, pattern);
    if (gen.size() != gt.size()) {
      throw Error(ErrorCode::kLengthMismatch, "frame count mismatch: " + std::to_string(gen.size()) +
                                                  " generated vs " + std::to_string(gt.size()) +
                                                  " ground truth");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < gen.size(); ++t) sum += losses::content_loss_vsr(gen[t], gt[t]);
    parts["content"] = sum;
  }
  losses::LossWeights w;
  if (a.preset == "vsr") {
    w = losses::LossWeights::vsr();
  } else if (a.preset == "uvt") {
    w = losses::LossWeights::uvt();
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown preset '" + a.preset + "'");
  }
  const auto total = losses::total_generator_loss(parts, w);
  json j;
  j["schema"] = 1;
  j["preset"] = a.preset;
  j["weights"] = {{"warp", w.warp}, {"pp", w.pp}, {"adv", w.adv}, {"phi", w.phi},
                  {"phi_discriminator", w.phi_discriminator}, {"content", w.content}};
  j["parts"] = parts;
  j["total"] = total.value;
  j["missing"] = total.missing;
  if (a.json_path.empty()) {
    out << dump(j);
  } else {
    write_text(a.json_path, dump(j));
  }
  return kExitOk;
}

// ------------------------------------------------------------------- bt

int cmd_bt(const std::string& votes_path, bool smooth, const std::string& anchor,
           const std::string& out_path, std::ostream& out) {
  const VoteMatrix votes = read_votes_csv(votes_path, anchor);
  BtOptions opts;
  opts.smoothing = smooth;
  const BtFit fit = fit_bradley_terry(votes, opts);
  json j;
  j["schema"] = 1;
  j["anchor"] = fit.items.front();
  j["smoothed"] = fit.smoothed;
  j["iterations"] = fit.iterations;
  j["log_likelihood"] = fit.log_likelihood;
  json items = json::array();
  for (std::size_t i = 0; i < fit.items.size(); ++i) {
    items.push_back({{"item", fit.items[i]}, {"score", fit.scores[i]}, {"stderr", fit.stderrs[i]}});
  }
  j["items"] = std::move(items);
  if (out_path.empty()) {
    out << dump(j);
  } else {
    write_text(out_path, dump(j));
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal-coherence metrics, ping-pong tooling and preference fitting", "teco"};
  app.require_subcommand(1);
  int threads = default_thread_count();
  std::string pattern = "%04d.png";
  app.add_option("--threads", threads, "Worker threads (default TECO_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--pattern", pattern, "printf-style frame file name")->capture_default_str();

  // eval
  EvalArgs ea;
  EvalConfig ecfg;
  auto* eval = app.add_subcommand("eval", "Evaluate generated frames against a reference");
  eval->add_option("--gt,--ref", ea.ref_dir, "Reference frames (ground truth, or input in uvt mode)")
      ->required();
  eval->add_option("--gen", ea.gen_dirs, "Generated frames (repeatable)")->required();
  eval->add_option("--mode", ea.mode, "vsr or uvt")->capture_default_str();
  eval->add_option("--metrics", ea.metrics, "Comma-separated: psnr,lp,tdiff,tof,tlp")
      ->capture_default_str();
  eval->add_option("--border", ecfg.border, "Border excluded on each side")->capture_default_str();
  eval->add_option("--divisor", ecfg.divisor, "Cropped sides become multiples of this")
      ->capture_default_str();
  eval->add_option("--spatial-skip", ea.spatial_skip, "Frames skipped at head and tail")
      ->expected(2)->capture_default_str();
  eval->add_option("--temporal-skip", ea.temporal_skip, "Frames skipped at head and tail")
      ->expected(2)->capture_default_str();
  eval->add_option("--backend", ea.backend, "Perceptual backend: msgrad or table")
      ->capture_default_str();
  eval->add_option("--backend-file", ea.backend_file, "CSV frameA,frameB,distance for the table backend");
  eval->add_option("--json", ea.json_path, "Write the JSON report here");
  eval->add_option("--csv", ea.csv_path, "Write the CSV summary here");
  eval->add_option("--scene", ea.scene, "Scene name (default: parent of --gen)");
  eval->add_option("--assert", ea.asserts, "Threshold on a mean, e.g. psnr>=25 (exit 1 if violated)");
  eval->add_flag("--quiet", ea.quiet, "Do not print the table");
  add_flow_options(*eval, ecfg.flow);

  // flow
  std::string flow_a, flow_b, flow_out;
  FlowParams fparams;
  auto* flow = app.add_subcommand("flow", "Estimate dense flow between two PNGs, write .flo");
  flow->add_option("prev", flow_a, "First frame")->required();
  flow->add_option("next", flow_b, "Second frame")->required();
  flow->add_option("out", flow_out, "Output .flo path")->required();
  add_flow_options(*flow, fparams);

  // pp
  std::string pp_in, pp_out;
  bool pp_triplets = false;
  int border_reset = 16;
  FlowParams pparams;
  auto* pp = app.add_subcommand("pp", "Materialize a ping-pong sequence (and triplets)");
  pp->add_option("--input", pp_in, "Input frame directory")->required();
  pp->add_option("--out", pp_out, "Output directory")->required();
  pp->add_flag("--triplets", pp_triplets, "Also write original/warped/static triplets");
  pp->add_option("--border-reset", border_reset, "Border zeroed on warped triplets")
      ->capture_default_str();
  add_flow_options(*pp, pparams);

  // losses
  LossArgs la;
  FlowParams lparams;
  auto* loss = app.add_subcommand("losses", "Evaluate loss terms on frame directories");
  loss->add_option("--seq", la.seq_dir, "Sequence for the warp loss (internal flow)");
  loss->add_option("--pp", la.pp_dir, "Generator outputs over a ping-pong sequence");
  loss->add_option("--gen", la.gen_dir, "Generated frames for the content loss");
  loss->add_option("--gt", la.gt_dir, "Target frames for the content loss");
  loss->add_option("--preset", la.preset, "Loss weights: vsr or uvt")->capture_default_str();
  loss->add_option("--margin", la.margin, "Border ignored by the warp loss")->capture_default_str();
  loss->add_option("--json", la.json_path, "Write JSON here instead of stdout");
  add_flow_options(*loss, lparams);

  // bt
  std::string votes_path, bt_out, anchor;
  bool smooth = false;
  auto* bt = app.add_subcommand("bt", "Fit Bradley-Terry scores to pairwise votes");
  bt->add_option("--votes", votes_path, "CSV rows winner,loser,count")->required();
  bt->add_flag("--smooth", smooth, "Add half a pseudo-win each way to compared pairs");
  bt->add_option("--anchor", anchor, "Item pinned at score 0 (default: first in file)");
  bt->add_option("--out", bt_out, "Write JSON here instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "teco: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (*eval) {
      ecfg.threads = threads;
      ecfg.pattern = pattern;
      return cmd_eval(ea, ecfg, out, err);
    }
    if (*flow) return cmd_flow(flow_a, flow_b, flow_out, fparams, out);
    if (*pp) return cmd_pp(pp_in, pp_out, pattern, pp_triplets, border_reset, pparams, out);
    if (*loss) return cmd_losses(la, pattern, lparams, threads, out);
    if (*bt) return cmd_bt(votes_path, smooth, anchor, bt_out, out);
  } catch (const Error& e) {
    err << "teco: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "teco: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace teco::cli
