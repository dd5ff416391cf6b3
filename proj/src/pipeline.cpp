#include "teco/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "teco/error.hpp"

namespace teco {

ChannelStack concat_channels(const std::vector<const Frame*>& frames) {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to concatenate");
  ChannelStack out{frames.front()->height(), frames.front()->width(), 0, {}};
  for (const Frame* f : frames) {
    if (f->height() != out.height || f->width() != out.width) {
      throw Error(ErrorCode::kShapeMismatch, "cannot concatenate " + f->shape_string() +
                                                 " with " + frames.front()->shape_string());
    }
    out.channels += f->channels();
  }
  out.data.resize(static_cast<std::size_t>(out.height) * out.width * out.channels);
  std::size_t o = 0;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (const Frame* f : frames) {
        for (int c = 0; c < f->channels(); ++c) out.data[o++] = f->at(y, x, c);
      }
    }
  }
  return out;
}

const char* to_string(TripletKind kind) {
  switch (kind) {
    case TripletKind::kOriginal: return "original";
    case TripletKind::kWarped: return "warped";
    case TripletKind::kStatic: return "static";
  }
  return "unknown";
}

// ---------------------------------------------------------- ping-pong

std::vector<int> pp_index_map(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "ping-pong sequence needs a frame");
  std::vector<int> map;
  map.reserve(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) map.push_back(static_cast<int>(i));
  for (std::size_t i = n - 1; i-- > 0;) map.push_back(static_cast<int>(i));
  return map;
}

Sequence make_pp_sequence(const Sequence& seq) {
  std::vector<Frame> frames;
  for (int i : pp_index_map(seq.size())) frames.push_back(seq[static_cast<std::size_t>(i)]);
  return Sequence(std::move(frames), seq.start_index());
}

PpLegs split_pp_outputs(const Sequence& outputs) {
  const std::size_t len = outputs.size();
  if (len % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "ping-pong output must have odd length 2n-1, got " + std::to_string(len));
  }
  const std::size_t n = (len + 1) / 2;
  PpLegs legs;
  for (std::size_t i = 0; i + 1 < n; ++i) legs.forward.push_back(outputs[i]);
  for (std::size_t i = len; i-- > n;) legs.backward.push_back(outputs[i]);
  return legs;
}

// ------------------------------------------------------------ triplets

namespace {

void require_interior(const Sequence& seq, std::size_t t) {
  if (t < 1 || t + 1 >= seq.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "triplet centre " + std::to_string(t) + " is not interior to a sequence of " +
                    std::to_string(seq.size()) + " frames");
  }
}

}  // namespace

Triplet triplet_original(const Sequence& seq, std::size_t t) {
  require_interior(seq, t);
  return Triplet{{seq[t - 1], seq[t], seq[t + 1]},
                 TripletKind::kOriginal,
                 seq.start_index() + static_cast<int>(t)};
}

Triplet triplet_warped(const Sequence& seq, const FlowField& prev_flow, const FlowField& next_flow,
                       std::size_t t, int border_reset) {
  require_interior(seq, t);
  Triplet out{{zero_border(backward_warp(seq[t - 1], prev_flow), border_reset),
               zero_border(seq[t], border_reset),
               zero_border(backward_warp(seq[t + 1], next_flow), border_reset)},
              TripletKind::kWarped,
              seq.start_index() + static_cast<int>(t)};
  return out;
}

NeighborFlows neighbor_flows(const Sequence& seq, std::size_t t, const FlowParams& params) {
  require_interior(seq, t);
  NeighborFlows f{estimate_flow(seq[t], seq[t - 1], params), estimate_flow(seq[t], seq[t + 1], params)};
  f.prev.set_direction(FlowDirection::kBackward);
  return f;
}

Triplet triplet_static(const Frame& frame, int center_index) {
  return Triplet{{frame, frame, frame}, TripletKind::kStatic, center_index};
}

ChannelStack vsr_disc_input(const Triplet& original, const Triplet& warped,
                            const Triplet& conditional) {
  std::vector<const Frame*> frames;
  for (const Triplet* t : {&original, &warped, &conditional}) {
    for (const Frame& f : t->slots) frames.push_back(&f);
  }
  const Frame& ref = *frames.front();
  for (const Frame* f : frames) {
    if (!f->same_shape(ref)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "discriminator triplets differ: " + f->shape_string() + " vs " + ref.shape_string());
    }
  }
  return concat_channels(frames);
}

// ---------------------------------------------------------- curriculum

void CurriculumConfig::validate() const {
  auto ok = [](double a, double b) { return 0.0 <= a && a < b && b <= 1.0; };
  if (!ok(warped_begin, warped_end) || !ok(original_begin, original_end)) {
    throw Error(ErrorCode::kInvalidArgument, "curriculum windows must satisfy 0 <= begin < end <= 1");
  }
}

namespace {

double ramp(double progress, double begin, double end) {
  return std::clamp((progress - begin) / (end - begin), 0.0, 1.0);
}

constexpr double kWarpedShare = 0.25;
constexpr double kOriginalShare = 0.25;

}  // namespace

CurriculumState curriculum_schedule(long step, long total_steps, const CurriculumConfig& config) {
  config.validate();
  if (total_steps <= 0 || step < 0) {
    throw Error(ErrorCode::kInvalidArgument, "curriculum needs total_steps > 0 and step >= 0");
  }
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  CurriculumState s;
  s.step = step;
  s.total_steps = total_steps;
  s.alpha_warped = ramp(progress, config.warped_begin, config.warped_end);
  s.alpha_original = ramp(progress, config.original_begin, config.original_end);
  s.beta = 1.0 - s.alpha_original;
  s.warped_fraction = kWarpedShare * s.alpha_warped;
  s.original_fraction = kOriginalShare * s.alpha_original;
  s.static_fraction = 1.0 - s.warped_fraction - s.original_fraction;
  return s;
}

namespace {

Frame blend(const Frame& a, const Frame& b, double alpha) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot blend " + a.shape_string() + " with " + b.shape_string());
  }
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;
  Frame out = a;
  const auto src = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>((1.0 - alpha) * dst[i] + alpha * src[i]);
  }
  return out;
}

}  // namespace

Triplet curriculum_mix(const Triplet& static_triplet, const Triplet& warped_triplet,
                       const OriginalParts& parts, const CurriculumState& state,
                       CurriculumTrack track) {
  const double alpha = state.alpha(track);
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(state.beta >= 0.0 && state.beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "curriculum alpha and beta must lie in [0, 1]");
  }
  Triplet target;
  if (track == CurriculumTrack::kWarped) {
    target = warped_triplet;
  } else {
    const auto beta = static_cast<float>(state.beta);
    target = Triplet{{backward_warp(parts.prev, scale_flow(parts.prev_flow, beta)), parts.center,
                      backward_warp(parts.next, scale_flow(parts.next_flow, beta))},
                     TripletKind::kOriginal,
                     static_triplet.center_index};
  }
  if (alpha == 0.0) return static_triplet;
  Triplet out{{blend(static_triplet.slots[0], target.slots[0], alpha),
               blend(static_triplet.slots[1], target.slots[1], alpha),
               blend(static_triplet.slots[2], target.slots[2], alpha)},
              target.kind,
              static_triplet.center_index};
  return out;
}

}  // namespace teco
