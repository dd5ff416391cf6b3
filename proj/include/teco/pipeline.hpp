#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "teco/flow.hpp"
#include "teco/imgseq.hpp"
#include "teco/warp.hpp"

namespace teco {

/// Channel-concatenated image with an arbitrary channel count, interleaved
/// like Frame.
struct ChannelStack {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Concatenates along channels in argument order. All inputs share H x W.
ChannelStack concat_channels(const std::vector<const Frame*>& frames);

enum class TripletKind { kOriginal, kWarped, kStatic };
const char* to_string(TripletKind kind);

/// Three frames (t-1, t, t+1) for the spatio-temporal discriminator.
struct Triplet {
  std::array<Frame, 3> slots;
  TripletKind kind = TripletKind::kOriginal;
  int center_index = 0;

  ChannelStack stacked() const { return concat_channels({&slots[0], &slots[1], &slots[2]}); }
};

// ---------------------------------------------------------- ping-pong

/// a_1 .. a_n .. a_1, length 2n - 1.
Sequence make_pp_sequence(const Sequence& seq);
/// Source position (0-based) of every element of a PP sequence of n frames.
std::vector<int> pp_index_map(std::size_t n);

struct PpLegs {
  std::vector<Frame> forward;   // g_1 .. g_{n-1}
  std::vector<Frame> backward;  // g'_1 .. g'_{n-1}, aligned with forward
};

/// Splits generator output over a PP sequence into its two legs. The shared
/// middle frame g_n belongs to neither leg.
PpLegs split_pp_outputs(const Sequence& outputs);

// ------------------------------------------------------------ triplets

/// t is a 0-based interior index (1 <= t <= n - 2).
Triplet triplet_original(const Sequence& seq, std::size_t t);

/// {W(g_{t-1}, prev_flow), g_t, W(g_{t+1}, next_flow)} with `border_reset`
/// pixels zeroed on all three slots. prev_flow is v_t, next_flow is v'_t.
Triplet triplet_warped(const Sequence& seq, const FlowField& prev_flow, const FlowField& next_flow,
                       std::size_t t, int border_reset = 16);

struct NeighborFlows {
  FlowField prev;  // v_t = OF(g_t, g_{t-1})
  FlowField next;  // v'_t = OF(g_t, g_{t+1})
};
NeighborFlows neighbor_flows(const Sequence& seq, std::size_t t, const FlowParams& params = {});

Triplet triplet_static(const Frame& frame, int center_index = 0);

/// Conditional VSR discriminator input: channels of (original, warped,
/// conditional) in that order. The conditional triplet holds the LR inputs
/// already resized to HR.
ChannelStack vsr_disc_input(const Triplet& original, const Triplet& warped,
                            const Triplet& conditional);

// ---------------------------------------------------------- curriculum

/// Progress windows (as fractions of total steps) of the two transitions.
struct CurriculumConfig {
  double warped_begin = 0.0;
  double warped_end = 0.5;
  double original_begin = 0.5;
  double original_end = 1.0;

  void validate() const;
};

enum class CurriculumTrack { kWarped, kOriginal };

struct CurriculumState {
  long step = 0;
  long total_steps = 0;
  double static_fraction = 1.0;
  double warped_fraction = 0.0;
  double original_fraction = 0.0;
  double alpha_warped = 0.0;    // blend factor of the warped-track transition
  double alpha_original = 0.0;  // blend factor of the original-track transition
  double beta = 1.0;            // flow scale of the original-track transition

  double alpha(CurriculumTrack track) const {
    return track == CurriculumTrack::kWarped ? alpha_warped : alpha_original;
  }
};

/// Fractions move linearly from (1, 0, 0) to (0.5, 0.25, 0.25).
CurriculumState curriculum_schedule(long step, long total_steps, const CurriculumConfig& config = {});

struct OriginalParts {
  Frame prev;
  Frame center;
  Frame next;
  FlowField prev_flow;  // v_t
  FlowField next_flow;  // v'_t
};

/// warped track:   (1 - a) I_static + a I_warped
/// original track: (1 - a) I_static + a {W(g_{t-1}, b v_t), g_t, W(g_{t+1}, b v'_t)}
Triplet curriculum_mix(const Triplet& static_triplet, const Triplet& warped_triplet,
                       const OriginalParts& parts, const CurriculumState& state,
                       CurriculumTrack track);

}  // namespace teco
