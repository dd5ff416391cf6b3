#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "teco/error.hpp"
#include "teco/losses.hpp"
#include "teco/pipeline.hpp"

using namespace teco;

namespace {

Sequence labelled(int n, int h = 8, int w = 8) {
  std::vector<Frame> frames;
  for (int i = 0; i < n; ++i) frames.emplace_back(h, w, 1, static_cast<float>(i + 1) / 16.0f);
  return Sequence(frames, 1);
}

bool same_triplet_slots(const Triplet& a, const Triplet& b) {
  return a.slots[0] == b.slots[0] && a.slots[1] == b.slots[1] && a.slots[2] == b.slots[2];
}

}  // namespace

TEST_CASE("ping-pong construction") {
  const Sequence s = labelled(3);
  const Sequence pp = make_pp_sequence(s);
  REQUIRE(pp.size() == 5);
  const int order[] = {0, 1, 2, 1, 0};
  for (int i = 0; i < 5; ++i) CHECK(pp[i] == s[order[i]]);
  CHECK(pp_index_map(3) == std::vector<int>{0, 1, 2, 1, 0});
  CHECK(make_pp_sequence(labelled(1)).size() == 1);
  for (int n = 1; n <= 12; ++n) {
    const Sequence p = make_pp_sequence(labelled(n));
    CHECK(p.size() == static_cast<std::size_t>(2 * n - 1));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == p[p.size() - 1 - i]);
  }
}

TEST_CASE("splitting ping-pong outputs") {
  const Sequence out = make_pp_sequence(labelled(3));
  const PpLegs legs = split_pp_outputs(out);
  REQUIRE(legs.forward.size() == 2);
  REQUIRE(legs.backward.size() == 2);
  CHECK(losses::pp_loss(legs.forward, legs.backward) == 0.0);
  CHECK_THROWS_AS(split_pp_outputs(labelled(4)), Error);
  CHECK(split_pp_outputs(labelled(1)).forward.empty());

  // A generator that drifts on the backward leg is penalized.
  std::vector<Frame> drift(out.frames());
  for (float& x : drift[3].data()) x += 0.1f;
  const PpLegs bad = split_pp_outputs(Sequence(drift));
  CHECK(losses::pp_loss(bad.forward, bad.backward) == doctest::Approx(0.01).epsilon(1e-5));

  // Legs are aligned by source frame: out[i] pairs with out[2n-2-i].
  const Sequence seq = labelled(5);
  const PpLegs l5 = split_pp_outputs(make_pp_sequence(seq));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(l5.forward[i] == seq[i]);
    CHECK(l5.backward[i] == seq[i]);
  }
}

TEST_CASE("original and static triplets") {
  const Sequence s = labelled(4);
  const Triplet t = triplet_original(s, 1);
  CHECK(t.kind == TripletKind::kOriginal);
  CHECK(t.center_index == 2);
  CHECK(t.slots[0] == s[0]);
  CHECK(t.slots[2] == s[2]);
  CHECK_THROWS_AS(triplet_original(s, 0), Error);
  CHECK_THROWS_AS(triplet_original(s, 3), Error);

  const Frame f = fixtures::random_frame(6, 6, 3, 2);
  const Triplet st = triplet_static(f);
  CHECK(st.kind == TripletKind::kStatic);
  for (const Frame& slot : st.slots) CHECK(slot == f);
  const Sequence still = fixtures::constant_sequence(f, 3);
  CHECK(same_triplet_slots(triplet_original(still, 1), triplet_static(f)));
  CHECK(st.stacked().channels == 9);
}

TEST_CASE("warped triplets") {
  const Sequence s = fixtures::translating(fixtures::texture(32, 32, 5), 3, 1, 0);
  const FlowField zero(32, 32);
  const Triplet w0 = triplet_warped(s, zero, zero, 1, 0);
  CHECK(w0.kind == TripletKind::kWarped);
  CHECK(same_triplet_slots(w0, triplet_original(s, 1)));

  const Sequence still = fixtures::constant_sequence(fixtures::texture(32, 32, 6), 3);
  const Triplet ws = triplet_warped(still, fixtures::constant_flow(32, 32, 2.5f, -1.0f),
                                    fixtures::constant_flow(32, 32, -0.5f, 3.0f), 1, 0);
  CHECK(ws.slots[1] == still[1]);

  const Sequence big = fixtures::translating(fixtures::texture(128, 128, 7, 2.0, 3), 3, 1, 0);
  const NeighborFlows nf = neighbor_flows(big, 1);
  CHECK(nf.prev.direction() == FlowDirection::kBackward);
  const Triplet wb = triplet_warped(big, nf.prev, nf.next, 1, 16);
  for (const Frame& slot : wb.slots) {
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        const bool inside = y >= 16 && y < 112 && x >= 16 && x < 112;
        if (!inside) {
          for (int c = 0; c < 3; ++c) REQUIRE(slot.at(y, x, c) == 0.0f);
        }
      }
    }
  }
  // Interior of the centre slot is the untouched frame; neighbours align with it.
  CHECK(wb.slots[1].at(64, 64, 0) == big[1].at(64, 64, 0));
  double err = 0;
  for (int y = 20; y < 108; ++y) {
    for (int x = 20; x < 108; ++x) {
      err += std::abs(wb.slots[0].at(y, x, 0) - wb.slots[1].at(y, x, 0)) +
             std::abs(wb.slots[2].at(y, x, 0) - wb.slots[1].at(y, x, 0));
    }
  }
  CHECK(err / (2.0 * 88 * 88) < 0.01);
}

TEST_CASE("discriminator input stacking") {
  const Sequence s = fixtures::translating(fixtures::texture(16, 16, 2, 2.0, 3), 3, 1, 0);
  const Triplet o = triplet_original(s, 1);
  const FlowField zero(16, 16);
  const Triplet w = triplet_warped(s, zero, zero, 1, 0);
  const Triplet c = triplet_static(s[0]);
  const ChannelStack st = vsr_disc_input(o, w, c);
  CHECK(st.channels == 27);
  // Channel order: original (t-1, t, t+1), warped, conditional; RGB each.
  CHECK(st.at(3, 4, 0) == s[0].at(3, 4, 0));
  CHECK(st.at(3, 4, 5) == s[1].at(3, 4, 2));
  CHECK(st.at(3, 4, 9 + 6) == s[2].at(3, 4, 0));
  CHECK(st.at(3, 4, 18 + 4) == s[0].at(3, 4, 1));
  const Triplet small = triplet_static(Frame(8, 8, 3));
  CHECK_THROWS_AS(vsr_disc_input(o, w, small), Error);
}

TEST_CASE("curriculum schedule") {
  const auto s0 = curriculum_schedule(0, 1000);
  CHECK(s0.static_fraction == 1.0);
  CHECK(s0.warped_fraction == 0.0);
  CHECK(s0.original_fraction == 0.0);
  CHECK(s0.alpha_warped == 0.0);
  CHECK(s0.alpha_original == 0.0);
  CHECK(s0.beta == 1.0);

  const auto half = curriculum_schedule(500, 1000);
  CHECK(half.static_fraction == doctest::Approx(0.75));
  CHECK(half.warped_fraction == doctest::Approx(0.25));
  CHECK(half.original_fraction == 0.0);
  CHECK(half.alpha_warped == 1.0);

  const auto end = curriculum_schedule(1000, 1000);
  CHECK(end.static_fraction == doctest::Approx(0.5));
  CHECK(end.warped_fraction == doctest::Approx(0.25));
  CHECK(end.original_fraction == doctest::Approx(0.25));
  CHECK(end.alpha_warped == 1.0);
  CHECK(end.alpha_original == 1.0);
  CHECK(end.beta == 0.0);

  double prev_static = 2, prev_w = -1, prev_o = -1;
  for (long step = 0; step <= 1200; step += 37) {
    const auto s = curriculum_schedule(step, 1000);
    CHECK(s.static_fraction <= prev_static);
    CHECK(s.warped_fraction >= prev_w);
    CHECK(s.original_fraction >= prev_o);
    CHECK(s.static_fraction + s.warped_fraction + s.original_fraction == doctest::Approx(1.0));
    prev_static = s.static_fraction;
    prev_w = s.warped_fraction;
    prev_o = s.original_fraction;
  }
  CHECK_THROWS_AS(curriculum_schedule(1, 0), Error);
  CHECK_THROWS_AS(curriculum_schedule(1, 10, CurriculumConfig{0.5, 0.2, 0.5, 1.0}), Error);
}

TEST_CASE("curriculum endpoints are exact") {
  const Sequence s = fixtures::translating(fixtures::texture(32, 32, 8, 2.0, 3), 3, 2, 1);
  const NeighborFlows nf = neighbor_flows(s, 1);
  const Triplet st = triplet_static(s[1], 2);
  const Triplet wt = triplet_warped(s, nf.prev, nf.next, 1, 4);
  const OriginalParts parts{s[0], s[1], s[2], nf.prev, nf.next};

  const auto start = curriculum_schedule(0, 100);
  for (auto track : {CurriculumTrack::kWarped, CurriculumTrack::kOriginal}) {
    const Triplet m = curriculum_mix(st, wt, parts, start, track);
    CHECK(m.kind == TripletKind::kStatic);
    CHECK(same_triplet_slots(m, st));
  }
  const auto finish = curriculum_schedule(100, 100);
  const Triplet orig = curriculum_mix(st, wt, parts, finish, CurriculumTrack::kOriginal);
  CHECK(orig.kind == TripletKind::kOriginal);
  CHECK(same_triplet_slots(orig, triplet_original(s, 1)));
  const Triplet warped = curriculum_mix(st, wt, parts, finish, CurriculumTrack::kWarped);
  CHECK(same_triplet_slots(warped, wt));

  // Mid-way blend arithmetic.
  const Triplet zero = triplet_static(Frame(4, 4, 1, 0.0f));
  const Triplet one{{Frame(4, 4, 1, 1.0f), Frame(4, 4, 1, 1.0f), Frame(4, 4, 1, 1.0f)}, TripletKind::kWarped, 0};
  CurriculumState mid;
  mid.alpha_warped = 0.5;
  const OriginalParts dummy{Frame(4, 4, 1), Frame(4, 4, 1), Frame(4, 4, 1), FlowField(4, 4), FlowField(4, 4)};
  const Triplet half = curriculum_mix(zero, one, dummy, mid, CurriculumTrack::kWarped);
  for (const Frame& slot : half.slots) {
    for (float x : slot.data()) CHECK(x == 0.5f);
  }
  mid.alpha_warped = 1.5;
  CHECK_THROWS_AS(curriculum_mix(zero, one, dummy, mid, CurriculumTrack::kWarped), Error);
}
