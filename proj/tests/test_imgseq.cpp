#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "teco/error.hpp"
#include "teco/imgseq.hpp"

using namespace teco;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected teco::Error");
  return ErrorCode::kInvalidArgument;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected teco::Error");
  return {};
}

// Writes a PNG through libpng directly so the reader is tested against an
// independent encoder.
void write_raw_png(const fs::path& path, int w, int h, int bit_depth, int color_type,
                   const std::vector<unsigned char>& bytes) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  REQUIRE(fp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : color_type == PNG_COLOR_TYPE_RGBA ? 4 : 1;
  const std::size_t stride = static_cast<std::size_t>(w) * channels * (bit_depth / 8);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<unsigned char*>(bytes.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

TEST_CASE("frame construction validates shape and values") {
  CHECK(code_of([] { Frame(2, 2, 2); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { Frame(0, 2, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { Frame(2, 2, 1, std::vector<float>(3)); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([] { Frame(1, 1, 1, std::vector<float>{NAN}); }) == ErrorCode::kInvalidArgument);
  Frame f(2, 3, 3, 0.25f);
  CHECK(f.size() == 18);
  CHECK(f.colorspace() == ColorSpace::kRgb);
  CHECK(f.at(1, 2, 2) == 0.25f);
}

TEST_CASE("sequence rejects mixed shapes and empty input") {
  CHECK(code_of([] { Sequence(std::vector<Frame>{}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { Sequence({Frame(2, 2, 1), Frame(2, 3, 1)}); }) == ErrorCode::kShapeMismatch);
  Sequence s({Frame(2, 2, 1, 0), Frame(2, 2, 1, 1), Frame(2, 2, 1, 2)}, 5);
  const Sequence sub = s.slice(1, 2);
  CHECK(sub.size() == 2);
  CHECK(sub.start_index() == 6);
  CHECK(sub[0].at(0, 0) == 1.0f);
}

TEST_CASE("load_frame normalizes 8-bit values") {
  const auto dir = fixtures::scratch_dir("load_frame");
  write_raw_png(dir / "white.png", 2, 2, 8, PNG_COLOR_TYPE_GRAY, std::vector<unsigned char>(4, 255));
  const Frame white = load_frame(dir / "white.png");
  CHECK(white.channels() == 1);
  for (float x : white.data()) CHECK(x == 1.0f);

  write_raw_png(dir / "mid.png", 1, 1, 8, PNG_COLOR_TYPE_RGB, {128, 0, 255});
  const Frame mid = load_frame(dir / "mid.png");
  CHECK(mid.channels() == 3);
  CHECK(mid.at(0, 0, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-7));
  CHECK(mid.at(0, 0, 0) == doctest::Approx(0.50196).epsilon(1e-5));
  CHECK(mid.label() == "teco_test_load_frame/mid.png");
}

TEST_CASE("load_frame error codes") {
  const auto dir = fixtures::scratch_dir("load_errors");
  write_raw_png(dir / "deep.png", 2, 1, 16, PNG_COLOR_TYPE_GRAY, std::vector<unsigned char>(4, 7));
  CHECK(code_of([&] { load_frame(dir / "deep.png"); }) == ErrorCode::kUnsupportedBitDepth);
  CHECK(message_of([&] { load_frame(dir / "deep.png"); }).find("unsupported bit depth") != std::string::npos);
  write_raw_png(dir / "alpha.png", 1, 1, 8, PNG_COLOR_TYPE_RGBA, {1, 2, 3, 4});
  CHECK(code_of([&] { load_frame(dir / "alpha.png"); }) == ErrorCode::kUnsupportedFormat);
  CHECK(code_of([&] { load_frame(dir / "nope.png"); }) == ErrorCode::kFileNotFound);
  {
    std::ofstream(dir / "junk.png") << "definitely not a png";
  }
  CHECK(code_of([&] { load_frame(dir / "junk.png"); }) == ErrorCode::kUnsupportedFormat);
}

TEST_CASE("save/load round trip is exact after one quantization") {
  const auto dir = fixtures::scratch_dir("roundtrip");
  for (int c : {1, 3}) {
    const Frame f = fixtures::random_frame(7, 5, c, 11u + c);
    save_frame(f, dir / "f.png");
    const Frame g = load_frame(dir / "f.png");
    REQUIRE(g.same_shape(f));
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(g.data()[i] == static_cast<float>(std::lround(f.data()[i] * 255.0f)) / 255.0f);
    }
    save_frame(g, dir / "g.png");
    CHECK(load_frame(dir / "g.png") == g);
  }
}

TEST_CASE("load_sequence numbering") {
  const auto dir = fixtures::scratch_dir("sequence");
  for (int i = 1; i <= 4; ++i) {
    save_frame(Frame(3, 3, 1, i / 10.0f), dir / format_frame_name("frame_%04d.png", i));
  }
  const Sequence s = load_sequence(dir, "frame_%04d.png");
  CHECK(s.size() == 4);
  CHECK(s.start_index() == 1);
  CHECK(s[2].at(0, 0) == doctest::Approx(0.3).epsilon(0.01));

  const Sequence part = load_sequence(dir, "frame_%04d.png", IndexRange{2, 3});
  CHECK(part.size() == 2);
  CHECK(part.start_index() == 2);

  fs::remove(dir / "frame_0003.png");
  CHECK(code_of([&] { load_sequence(dir, "frame_%04d.png"); }) == ErrorCode::kMissingFrame);
  CHECK(message_of([&] { load_sequence(dir, "frame_%04d.png"); }).find("missing frame 3") !=
        std::string::npos);

  save_frame(Frame(4, 3, 1), dir / "frame_0003.png");
  CHECK(code_of([&] { load_sequence(dir, "frame_%04d.png"); }) == ErrorCode::kShapeMismatch);

  CHECK(code_of([&] { load_sequence(dir / "absent"); }) == ErrorCode::kFileNotFound);
  const auto empty = fixtures::scratch_dir("sequence_empty");
  CHECK(code_of([&] { load_sequence(empty); }) == ErrorCode::kFileNotFound);
}

TEST_CASE("to_luma") {
  const Frame white(2, 2, 3, 1.0f);
  const Frame white_luma = to_luma(white);
  for (float x : white_luma.data()) CHECK(x == doctest::Approx(1.0).epsilon(1e-6));
  Frame red(1, 1, 3);
  red.at(0, 0, 0) = 1.0f;
  CHECK(to_luma(red).at(0, 0) == doctest::Approx(0.299).epsilon(1e-6));
  const Frame gray = fixtures::random_frame(4, 4, 1, 3);
  CHECK(to_luma(gray) == gray);
  const Frame rgb = fixtures::random_frame(4, 4, 3, 4);
  CHECK(to_luma(to_luma(rgb)) == to_luma(rgb));
}

// Independent restatement of the crop rule: strip the border, then trim
// the excess over the largest divisor multiple, floor before / ceil after.
static std::array<int, 4> crop_oracle(int h, int w, int border, int divisor) {
  const int ih = h - 2 * border, iw = w - 2 * border;
  const int eh = ih % divisor, ew = iw % divisor;
  return {border + eh / 2, border + ew / 2, ih - eh, iw - ew};
}

TEST_CASE("protocol_crop arithmetic") {
  const Frame hr(536, 1280, 1);
  const Frame out = protocol_crop(hr, 8, 8);
  CHECK(out.width() == 1264);
  CHECK(out.height() == 520);

  Frame lr(134, 320, 1);
  for (int y = 0; y < lr.height(); ++y) {
    for (int x = 0; x < lr.width(); ++x) lr.at(y, x) = static_cast<float>(y * 1000 + x) / 1e6f;
  }
  const Frame small = protocol_crop(lr, 8, 8);
  CHECK(small.width() == 304);
  CHECK(small.height() == 112);
  // 118 rows trimmed to 112: 3 removed before, 3 after.
  CHECK(small.at(0, 0) == lr.at(8 + 3, 8));

  CHECK_THROWS_AS(protocol_crop(Frame(16, 16, 1), 8, 8), Error);

  for (int h = 20; h < 60; h += 3) {
    for (int w = 20; w < 60; w += 5) {
      for (int d : {1, 4, 8}) {
        Frame f(h, w, 1);
        for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = static_cast<float>(i) / 1e5f;
        const auto [top, left, ch, cw] = crop_oracle(h, w, 4, d);
        const Frame got = protocol_crop(f, 4, d);
        REQUIRE(got.height() == ch);
        REQUIRE(got.width() == cw);
        CHECK(got.at(0, 0) == f.at(top, left));
        CHECK(got.at(ch - 1, cw - 1) == f.at(top + ch - 1, left + cw - 1));
        // Idempotent once aligned and border-free.
        CHECK(protocol_crop(got, 0, d) == got);
      }
    }
  }
}

TEST_CASE("skip_frames") {
  std::vector<Frame> frames;
  for (int i = 0; i < 10; ++i) frames.emplace_back(2, 2, 1, i / 10.0f);
  const Sequence s(frames, 1);
  CHECK(skip_frames(s, 2, 2).size() == 6);
  CHECK(skip_frames(s, 3, 2).size() == 5);
  CHECK(skip_frames(s, 3, 2).start_index() == 4);
  const Sequence same = skip_frames(s, 0, 0);
  CHECK(same.size() == 10);
  CHECK(same[9] == s[9]);
  CHECK_THROWS_AS(skip_frames(s, 5, 5), Error);
}

TEST_CASE("resize and blur preserve constants") {
  const Frame c(10, 13, 3, 0.4f);
  for (const Frame& out : {resize_bilinear(c, 5, 7), resize_bicubic(c, 21, 9), gaussian_blur(c, 1.5, 7)}) {
    for (float x : out.data()) CHECK(x == doctest::Approx(0.4).epsilon(1e-6));
  }
  const Frame r = fixtures::random_frame(9, 9, 1, 5);
  CHECK(resize_bicubic(r, 9, 9) == r);
  CHECK(resize_bilinear(r, 9, 9) == r);
}
