#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>
#include <vector>

#include "teco/error.hpp"
#include "teco/flow.hpp"
#include "teco/imgseq.hpp"
#include "teco/losses.hpp"
#include "teco/metrics.hpp"
#include "teco/perceptual.hpp"
#include "teco/pipeline.hpp"
#include "teco/warp.hpp"

namespace py = pybind11;
using namespace teco;

namespace {

using F32 = py::array_t<float, py::array::c_style>;

// Float arrays of the exact dtype are accepted in any layout; non-contiguous
// ones are copied to a contiguous buffer first.
template <typename T>
py::array_t<T, py::array::c_style> exact(const py::array& a, const std::string& what) {
  if (!py::dtype::of<T>().is(a.dtype())) {
    throw py::type_error(what + " must be a " + std::string(py::str(py::dtype::of<T>())) +
                         " array, got " + std::string(py::str(a.dtype())));
  }
  return py::array_t<T, py::array::c_style>::ensure(a);
}

[[noreturn]] void bad_shape(const std::string& what, const std::string& expected) {
  throw Error(ErrorCode::kShapeMismatch, what + " must have shape " + expected);
}

// Frames are owned by the library, so arrays are always copied in and out.
Frame to_frame(const py::array& arr, const std::string& what) {
  const auto a = exact<float>(arr, what);
  if (a.ndim() != 2 && a.ndim() != 3) bad_shape(what, "(H, W) or (H, W, C)");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  std::vector<float> data(a.data(), a.data() + a.size());
  return Frame(h, w, c, std::move(data));
}

std::vector<Frame> to_frames(const py::array& arr, const std::string& what) {
  const auto a = exact<float>(arr, what);
  if (a.ndim() != 3 && a.ndim() != 4) bad_shape(what, "(N, H, W) or (N, H, W, C)");
  const std::size_t n = static_cast<std::size_t>(a.shape(0));
  const int h = static_cast<int>(a.shape(1)), w = static_cast<int>(a.shape(2));
  const int c = a.ndim() == 4 ? static_cast<int>(a.shape(3)) : 1;
  const std::size_t per = static_cast<std::size_t>(h) * w * c;
  std::vector<Frame> frames;
  frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    frames.emplace_back(h, w, c, std::vector<float>(a.data() + i * per, a.data() + (i + 1) * per));
  }
  return frames;
}

Sequence to_sequence(const py::array& arr, const std::string& what) {
  auto frames = to_frames(arr, what);
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, what + " has no frames");
  return Sequence(std::move(frames));
}

F32 from_frame(const Frame& f) {
  F32 out({f.height(), f.width(), f.channels()});
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

F32 from_frames(const std::vector<Frame>& frames, int h, int w, int c) {
  F32 out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(h),
           static_cast<py::ssize_t>(w), static_cast<py::ssize_t>(c)});
  float* dst = out.mutable_data();
  for (const Frame& f : frames) dst = std::copy(f.data().begin(), f.data().end(), dst);
  return out;
}

FlowField deinterleave(const float* src, int h, int w) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<float> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = src[2 * i];
    v[i] = src[2 * i + 1];
  }
  return FlowField(h, w, std::move(u), std::move(v));
}

FlowField to_flow(const py::array& arr, const std::string& what) {
  const auto a = exact<float>(arr, what);
  if (a.ndim() != 3 || a.shape(2) != 2) bad_shape(what, "(H, W, 2)");
  return deinterleave(a.data(), static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
}

std::vector<FlowField> to_flows(const py::array& arr, const std::string& what) {
  const auto a = exact<float>(arr, what);
  if (a.ndim() != 4 || a.shape(3) != 2) bad_shape(what, "(N, H, W, 2)");
  const int h = static_cast<int>(a.shape(1)), w = static_cast<int>(a.shape(2));
  const std::size_t per = static_cast<std::size_t>(h) * w * 2;
  std::vector<FlowField> out;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out.push_back(deinterleave(a.data() + i * per, h, w));
  return out;
}

F32 from_flow(const FlowField& f) {
  F32 out({f.height(), f.width(), 2});
  float* dst = out.mutable_data();
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    dst[2 * i] = f.u()[i];
    dst[2 * i + 1] = f.v()[i];
  }
  return out;
}

std::vector<double> to_vector(const py::array& arr) {
  const auto a = exact<double>(arr, "scores");
  if (a.ndim() != 1) bad_shape("scores", "(N,)");
  return {a.data(), a.data() + a.size()};
}

losses::FeatureMap to_features(const py::array& arr, const std::string& what) {
  const auto a = exact<double>(arr, what);
  if (a.ndim() != 2) bad_shape(what, "(channels, positions)");
  return losses::FeatureMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                            std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

losses::LossWeights weights_from(const py::object& weights) {
  if (py::isinstance<py::str>(weights)) {
    const auto name = weights.cast<std::string>();
    if (name == "vsr") return losses::LossWeights::vsr();
    if (name == "uvt") return losses::LossWeights::uvt();
    throw Error(ErrorCode::kInvalidArgument, "unknown preset '" + name + "'");
  }
  const auto m = weights.cast<std::map<std::string, double>>();
  losses::LossWeights w;
  for (const auto& [k, v] : m) {
    if (k == "warp") w.warp = v;
    else if (k == "pp") w.pp = v;
    else if (k == "adv") w.adv = v;
    else if (k == "phi") w.phi = v;
    else if (k == "phi_discriminator") w.phi_discriminator = v;
    else if (k == "content") w.content = v;
    else throw Error(ErrorCode::kInvalidArgument, "unknown loss weight '" + k + "'");
  }
  return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Temporal video metrics, losses and ping-pong helpers.";

  // The type lives as long as the interpreter, so the handle is never released.
  static const py::handle error_type = py::exception<Error>(m, "TecoError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<FlowParams>(m, "FlowParams")
      .def(py::init([](double pyramid_scale, int levels, int window, int iterations, int poly_n,
                       double poly_sigma) {
             FlowParams p{pyramid_scale, levels, window, iterations, poly_n, poly_sigma};
             p.validate();
             return p;
           }),
           py::arg("pyramid_scale") = 0.5, py::arg("levels") = 3, py::arg("window") = 15,
           py::arg("iterations") = 3, py::arg("poly_n") = 5, py::arg("poly_sigma") = 1.2)
      .def_readwrite("pyramid_scale", &FlowParams::pyramid_scale)
      .def_readwrite("levels", &FlowParams::levels)
      .def_readwrite("window", &FlowParams::window)
      .def_readwrite("iterations", &FlowParams::iterations)
      .def_readwrite("poly_n", &FlowParams::poly_n)
      .def_readwrite("poly_sigma", &FlowParams::poly_sigma);

  // ------------------------------------------------------------ metrics

  m.def(
      "psnr",
      [](const py::array& gt, const py::array& gen) {
        const Frame a = to_frame(gt, "gt"), b = to_frame(gen, "gen");
        py::gil_scoped_release release;
        return psnr(a, b);
      },
      py::arg("gt").noconvert(), py::arg("gen").noconvert(),
      "PSNR in dB over [0, 1] intensities. Identical frames give float('inf').");

  m.def(
      "tdiff",
      [](const py::array& gen, const FlowParams& params, int threads) {
        const Sequence s = to_sequence(gen, "gen");
        std::vector<double> r;
        {
          py::gil_scoped_release release;
          r = tdiff(s, params, threads);
        }
        return to_array(r);
      },
      py::arg("gen").noconvert(), py::arg("params") = FlowParams{}, py::arg("threads") = 1,
      "Per-frame T-diff for frames 1..N-1 using internally estimated backward flow.");

  m.def(
      "tof",
      [](const py::array& ref, const py::array& gen, const FlowParams& params, int threads) {
        const Sequence r = to_sequence(ref, "ref"), g = to_sequence(gen, "gen");
        std::vector<double> out;
        {
          py::gil_scoped_release release;
          out = tof(r, g, params, threads);
        }
        return to_array(out);
      },
      py::arg("ref").noconvert(), py::arg("gen").noconvert(), py::arg("params") = FlowParams{},
      py::arg("threads") = 1, "Per-pair tOF for pairs (t-1, t), t = 1..N-1.");

  m.def(
      "tlp",
      [](const py::array& ref, const py::array& gen, const std::string& backend, const std::string& table,
         int threads) {
        const Sequence r = to_sequence(ref, "ref"), g = to_sequence(gen, "gen");
        const auto b = make_backend(backend, table);
        std::vector<double> out;
        {
          py::gil_scoped_release release;
          out = tlp(r, g, *b, threads);
        }
        return to_array(out);
      },
      py::arg("ref").noconvert(), py::arg("gen").noconvert(), py::arg("backend") = "msgrad",
      py::arg("table") = "", py::arg("threads") = 1,
      "Per-pair tLP. The table backend needs labelled frames and is not useful on arrays.");

  m.def(
      "perceptual_distance",
      [](const py::array& a, const py::array& b) {
        const Frame fa = to_frame(a, "a"), fb = to_frame(b, "b");
        py::gil_scoped_release release;
        return msgrad_distance(fa, fb);
      },
      py::arg("a").noconvert(), py::arg("b").noconvert(), "Built-in perceptual distance.");

  // --------------------------------------------------------- flow, warp

  m.def(
      "estimate_flow",
      [](const py::array& prev, const py::array& next, const FlowParams& params) {
        const Frame a = to_frame(prev, "prev"), b = to_frame(next, "next");
        FlowField f;
        {
          py::gil_scoped_release release;
          f = estimate_flow(a, b, params);
        }
        return from_flow(f);
      },
      py::arg("prev").noconvert(), py::arg("next").noconvert(), py::arg("params") = FlowParams{},
      "Dense flow (H, W, 2) as (u, v) with prev(p) ~ next(p + flow(p)).");

  m.def(
      "backward_warp",
      [](const py::array& frame, const py::array& flow) {
        const Frame f = to_frame(frame, "frame");
        const FlowField v = to_flow(flow, "flow");
        Frame out;
        {
          py::gil_scoped_release release;
          out = backward_warp(f, v);
        }
        return from_frame(out);
      },
      py::arg("frame").noconvert(), py::arg("flow").noconvert(),
      "out(x, y) = frame(x + u, y + v), bilinear with clamped coordinates.");

  // ------------------------------------------------------------- losses

  m.def(
      "warp_loss",
      [](const py::array& seq, const py::array& flows, int margin) {
        const Sequence s = to_sequence(seq, "seq");
        const auto f = to_flows(flows, "flows");
        py::gil_scoped_release release;
        return losses::warp_loss(s, f, margin);
      },
      py::arg("seq").noconvert(), py::arg("flows").noconvert(), py::arg("margin") = 0,
      "Sum over t of MSE(a_t, W(a_{t-1}, flows[t-1])).");
  m.def(
      "pp_loss",
      [](const py::array& forward, const py::array& backward) {
        const auto f = to_frames(forward, "forward"), b = to_frames(backward, "backward");
        py::gil_scoped_release release;
        return losses::pp_loss(f, b);
      },
      py::arg("forward").noconvert(), py::arg("backward").noconvert());
  m.def(
      "content_loss_vsr",
      [](const py::array& gen, const py::array& target) {
        return losses::content_loss_vsr(to_frame(gen, "generated"), to_frame(target, "target"));
      },
      py::arg("generated").noconvert(), py::arg("target").noconvert());
  m.def(
      "content_loss_uvt",
      [](const py::array& cycle_a, const py::array& a, const py::array& cycle_b, const py::array& b) {
        return losses::content_loss_uvt(to_frame(cycle_a, "cycle_a"), to_frame(a, "a"),
                                        to_frame(cycle_b, "cycle_b"), to_frame(b, "b"));
      },
      py::arg("cycle_a").noconvert(), py::arg("a").noconvert(), py::arg("cycle_b").noconvert(),
      py::arg("b").noconvert());
  m.def(
      "adv_g_vsr", [](const py::array& d) { return losses::adv_g_vsr(to_vector(d)); },
      py::arg("d_fake").noconvert());
  m.def(
      "adv_g_uvt", [](const py::array& d) { return losses::adv_g_uvt(to_vector(d)); },
      py::arg("d_fake").noconvert());
  m.def(
      "d_loss_vsr",
      [](const py::array& r, const py::array& f) { return losses::d_loss_vsr(to_vector(r), to_vector(f)); },
      py::arg("d_real").noconvert(), py::arg("d_fake").noconvert());
  m.def(
      "d_loss_uvt",
      [](const py::array& r, const py::array& f) { return losses::d_loss_uvt(to_vector(r), to_vector(f)); },
      py::arg("d_real").noconvert(), py::arg("d_fake").noconvert());
  m.def(
      "cosine_feature_loss",
      [](const py::array& g, const py::array& t) {
        return losses::cosine_feature_loss(to_features(g, "generated"), to_features(t, "target"));
      },
      py::arg("generated").noconvert(), py::arg("target").noconvert());
  m.def(
      "gram_matrix",
      [](const py::array& f) {
        const losses::Gram g = losses::gram_matrix(to_features(f, "features"));
        py::array_t<double> out({g.size, g.size});
        std::copy(g.data.begin(), g.data.end(), out.mutable_data());
        return out;
      },
      py::arg("features").noconvert(), "F F^T / positions for (channels, positions) features.");
  m.def(
      "gram_loss",
      [](const py::array& g, const py::array& t) {
        return losses::gram_loss(to_features(g, "generated"), to_features(t, "target"));
      },
      py::arg("generated").noconvert(), py::arg("target").noconvert());
  m.def(
      "total_generator_loss",
      [](const std::map<std::string, double>& parts, const py::object& weights) {
        const auto t = losses::total_generator_loss(parts, weights_from(weights));
        return py::make_tuple(t.value, t.missing);
      },
      py::arg("parts"), py::arg("weights") = "vsr",
      "Weighted sum of named parts; `weights` is 'vsr', 'uvt' or a dict. Returns (total, missing).");

  // ---------------------------------------------------------- ping-pong

  m.def(
      "make_pp_sequence",
      [](const py::array& seq) {
        const Sequence s = to_sequence(seq, "seq");
        const Sequence pp = make_pp_sequence(s);
        return from_frames(pp.frames(), s.height(), s.width(), s.channels());
      },
      py::arg("seq").noconvert(), "a_1 .. a_n .. a_1 as an (2N-1, H, W, C) array.");
  m.def("pp_index_map", &pp_index_map, py::arg("n"));
  m.def(
      "split_pp_outputs",
      [](const py::array& outputs) {
        const Sequence s = to_sequence(outputs, "outputs");
        const PpLegs legs = split_pp_outputs(s);
        return py::make_tuple(from_frames(legs.forward, s.height(), s.width(), s.channels()),
                              from_frames(legs.backward, s.height(), s.width(), s.channels()));
      },
      py::arg("outputs").noconvert(),
      "(forward, backward) legs of a ping-pong output, aligned frame by frame.");
}
