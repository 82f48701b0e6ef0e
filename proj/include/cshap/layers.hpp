/*
 * Copyright 2026 The cshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Complex-valued network layers: parameters, shape rules and forward passes.
//
// Activation layout conventions:
//   ComplexLinear      input [in]           -> output [out]
//   ComplexConv2d      input [C, H, W]      -> output [outC, H', W']
//   MagnitudeMaxPool   input [C, H, W]      -> output [C, H', W']
//   Flatten            input any            -> output [numel]
//   pointwise layers   input any            -> same shape
//
// Real-valued layers (RealPart, Magnitude, SquaredMagnitude) still produce
// complex tensors, with a zero imaginary part.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cshap/error.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

struct ComplexLinear {
  CTensor weight;  // [out, in]
  CTensor bias;    // [out]

  std::size_t in_features() const { return weight.shape()[1]; }
  std::size_t out_features() const { return weight.shape()[0]; }
};

struct ComplexConv2d {
  CTensor kernel;  // [outC, inC, kh, kw]
  CTensor bias;    // [outC]
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_channels() const { return kernel.shape()[0]; }
  std::size_t in_channels() const { return kernel.shape()[1]; }
  std::size_t kernel_h() const { return kernel.shape()[2]; }
  std::size_t kernel_w() const { return kernel.shape()[3]; }
};

// Projection onto the closed first quadrant: max(0, Re z) + i max(0, Im z).
struct CReLU {};
// Keeps z when Re z > 0 and Im z > 0, zero otherwise.
struct ZReLU {};
// Selects, per window and channel, the element of largest magnitude.
struct MagnitudeMaxPool {
  std::size_t window_h = 2;
  std::size_t window_w = 2;
  std::size_t stride = 2;
};
struct Flatten {};
struct RealPart {};
struct Magnitude {};
struct SquaredMagnitude {};

using Layer = std::variant<ComplexLinear, ComplexConv2d, CReLU, ZReLU,
                           MagnitudeMaxPool, Flatten, RealPart, Magnitude,
                           SquaredMagnitude>;

namespace detail {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace detail

inline std::string_view layer_kind(const Layer& layer) {
  return std::visit(
      detail::Overloaded{
          [](const ComplexLinear&) { return std::string_view("ComplexLinear"); },
          [](const ComplexConv2d&) { return std::string_view("ComplexConv2d"); },
          [](const CReLU&) { return std::string_view("CReLU"); },
          [](const ZReLU&) { return std::string_view("ZReLU"); },
          [](const MagnitudeMaxPool&) {
            return std::string_view("MagnitudeMaxPool");
          },
          [](const Flatten&) { return std::string_view("Flatten"); },
          [](const RealPart&) { return std::string_view("RealPart"); },
          [](const Magnitude&) { return std::string_view("Magnitude"); },
          [](const SquaredMagnitude&) {
            return std::string_view("SquaredMagnitude");
          },
      },
      layer);
}

inline bool is_pointwise(const Layer& layer) {
  return std::holds_alternative<CReLU>(layer) ||
         std::holds_alternative<ZReLU>(layer) ||
         std::holds_alternative<RealPart>(layer) ||
         std::holds_alternative<Magnitude>(layer) ||
         std::holds_alternative<SquaredMagnitude>(layer);
}

inline bool has_parameters(const Layer& layer) {
  return std::holds_alternative<ComplexLinear>(layer) ||
         std::holds_alternative<ComplexConv2d>(layer);
}

// ---------------------------------------------------------------------------
// Pointwise functions.

inline CScalar crelu(CScalar z) {
  return {std::max(0.0, z.real()), std::max(0.0, z.imag())};
}

inline CScalar zrelu(CScalar z) {
  return (z.real() > 0.0 && z.imag() > 0.0) ? z : CScalar{};
}

inline CScalar apply_pointwise(const Layer& layer, CScalar z) {
  if (std::holds_alternative<CReLU>(layer)) return crelu(z);
  if (std::holds_alternative<ZReLU>(layer)) return zrelu(z);
  if (std::holds_alternative<RealPart>(layer)) return {z.real(), 0.0};
  if (std::holds_alternative<Magnitude>(layer)) return {std::abs(z), 0.0};
  if (std::holds_alternative<SquaredMagnitude>(layer)) return {std::norm(z), 0.0};
  throw UnsupportedLayerError(std::string(layer_kind(layer)) +
                              " is not a pointwise layer");
}

// Derivatives of a pointwise layer along the real and the imaginary axis of
// its input, d g / d Re(z) and d g / d Im(z). Kinks take derivative 0.
inline std::pair<CScalar, CScalar> pointwise_axis_derivatives(const Layer& layer,
                                                              CScalar z) {
  const double a = z.real();
  const double b = z.imag();
  if (std::holds_alternative<CReLU>(layer)) {
    return {a > 0.0 ? 1.0 : 0.0, b > 0.0 ? kI : CScalar{}};
  }
  if (std::holds_alternative<ZReLU>(layer)) {
    const bool on = a > 0.0 && b > 0.0;
    return {on ? 1.0 : 0.0, on ? kI : CScalar{}};
  }
  if (std::holds_alternative<RealPart>(layer)) return {1.0, 0.0};
  if (std::holds_alternative<Magnitude>(layer)) {
    const double r = std::abs(z);
    if (r == 0.0) return {0.0, 0.0};
    return {a / r, b / r};
  }
  if (std::holds_alternative<SquaredMagnitude>(layer)) return {2.0 * a, 2.0 * b};
  throw UnsupportedLayerError(std::string(layer_kind(layer)) +
                              " is not a pointwise layer");
}

// ---------------------------------------------------------------------------
// Magnitude max-pooling.

struct WindowMax {
  CScalar value;
  std::size_t position;  // index within the window
};

// Element of largest magnitude; ties go to the lowest position.
inline WindowMax cmaxpool_argmax(std::span<const CScalar> window) {
  if (window.empty()) throw ValidationError("cmaxpool of an empty window");
  std::size_t best = 0;
  double best_mag = std::abs(window[0]);
  for (std::size_t i = 1; i < window.size(); ++i) {
    const double m = std::abs(window[i]);
    if (m > best_mag) {
      best = i;
      best_mag = m;
    }
  }
  return {window[best], best};
}

inline CScalar cmaxpool_window(std::span<const CScalar> window) {
  return cmaxpool_argmax(window).value;
}

inline CScalar cmaxpool_window(const CTensor& window) {
  return cmaxpool_window(window.data());
}

// Flat input indices of every pooling window, one list per output element,
// in output row-major order. Within a window indices are row-major.
inline std::vector<std::vector<std::size_t>> pool_windows(
    const MagnitudeMaxPool& pool, const Shape& in_shape) {
  const std::size_t channels = in_shape[0];
  const std::size_t height = in_shape[1];
  const std::size_t width = in_shape[2];
  const std::size_t out_h = (height - pool.window_h) / pool.stride + 1;
  const std::size_t out_w = (width - pool.window_w) / pool.stride + 1;
  std::vector<std::vector<std::size_t>> windows;
  windows.reserve(channels * out_h * out_w);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        std::vector<std::size_t> w;
        w.reserve(pool.window_h * pool.window_w);
        for (std::size_t ky = 0; ky < pool.window_h; ++ky) {
          for (std::size_t kx = 0; kx < pool.window_w; ++kx) {
            const std::size_t y = oy * pool.stride + ky;
            const std::size_t x = ox * pool.stride + kx;
            w.push_back((c * height + y) * width + x);
          }
        }
        windows.push_back(std::move(w));
      }
    }
  }
  return windows;
}

// ---------------------------------------------------------------------------
// Shape inference.

inline Shape output_shape(const Layer& layer, const Shape& in) {
  auto fail = [&](const std::string& what) -> ShapeError {
    return ShapeError(std::string(layer_kind(layer)) + ": " + what +
                      " (input " + shape_to_string(in) + ")");
  };
  return std::visit(
      detail::Overloaded{
          [&](const ComplexLinear& l) -> Shape {
            if (l.weight.rank() != 2) throw fail("weight must be [out, in]");
            if (l.bias.shape() != Shape{l.out_features()}) {
              throw fail("bias must be [" + std::to_string(l.out_features()) + "]");
            }
            if (in.size() != 1 || in[0] != l.in_features()) {
              throw fail("expects input [" + std::to_string(l.in_features()) + "]");
            }
            return {l.out_features()};
          },
          [&](const ComplexConv2d& l) -> Shape {
            if (l.kernel.rank() != 4) throw fail("kernel must be [outC, inC, kh, kw]");
            if (l.bias.shape() != Shape{l.out_channels()}) throw fail("bias must be [outC]");
            if (l.stride == 0) throw fail("stride must be positive");
            if (in.size() != 3 || in[0] != l.in_channels()) {
              throw fail("expects input [" + std::to_string(l.in_channels()) + ", H, W]");
            }
            const std::size_t ph = in[1] + 2 * l.padding;
            const std::size_t pw = in[2] + 2 * l.padding;
            if (ph < l.kernel_h() || pw < l.kernel_w()) throw fail("kernel larger than input");
            return {l.out_channels(), (ph - l.kernel_h()) / l.stride + 1,
                    (pw - l.kernel_w()) / l.stride + 1};
          },
          [&](const MagnitudeMaxPool& p) -> Shape {
            if (p.window_h == 0 || p.window_w == 0 || p.stride == 0) {
              throw fail("window and stride must be positive");
            }
            if (in.size() != 3) throw fail("expects input [C, H, W]");
            if (in[1] < p.window_h || in[2] < p.window_w) throw fail("window larger than input");
            return {in[0], (in[1] - p.window_h) / p.stride + 1,
                    (in[2] - p.window_w) / p.stride + 1};
          },
          [&](const Flatten&) -> Shape { return {shape_numel(in)}; },
          [&](const auto&) -> Shape { return in; },
      },
      layer);
}

// ---------------------------------------------------------------------------
// Linear maps. `apply_transpose` computes W^T v (no conjugation); backward
// passes and multiplier chains are both built from it.

inline CTensor linear_forward(const ComplexLinear& l, const CTensor& x) {
  const std::size_t out = l.out_features();
  const std::size_t in = l.in_features();
  std::vector<CScalar> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    CScalar acc = l.bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += l.weight[o * in + i] * x[i];
    y[o] = acc;
  }
  return CTensor(Shape{out}, std::move(y));
}

inline CTensor linear_transpose(const ComplexLinear& l, const CTensor& v) {
  const std::size_t out = l.out_features();
  const std::size_t in = l.in_features();
  std::vector<CScalar> r(in);
  for (std::size_t o = 0; o < out; ++o) {
    const CScalar vo = v[o];
    if (vo == CScalar{}) continue;
    for (std::size_t i = 0; i < in; ++i) r[i] += l.weight[o * in + i] * vo;
  }
  return CTensor(Shape{in}, std::move(r));
}

namespace detail {

// Calls f(out_flat, in_flat, kernel_flat) for every multiply-accumulate of
// the convolution that touches a non-padding input element.
template <class F>
void for_each_conv_tap(const ComplexConv2d& l, const Shape& in_shape,
                       const Shape& out_shape, F&& f) {
  const std::size_t in_c = l.in_channels();
  const std::size_t kh = l.kernel_h();
  const std::size_t kw = l.kernel_w();
  const std::size_t h = in_shape[1];
  const std::size_t w = in_shape[2];
  const std::size_t oh = out_shape[1];
  const std::size_t ow = out_shape[2];
  const auto pad = static_cast<std::ptrdiff_t>(l.padding);
  for (std::size_t oc = 0; oc < l.out_channels(); ++oc) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t out_flat = (oc * oh + oy) * ow + ox;
        for (std::size_t ic = 0; ic < in_c; ++ic) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const std::ptrdiff_t y =
                static_cast<std::ptrdiff_t>(oy * l.stride + ky) - pad;
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::ptrdiff_t x =
                  static_cast<std::ptrdiff_t>(ox * l.stride + kx) - pad;
              if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
              const std::size_t in_flat =
                  (ic * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x);
              const std::size_t k_flat = ((oc * in_c + ic) * kh + ky) * kw + kx;
              f(out_flat, in_flat, k_flat);
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

inline CTensor conv_forward(const ComplexConv2d& l, const CTensor& x) {
  const Shape out_shape = output_shape(Layer{l}, x.shape());
  CTensor y(out_shape);
  const std::size_t plane = out_shape[1] * out_shape[2];
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = l.bias[i / plane];
  detail::for_each_conv_tap(l, x.shape(), out_shape,
                            [&](std::size_t o, std::size_t i, std::size_t k) {
                              y[o] += l.kernel[k] * x[i];
                            });
  return y;
}

inline CTensor conv_transpose(const ComplexConv2d& l, const Shape& in_shape,
                              const CTensor& v) {
  CTensor r(in_shape);
  detail::for_each_conv_tap(l, in_shape, v.shape(),
                            [&](std::size_t o, std::size_t i, std::size_t k) {
                              r[i] += l.kernel[k] * v[o];
                            });
  return r;
}

// W^T v for linear and convolution layers; `in_shape` is the layer input shape.
inline CTensor apply_transpose(const Layer& layer, const Shape& in_shape,
                               const CTensor& v) {
  if (const auto* l = std::get_if<ComplexLinear>(&layer)) return linear_transpose(*l, v);
  if (const auto* c = std::get_if<ComplexConv2d>(&layer)) return conv_transpose(*c, in_shape, v);
  throw UnsupportedLayerError(std::string(layer_kind(layer)) + " is not linear");
}

// ---------------------------------------------------------------------------

inline CTensor layer_forward(const Layer& layer, const CTensor& x) {
  return std::visit(
      detail::Overloaded{
          [&](const ComplexLinear& l) { return linear_forward(l, x); },
          [&](const ComplexConv2d& l) { return conv_forward(l, x); },
          [&](const MagnitudeMaxPool& p) {
            const Shape out_shape = output_shape(Layer{p}, x.shape());
            const auto windows = pool_windows(p, x.shape());
            std::vector<CScalar> out;
            out.reserve(windows.size());
            std::vector<CScalar> buf;
            for (const auto& w : windows) {
              buf.clear();
              for (std::size_t i : w) buf.push_back(x[i]);
              out.push_back(cmaxpool_window(std::span<const CScalar>(buf)));
            }
            return CTensor(out_shape, std::move(out));
          },
          [&](const Flatten&) { return x.reshaped({x.size()}); },
          [&](const auto&) {
            return map(x, [&](const CScalar& z) { return apply_pointwise(layer, z); });
          },
      },
      layer);
}

}  // namespace cshap
