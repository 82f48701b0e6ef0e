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

// Reverse-mode propagation of Wirtinger cogradients.
//
// The explained quantity L is always real, so only G = dL/d(conj u) is
// propagated for each activation u; the other cogradient is conj(G). For a
// layer u = g(v):
//
//   G_v = conj(G_u) * du/d(conj v) + G_u * conj(du/dv)
//
// summed over the outputs u that depend on v.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cshap/error.hpp"
#include "cshap/layers.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

// Rectification applied to the backward signal at activation layers.
enum class Guidance { kNone, kZ, kC };

// pairs[k] holds the cogradients with respect to trace.activations[k]; the
// last entry is the seed at the model output.
struct BackwardState {
  std::vector<WirtingerPair> pairs;

  const WirtingerPair& at_input() const { return pairs.front(); }
};

namespace detail {

inline void check_trace(const Model& model, const ForwardTrace& trace) {
  if (trace.activations.size() != model.layers.size() + 1) {
    throw ValidationError("trace has " + std::to_string(trace.activations.size()) +
                          " activations, model needs " +
                          std::to_string(model.layers.size() + 1));
  }
  const auto shapes = model.activation_shapes();
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    if (trace.activations[k].shape() != shapes[k]) {
      throw ValidationError("trace activation " + std::to_string(k) +
                            " does not match the model");
    }
  }
}

inline CTensor guide(const CTensor& g, Guidance guidance) {
  switch (guidance) {
    case Guidance::kNone: return g;
    case Guidance::kZ: return map(g, zrelu);
    case Guidance::kC: return map(g, crelu);
  }
  return g;
}

}  // namespace detail

// One backward step: dL/d(conj v) from dL/d(conj u) for u = layer(v).
inline CTensor layer_backward(const Layer& layer, const CTensor& input,
                              const CTensor& grad_out) {
  if (has_parameters(layer)) {
    return conj(apply_transpose(layer, input.shape(), conj(grad_out)));
  }
  if (std::holds_alternative<Flatten>(layer)) return grad_out.reshaped(input.shape());
  if (const auto* pool = std::get_if<MagnitudeMaxPool>(&layer)) {
    CTensor g(input.shape());
    const auto windows = pool_windows(*pool, input.shape());
    std::vector<CScalar> buf;
    for (std::size_t o = 0; o < windows.size(); ++o) {
      buf.clear();
      for (std::size_t i : windows[o]) buf.push_back(input[i]);
      const std::size_t arg = cmaxpool_argmax(buf).position;
      g[windows[o][arg]] += grad_out[o];
    }
    return g;
  }
  return zip_map(input, grad_out, [&](const CScalar& v, const CScalar& gu) -> CScalar {
    if (std::holds_alternative<CReLU>(layer)) {
      return {v.real() > 0.0 ? gu.real() : 0.0, v.imag() > 0.0 ? gu.imag() : 0.0};
    }
    if (std::holds_alternative<ZReLU>(layer)) {
      return (v.real() > 0.0 && v.imag() > 0.0) ? gu : CScalar{};
    }
    if (std::holds_alternative<RealPart>(layer)) return {gu.real(), 0.0};
    if (std::holds_alternative<Magnitude>(layer)) {
      const double r = std::abs(v);
      return r == 0.0 ? CScalar{} : gu.real() * v / r;
    }
    if (std::holds_alternative<SquaredMagnitude>(layer)) return 2.0 * gu.real() * v;
    throw UnsupportedLayerError("no backward rule for " + std::string(layer_kind(layer)));
  });
}

// Backward pass seeded with dL/d(conj output) for an arbitrary real L.
inline BackwardState backward_all(const Model& model, const ForwardTrace& trace,
                                  const CTensor& output_cogradient,
                                  Guidance guidance = Guidance::kNone) {
  detail::check_trace(model, trace);
  if (output_cogradient.shape() != trace.output().shape()) {
    throw ShapeError("output cogradient shape " +
                     shape_to_string(output_cogradient.shape()) +
                     " does not match model output " +
                     shape_to_string(trace.output().shape()));
  }
  const std::size_t n = model.layers.size();
  std::vector<CTensor> g(n + 1);
  g[n] = output_cogradient;
  for (std::size_t k = n; k-- > 0;) {
    const Layer& layer = model.layers[k];
    g[k] = layer_backward(layer, trace.activations[k], g[k + 1]);
    if (std::holds_alternative<CReLU>(layer) || std::holds_alternative<ZReLU>(layer)) {
      g[k] = detail::guide(g[k], guidance);
    }
  }
  BackwardState state;
  state.pairs.reserve(n + 1);
  for (auto& t : g) state.pairs.push_back({conj(t), std::move(t)});
  return state;
}

// Seed dL/d(conj output) for L = Re(out_k) or Im(out_k).
inline CTensor output_seed(const Model& model, const ForwardTrace& trace,
                           std::size_t output_index, OutputPart part) {
  check_output_selector(model, output_index, part);
  if (part == OutputPart::kComplex) {
    throw ValidationError("gradients explain real quantities; choose the real or imaginary part");
  }
  CTensor seed(trace.output().shape());
  seed[output_index] = part == OutputPart::kReal ? CScalar{0.5, 0.0} : CScalar{0.0, 0.5};
  return seed;
}

// Cogradients of the selected output with respect to the network input.
inline WirtingerPair backward(const Model& model, const ForwardTrace& trace,
                              std::size_t output_index,
                              Guidance guidance = Guidance::kNone,
                              OutputPart part = OutputPart::kReal) {
  detail::check_trace(model, trace);
  return backward_all(model, trace, output_seed(model, trace, output_index, part), guidance)
      .pairs.front();
}

// dL/d(conj theta) for the parameters of one layer.
struct ParameterCogradient {
  CTensor weight;  // same shape as weight / kernel
  CTensor bias;
};

inline std::vector<std::optional<ParameterCogradient>> parameter_cogradients(
    const Model& model, const ForwardTrace& trace, const BackwardState& state) {
  std::vector<std::optional<ParameterCogradient>> out(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const CTensor& v = trace.activations[k];
    const CTensor& gu = state.pairs[k + 1].d_zbar;
    if (const auto* lin = std::get_if<ComplexLinear>(&model.layers[k])) {
      const std::size_t in = lin->in_features();
      ParameterCogradient p{CTensor(lin->weight.shape()), gu};
      for (std::size_t o = 0; o < lin->out_features(); ++o) {
        for (std::size_t i = 0; i < in; ++i) p.weight[o * in + i] = gu[o] * std::conj(v[i]);
      }
      out[k] = std::move(p);
    } else if (const auto* conv = std::get_if<ComplexConv2d>(&model.layers[k])) {
      ParameterCogradient p{CTensor(conv->kernel.shape()), CTensor(conv->bias.shape())};
      detail::for_each_conv_tap(*conv, v.shape(), gu.shape(),
                                [&](std::size_t o, std::size_t i, std::size_t kk) {
                                  p.weight[kk] += gu[o] * std::conj(v[i]);
                                });
      const std::size_t plane = gu.shape()[1] * gu.shape()[2];
      for (std::size_t o = 0; o < gu.size(); ++o) p.bias[o / plane] += gu[o];
      out[k] = std::move(p);
    }
  }
  return out;
}

// Both Wirtinger derivatives of the complex activation output[output_index],
// d u / dx and d u / d(conj x), propagated as two adjoints. Unlike backward(),
// which tracks a single cogradient of a real quantity, this keeps the
// holomorphic and anti-holomorphic parts apart.
inline WirtingerPair complex_output_derivatives(const Model& model, const ForwardTrace& trace,
                                                std::size_t output_index) {
  detail::check_trace(model, trace);
  if (output_index >= trace.output().size()) {
    throw ValidationError("output index " + std::to_string(output_index) + " out of range");
  }
  CTensor a(trace.output().shape());
  CTensor b(trace.output().shape());
  a[output_index] = 1.0;
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    const Layer& layer = model.layers[k];
    const CTensor& v = trace.activations[k];
    if (has_parameters(layer)) {
      a = apply_transpose(layer, v.shape(), a);
      b = conj(apply_transpose(layer, v.shape(), conj(b)));
    } else if (std::holds_alternative<Flatten>(layer)) {
      a = a.reshaped(v.shape());
      b = b.reshaped(v.shape());
    } else if (const auto* pool = std::get_if<MagnitudeMaxPool>(&layer)) {
      CTensor na(v.shape());
      CTensor nb(v.shape());
      std::vector<CScalar> buf;
      const auto windows = pool_windows(*pool, v.shape());
      for (std::size_t o = 0; o < windows.size(); ++o) {
        buf.clear();
        for (std::size_t i : windows[o]) buf.push_back(v[i]);
        const std::size_t arg = windows[o][cmaxpool_argmax(buf).position];
        na[arg] += a[o];
        nb[arg] += b[o];
      }
      a = std::move(na);
      b = std::move(nb);
    } else {
      CTensor na(v.shape());
      CTensor nb(v.shape());
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto [d_re, d_im] = pointwise_axis_derivatives(layer, v[i]);
        const CScalar dz = 0.5 * (d_re - kI * d_im);
        const CScalar dzbar = 0.5 * (d_re + kI * d_im);
        na[i] = a[i] * dz + b[i] * std::conj(dzbar);
        nb[i] = a[i] * dzbar + b[i] * std::conj(dz);
      }
      a = std::move(na);
      b = std::move(nb);
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace cshap
