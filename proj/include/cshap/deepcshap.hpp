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

// Shapley contributions for complex-valued networks via a complex chain rule
// on multipliers.
//
// For a layer g with input y and reference r, every output/input pair gets
// the partial contributions phi_R (gain from the real part of y_k alone) and
// phi_I (the rest), the partial multipliers
//
//   mR = phi_R / Re(y_k - r_k),   mI = phi_I / Im(y_k - r_k),
//
// and the multiplier pair m = (mR - i mI) / 2, mbar = (mR + i mI) / 2, so that
// phi_R + phi_I = m dy + mbar conj(dy). Chaining h = f o g:
//
//   m_yh^k    = sum_j  m_yg[j,k] m_xf^j + conj(mbar_yg[j,k]) mbar_xf^j
//   mbar_yh^k = sum_j  mbar_yg[j,k] m_xf^j + conj(m_yg[j,k]) mbar_xf^j
//
// and at the input phi_k = (m + mbar) Re(dy_k) + (m - mbar) i Im(dy_k).
// Per-layer exactness makes sum_k phi_k = h(y) - h(r) exact, up to the
// stability substitution below.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cshap/error.hpp"
#include "cshap/layers.hpp"
#include "cshap/maxcshap.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

// Denominators |Re(dy)| or |Im(dy)| below this use the derivative instead.
inline constexpr double kStabilityThreshold = 1e-6;

struct PartialContrib {
  CTensor phi_r;
  CTensor phi_i;

  CTensor total() const { return phi_r + phi_i; }
};

struct MultiplierState {
  CTensor m_x;
  CTensor m_xbar;
  // Number of entries that used the derivative fallback (diagnostic).
  std::size_t fallbacks = 0;
};

struct ContributionMap {
  CTensor phi;
  CScalar phi0;
};

// d g / d Re(y) and d g / d Im(y), laid out like the partial contributions.
struct AxisDerivatives {
  CTensor d_re;
  CTensor d_im;
};

// Partials of the rows of W y + b: phi_R[o, j] = W[o, j] Re(dy_j),
// phi_I[o, j] = i W[o, j] Im(dy_j). The bias only enters phi0.
inline PartialContrib layer_partials_linear(const ComplexLinear& layer, const CTensor& y,
                                            const CTensor& ref) {
  output_shape(Layer{layer}, y.shape());
  if (ref.shape() != y.shape()) throw ShapeError("reference shape differs from input");
  const std::size_t out = layer.out_features();
  const std::size_t in = layer.in_features();
  PartialContrib pc{CTensor(Shape{out, in}), CTensor(Shape{out, in})};
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t j = 0; j < in; ++j) {
      const CScalar d = y[j] - ref[j];
      const CScalar w = layer.weight[o * in + j];
      pc.phi_r[o * in + j] = w * d.real();
      pc.phi_i[o * in + j] = kI * w * d.imag();
    }
  }
  return pc;
}

// Wirtinger-style fallback derivatives of a linear layer: W and iW.
inline AxisDerivatives linear_axis_derivatives(const ComplexLinear& layer) {
  return {layer.weight, kI * layer.weight};
}

// Single-feature partials of an elementwise layer g:
//   phi_R = g(Re y + i Im r) - g(r),  phi_I = g(y) - g(Re y + i Im r).
inline PartialContrib layer_partials_pointwise(const Layer& layer, const CTensor& y,
                                               const CTensor& ref) {
  if (!is_pointwise(layer)) {
    throw UnsupportedLayerError(std::string(layer_kind(layer)) + " is not pointwise");
  }
  if (ref.shape() != y.shape()) throw ShapeError("reference shape differs from input");
  PartialContrib pc{CTensor(y.shape()), CTensor(y.shape())};
  for (std::size_t k = 0; k < y.size(); ++k) {
    const CScalar mid{y[k].real(), ref[k].imag()};
    const CScalar g_mid = apply_pointwise(layer, mid);
    pc.phi_r[k] = g_mid - apply_pointwise(layer, ref[k]);
    pc.phi_i[k] = apply_pointwise(layer, y[k]) - g_mid;
  }
  return pc;
}

inline AxisDerivatives pointwise_axis_derivatives(const Layer& layer, const CTensor& y) {
  AxisDerivatives d{CTensor(y.shape()), CTensor(y.shape())};
  for (std::size_t k = 0; k < y.size(); ++k) {
    const auto [da, db] = pointwise_axis_derivatives(layer, y[k]);
    d.d_re[k] = da;
    d.d_im[k] = db;
  }
  return d;
}

// Multipliers from partial contributions. The partials may carry leading
// dimensions (one row per layer output); the input difference y - ref is
// broadcast over them. Degenerate denominators take the matching entry of
// `fallback`, which is then required.
inline MultiplierState partial_multipliers(const PartialContrib& pc, const CTensor& y,
                                           const CTensor& ref,
                                           const AxisDerivatives* fallback = nullptr) {
  if (ref.shape() != y.shape()) throw ShapeError("reference shape differs from input");
  if (pc.phi_r.shape() != pc.phi_i.shape()) throw ShapeError("partial shapes differ");
  const std::size_t n = y.size();
  const std::size_t total = pc.phi_r.size();
  if (total % n != 0) throw ShapeError("partials do not broadcast over the input");
  if (fallback && (fallback->d_re.shape() != pc.phi_r.shape() ||
                   fallback->d_im.shape() != pc.phi_r.shape())) {
    throw ShapeError("fallback derivatives must match the partials");
  }
  MultiplierState m{CTensor(pc.phi_r.shape()), CTensor(pc.phi_r.shape()), 0};
  for (std::size_t e = 0; e < total; ++e) {
    const CScalar d = y[e % n] - ref[e % n];
    CScalar m_re;
    CScalar m_im;
    if (std::abs(d.real()) < kStabilityThreshold) {
      if (!fallback) throw ValidationError("degenerate real difference needs fallback derivatives");
      m_re = fallback->d_re[e];
      ++m.fallbacks;
    } else {
      m_re = pc.phi_r[e] / d.real();
    }
    if (std::abs(d.imag()) < kStabilityThreshold) {
      if (!fallback) throw ValidationError("degenerate imaginary difference needs fallback derivatives");
      m_im = fallback->d_im[e];
      ++m.fallbacks;
    } else {
      m_im = pc.phi_i[e] / d.imag();
    }
    m.m_x[e] = 0.5 * (m_re - kI * m_im);
    m.m_xbar[e] = 0.5 * (m_re + kI * m_im);
  }
  return m;
}

// Dense chain step. `upstream` holds the multipliers of f with respect to
// the J outputs of g; `layer` holds those of g as [J, K] matrices.
inline MultiplierState chain_step(const MultiplierState& upstream,
                                  const MultiplierState& layer) {
  if (layer.m_x.rank() != 2 || layer.m_xbar.shape() != layer.m_x.shape()) {
    throw ShapeError("layer multipliers must be [outputs, inputs] matrices");
  }
  const std::size_t outs = layer.m_x.shape()[0];
  const std::size_t ins = layer.m_x.shape()[1];
  if (upstream.m_x.size() != outs || upstream.m_xbar.size() != outs) {
    throw ShapeError("upstream multipliers have " + std::to_string(upstream.m_x.size()) +
                     " entries, layer has " + std::to_string(outs) + " outputs");
  }
  MultiplierState h{CTensor(Shape{ins}), CTensor(Shape{ins}), upstream.fallbacks + layer.fallbacks};
  for (std::size_t j = 0; j < outs; ++j) {
    const CScalar mf = upstream.m_x[j];
    const CScalar mbf = upstream.m_xbar[j];
    for (std::size_t k = 0; k < ins; ++k) {
      const CScalar mg = layer.m_x[j * ins + k];
      const CScalar mbg = layer.m_xbar[j * ins + k];
      h.m_x[k] += mg * mf + std::conj(mbg) * mbf;
      h.m_xbar[k] += mbg * mf + std::conj(mg) * mbf;
    }
  }
  return h;
}

struct Reconstruction {
  PartialContrib partials;
  CTensor phi;
};

inline Reconstruction reconstruct_contributions(const MultiplierState& m, const CTensor& y,
                                                const CTensor& ref) {
  if (ref.shape() != y.shape()) throw ShapeError("reference shape differs from input");
  if (m.m_x.size() != y.size() || m.m_xbar.size() != y.size()) {
    throw ShapeError("multipliers do not match the input");
  }
  Reconstruction r{{CTensor(y.shape()), CTensor(y.shape())}, CTensor(y.shape())};
  for (std::size_t k = 0; k < y.size(); ++k) {
    const CScalar d = y[k] - ref[k];
    r.partials.phi_r[k] = (m.m_x[k] + m.m_xbar[k]) * d.real();
    r.partials.phi_i[k] = (m.m_x[k] - m.m_xbar[k]) * kI * d.imag();
    r.phi[k] = r.partials.phi_r[k] + r.partials.phi_i[k];
  }
  return r;
}

struct DeepCShapOptions {
  OutputPart part = OutputPart::kReal;
  std::size_t window_cap = kDefaultEnumerationCap;
};

// Per-layer record of one explanation: states[k] are the multipliers of the
// explained output with respect to activation k (states.back() is the seed).
struct DeepCShapDetails {
  std::vector<MultiplierState> states;
  std::size_t fallbacks = 0;
};

namespace detail {

// Multipliers of a single layer, stored in the form its chain step needs.
struct LocalMultipliers {
  enum class Kind { kLinear, kDiagonal, kWindows, kReshape } kind;
  CTensor m_y;     // diagonal: shape of the input; windows: one entry per
  CTensor m_ybar;  // (window, element) pair in window order
  std::vector<std::vector<std::size_t>> windows;
  std::size_t fallbacks = 0;
};

inline LocalMultipliers local_multipliers(const Layer& layer, const CTensor& y,
                                          const CTensor& ref, std::size_t window_cap) {
  using Kind = LocalMultipliers::Kind;
  if (has_parameters(layer)) return {Kind::kLinear, {}, {}, {}, 0};
  if (std::holds_alternative<Flatten>(layer)) return {Kind::kReshape, {}, {}, {}, 0};
  if (is_pointwise(layer)) {
    const PartialContrib pc = layer_partials_pointwise(layer, y, ref);
    const AxisDerivatives d = pointwise_axis_derivatives(layer, y);
    MultiplierState m = partial_multipliers(pc, y, ref, &d);
    return {Kind::kDiagonal, std::move(m.m_x), std::move(m.m_xbar), {}, m.fallbacks};
  }
  if (const auto* pool = std::get_if<MagnitudeMaxPool>(&layer)) {
    auto windows = pool_windows(*pool, y.shape());
    const std::size_t wsize = pool->window_h * pool->window_w;
    if (wsize > window_cap) {
      throw UnsupportedLayerError("MagnitudeMaxPool window of " + std::to_string(wsize) +
                                  " elements exceeds the enumeration cap of " +
                                  std::to_string(window_cap));
    }
    LocalMultipliers out{Kind::kWindows, CTensor(Shape{windows.size() * wsize}),
                         CTensor(Shape{windows.size() * wsize}), {}, 0};
    std::vector<CScalar> xs(wsize), rs(wsize);
    for (std::size_t w = 0; w < windows.size(); ++w) {
      for (std::size_t e = 0; e < wsize; ++e) {
        xs[e] = y[windows[w][e]];
        rs[e] = ref[windows[w][e]];
      }
      const WindowPartials wp = maxpool_partials(xs, rs, window_cap);
      const std::size_t arg = cmaxpool_argmax(xs).position;
      AxisDerivatives d{CTensor(Shape{wsize}), CTensor(Shape{wsize})};
      d.d_re[arg] = 1.0;
      d.d_im[arg] = kI;
      const MultiplierState m =
          partial_multipliers({CTensor(Shape{wsize}, wp.phi_r), CTensor(Shape{wsize}, wp.phi_i)},
                              CTensor(Shape{wsize}, xs), CTensor(Shape{wsize}, rs), &d);
      for (std::size_t e = 0; e < wsize; ++e) {
        out.m_y[w * wsize + e] = m.m_x[e];
        out.m_ybar[w * wsize + e] = m.m_xbar[e];
      }
      out.fallbacks += m.fallbacks;
    }
    out.windows = std::move(windows);
    return out;
  }
  throw UnsupportedLayerError("DeepCSHAP has no rule for layer " +
                              std::string(layer_kind(layer)));
}

inline MultiplierState chain_local(const Layer& layer, const LocalMultipliers& local,
                                   const Shape& in_shape, const MultiplierState& up) {
  using Kind = LocalMultipliers::Kind;
  MultiplierState h;
  h.fallbacks = up.fallbacks + local.fallbacks;
  switch (local.kind) {
    case Kind::kLinear:
      // m_yg = W, mbar_yg = 0.
      h.m_x = apply_transpose(layer, in_shape, up.m_x);
      h.m_xbar = conj(apply_transpose(layer, in_shape, conj(up.m_xbar)));
      break;
    case Kind::kReshape:
      h.m_x = up.m_x.reshaped(in_shape);
      h.m_xbar = up.m_xbar.reshaped(in_shape);
      break;
    case Kind::kDiagonal:
      h.m_x = CTensor(in_shape);
      h.m_xbar = CTensor(in_shape);
      for (std::size_t k = 0; k < h.m_x.size(); ++k) {
        const CScalar mg = local.m_y[k];
        const CScalar mbg = local.m_ybar[k];
        h.m_x[k] = mg * up.m_x[k] + std::conj(mbg) * up.m_xbar[k];
        h.m_xbar[k] = mbg * up.m_x[k] + std::conj(mg) * up.m_xbar[k];
      }
      break;
    case Kind::kWindows: {
      h.m_x = CTensor(in_shape);
      h.m_xbar = CTensor(in_shape);
      const std::size_t wsize = local.windows.empty() ? 0 : local.windows.front().size();
      for (std::size_t w = 0; w < local.windows.size(); ++w) {
        const CScalar mf = up.m_x[w];
        const CScalar mbf = up.m_xbar[w];
        for (std::size_t e = 0; e < wsize; ++e) {
          const std::size_t k = local.windows[w][e];
          const CScalar mg = local.m_y[w * wsize + e];
          const CScalar mbg = local.m_ybar[w * wsize + e];
          h.m_x[k] += mg * mf + std::conj(mbg) * mbf;
          h.m_xbar[k] += mbg * mf + std::conj(mg) * mbf;
        }
      }
      break;
    }
  }
  return h;
}

// Multipliers of the explained quantity with respect to the final activation.
inline MultiplierState output_seed_multipliers(const Shape& out_shape, std::size_t index,
                                               OutputPart part) {
  MultiplierState seed{CTensor(out_shape), CTensor(out_shape), 0};
  switch (part) {
    case OutputPart::kReal:  // Re(z) = (z + conj z) / 2
      seed.m_x[index] = 0.5;
      seed.m_xbar[index] = 0.5;
      break;
    case OutputPart::kImag:  // Im(z) = (z - conj z) / 2i
      seed.m_x[index] = {0.0, -0.5};
      seed.m_xbar[index] = {0.0, 0.5};
      break;
    case OutputPart::kComplex:
      seed.m_x[index] = 1.0;
      break;
  }
  return seed;
}

}  // namespace detail

// Explains several outputs of one (input, reference) pair, sharing the
// per-layer multipliers between them.
inline std::vector<ContributionMap> explain_deepcshap_single(
    const Model& model, const CTensor& x, const CTensor& ref,
    std::span<const std::size_t> output_indices, const DeepCShapOptions& options = {},
    std::vector<DeepCShapDetails>* details = nullptr) {
  for (std::size_t idx : output_indices) check_output_selector(model, idx, options.part);
  if (ref.shape() != x.shape()) {
    throw ShapeError("reference shape " + shape_to_string(ref.shape()) +
                     " does not match input " + shape_to_string(x.shape()));
  }
  const ForwardTrace tx = forward(model, x);
  const ForwardTrace tr = forward(model, ref);
  const std::size_t n = model.layers.size();
  std::vector<detail::LocalMultipliers> local;
  local.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    local.push_back(detail::local_multipliers(model.layers[k], tx.activations[k],
                                              tr.activations[k], options.window_cap));
  }
  std::vector<ContributionMap> maps;
  maps.reserve(output_indices.size());
  if (details) details->clear();
  for (std::size_t idx : output_indices) {
    MultiplierState state =
        detail::output_seed_multipliers(tx.output().shape(), idx, options.part);
    DeepCShapDetails record;
    if (details) record.states.assign(n + 1, {});
    for (std::size_t k = n; k-- > 0;) {
      if (details) record.states[k + 1] = state;
      state = detail::chain_local(model.layers[k], local[k], tx.activations[k].shape(), state);
    }
    Reconstruction rec = reconstruct_contributions(state, x, ref);
    record.fallbacks = state.fallbacks;
    if (details) {
      record.states[0] = std::move(state);
      details->push_back(std::move(record));
    }
    maps.push_back({std::move(rec.phi), select_output(model, tr, idx, options.part)});
  }
  return maps;
}

// Contributions averaged over the references; phi0 is the mean explained
// output at the references.
inline ContributionMap explain_deepcshap(const Model& model, const CTensor& x,
                                         std::span<const CTensor> references,
                                         std::size_t output_index,
                                         const DeepCShapOptions& options = {}) {
  if (references.empty()) throw ValidationError("DeepCSHAP needs at least one reference");
  ContributionMap mean{CTensor(x.shape()), CScalar{}};
  const std::size_t idx[] = {output_index};
  for (const CTensor& ref : references) {
    const ContributionMap m = explain_deepcshap_single(model, x, ref, idx, options).front();
    for (std::size_t i = 0; i < mean.phi.size(); ++i) mean.phi[i] += m.phi[i];
    mean.phi0 += m.phi0;
  }
  const double inv = 1.0 / static_cast<double>(references.size());
  for (CScalar& v : mean.phi.data()) v *= inv;
  mean.phi0 *= inv;
  return mean;
}

inline ContributionMap explain_deepcshap(const Model& model, const CTensor& x,
                                         const CTensor& reference, std::size_t output_index,
                                         const DeepCShapOptions& options = {}) {
  return explain_deepcshap(model, x, std::span<const CTensor>(&reference, 1), output_index,
                           options);
}

}  // namespace cshap
