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

// Randomized cross-checks of the explainers against the brute-force oracles
// and against their defining identities. Shared by the `oracle-check`
// command and the acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cshap/backprop.hpp"
#include "cshap/deepcshap.hpp"
#include "cshap/gradient_explainers.hpp"
#include "cshap/harness/toy_models.hpp"
#include "cshap/layers.hpp"
#include "cshap/maxcshap.hpp"
#include "cshap/model.hpp"
#include "cshap/oracle.hpp"
#include "cshap/tensor.hpp"

namespace cshap::harness {

struct CheckResult {
  std::string name;
  std::size_t cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t failures = 0;
  std::string note;

  bool passed() const { return failures == 0; }

  void record(double error, double tol) {
    ++cases;
    max_error = std::max(max_error, error);
    if (!(error <= tol)) ++failures;
  }
};

namespace detail {

inline std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Model complex_single_layer(Layer layer, Shape input_shape) {
  Model m;
  m.name = "single";
  m.input_shape = std::move(input_shape);
  m.readout = Readout::kComplex;
  m.layers = {std::move(layer)};
  return m;
}

// Largest deviation of the DeepCSHAP map of a complex output from the exact
// Shapley values of that output.
inline double deepcshap_vs_exact(const Model& m, const CTensor& x, const CTensor& ref,
                                 std::size_t idx) {
  const ContributionMap got = explain_deepcshap(m, x, ref, idx, {OutputPart::kComplex});
  const oracle::ShapResult want =
      oracle::exact_shap([&](const CTensor& z) { return predict(m, z)[idx]; }, x, ref);
  return std::max(max_abs_diff(got.phi, want.phi), std::abs(got.phi0 - want.phi0));
}

inline double relative_to(const CTensor& got, const CTensor& want) {
  const double scale = max_abs(want);
  const double diff = max_abs_diff(got, want);
  return scale > 0.0 ? diff / scale : diff;
}

// Window values drawn from a coarse grid of magnitudes so that ties occur.
inline CTensor tied_window(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<int> level(1, 3);
  std::uniform_real_distribution<double> phase(-3.14159, 3.14159);
  CTensor t(Shape{1, 1, n});
  for (CScalar& v : t.data()) v = std::polar(static_cast<double>(level(rng)), phase(rng));
  return t;
}

}  // namespace detail

inline CheckResult check_linear_oracle(Rng& rng, std::size_t cases, double tol = 1e-10) {
  CheckResult r{"oracle.linear", 0, 0.0, tol, 0, "single ComplexLinear, 1-8 inputs"};
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t in = detail::uniform_size(rng, 1, 8);
    const std::size_t out = detail::uniform_size(rng, 1, 4);
    const Model m = detail::complex_single_layer(random_linear(rng, in, out, 0.5), {in});
    const CTensor x = random_ctensor(rng, {in});
    const CTensor ref = random_ctensor(rng, {in}, 0.5);
    const std::size_t idx = detail::uniform_size(rng, 0, out - 1);
    r.record(detail::deepcshap_vs_exact(m, x, ref, idx), tol);
  }
  return r;
}

inline CheckResult check_pointwise_oracle(Rng& rng, std::size_t cases, double tol = 1e-10) {
  CheckResult r{"oracle.pointwise", 0, 0.0, tol, 0,
                "CReLU, ZReLU, Magnitude, SquaredMagnitude, RealPart; 1-6 inputs"};
  const Layer kinds[] = {CReLU{}, ZReLU{}, Magnitude{}, SquaredMagnitude{}, RealPart{}};
  for (std::size_t c = 0; c < cases; ++c) {
    const Layer& g = kinds[c % std::size(kinds)];
    const std::size_t n = detail::uniform_size(rng, 1, 6);
    const Model m = detail::complex_single_layer(g, {n});
    const CTensor x = random_ctensor(rng, {n});
    CTensor ref = random_ctensor(rng, {n});
    if (c % 7 == 3) ref[0] = {ref[0].real(), x[0].imag()};
    const std::size_t idx = detail::uniform_size(rng, 0, n - 1);
    double err = detail::deepcshap_vs_exact(m, x, ref, idx);
    const PartialContrib pc = layer_partials_pointwise(g, x, ref);
    const auto want = oracle::exact_partial_shap(
        [&](const CTensor& z) { return predict(m, z)[idx]; }, x, ref, idx);
    err = std::max({err, std::abs(pc.phi_r[idx] - want.phi_r), std::abs(pc.phi_i[idx] - want.phi_i)});
    r.record(err, tol);
  }
  return r;
}

inline CheckResult check_maxpool_oracle(Rng& rng, std::size_t cases, double tol = 1e-10) {
  CheckResult r{"oracle.maxpool", 0, 0.0, tol, 0, "one magnitude max-pool window, n = 2-9"};
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = detail::uniform_size(rng, 2, 9);
    const Model m = detail::complex_single_layer(MagnitudeMaxPool{1, n, n}, {1, 1, n});
    const bool ties = c % 5 == 0;
    const CTensor x = ties ? detail::tied_window(rng, n) : random_ctensor(rng, {1, 1, n});
    const CTensor ref = ties ? detail::tied_window(rng, n) : random_ctensor(rng, {1, 1, n});
    double err = detail::deepcshap_vs_exact(m, x, ref, 0);
    const WindowPartials p = maxpool_partials(x.data(), ref.data());
    for (std::size_t k = 0; k < n; ++k) {
      const auto want = oracle::exact_partial_shap(
          [&](const CTensor& z) { return predict(m, z)[0]; }, x, ref, k);
      err = std::max({err, std::abs(p.phi_r[k] - want.phi_r), std::abs(p.phi_i[k] - want.phi_i)});
    }
    r.record(err, tol);
  }
  return r;
}

// Sum of the contributions plus phi0 against the output, per output of
// random nets: 4 linear layers with activations in between, alternating with
// conv -> CReLU -> max-pool -> linear nets, whose pooled CReLU outputs
// exercise the derivative fallback. Explanations that needed the fallback
// are held to `fallback_tol`.
inline CheckResult check_deep_conservation(Rng& rng, std::size_t nets, double tol = 1e-7,
                                           double fallback_tol = 1e-5) {
  CheckResult r{"conservation.deep", 0, 0.0, tol, 0, ""};
  std::size_t with_fallback = 0;
  for (std::size_t c = 0; c < nets; ++c) {
    const Model m = c % 2 ? conv_crelu_maxpool_model(rng, {2, 4, 4}, 3, 3)
                          : random_deep_model(rng, 6, 4, 8, 3);
    const CTensor x = random_ctensor(rng, m.input_shape);
    CTensor ref = random_ctensor(rng, m.input_shape, 0.5);
    if (c % 4 == 1) ref[2] = {x[2].real(), ref[2].imag()};
    const std::size_t idx[] = {0, 1, 2};
    std::vector<DeepCShapDetails> details;
    const auto maps = explain_deepcshap_single(m, x, ref, idx, {}, &details);
    const CTensor fx = predict(m, x);
    double err = 0.0;
    bool fallback = false;
    for (std::size_t o = 0; o < 3; ++o) {
      err = std::max(err, std::abs(sum(maps[o].phi) + maps[o].phi0 - fx[o]));
      fallback = fallback || details[o].fallbacks > 0;
    }
    if (fallback) ++with_fallback;
    r.record(err, fallback ? fallback_tol : tol);
  }
  r.note = std::to_string(with_fallback) + " nets used the fallback (tolerance " +
           std::to_string(fallback_tol) + ")";
  return r;
}

inline CheckResult check_wirtinger_fd(Rng& rng, std::size_t nets, double tol = 1e-4) {
  CheckResult r{"wirtinger.finite_difference", 0, 0.0, tol, 0,
                "relative max error of d_z and d_zbar, central differences h = 1e-5"};
  for (std::size_t c = 0; c < nets; ++c) {
    const Model m = random_deep_model(rng, 5, 3, 6, 2);
    const CTensor x = random_ctensor(rng, {5});
    const std::size_t idx = c % 2;
    const WirtingerPair got = backward(m, forward(m, x), idx);
    const WirtingerPair fd = oracle::finite_diff_wirtinger(
        [&](const CTensor& z) { return CScalar{predict(m, z)[idx].real(), 0.0}; }, x);
    r.record(std::max(detail::relative_to(got.d_zbar, fd.d_zbar),
                      detail::relative_to(got.d_z, fd.d_z)),
             tol);
  }
  return r;
}

// For real outputs, d_zbar from backward() against conj(d_z), where d_z is
// built from the separately propagated holomorphic and anti-holomorphic
// derivatives of the complex output.
inline CheckResult check_wirtinger_conjugacy(Rng& rng, std::size_t nets, double tol = 1e-12) {
  CheckResult r{"wirtinger.real_output_conjugacy", 0, 0.0, tol, 0,
                "backward d_zbar vs conj of two-adjoint d_z"};
  for (std::size_t c = 0; c < nets; ++c) {
    const Model m = c % 2 ? random_deep_model(rng, 5, 3, 6, 2)
                          : conv_crelu_maxpool_model(rng, {2, 4, 4}, 2, 2);
    const CTensor x = random_ctensor(rng, m.input_shape);
    const ForwardTrace trace = forward(m, x);
    const WirtingerPair g = backward(m, trace, 0);
    const WirtingerPair u = complex_output_derivatives(m, trace, 0);
    const CTensor d_z = 0.5 * (u.d_z + conj(u.d_zbar));
    r.record(max_abs_diff(g.d_zbar, conj(d_z)), tol);
  }
  return r;
}

// m_xbar == conj(m_x) in every chain step of a real-output explanation.
inline CheckResult check_multiplier_conjugacy(Rng& rng, std::size_t cases, double tol = 1e-12) {
  CheckResult r{"multipliers.real_output_conjugacy", 0, 0.0, tol, 0, "every chain step"};
  for (std::size_t c = 0; c < cases; ++c) {
    const Model m = c % 2 ? random_deep_model(rng, 5, 4, 6, 2)
                          : conv_crelu_maxpool_model(rng, {2, 4, 4}, 2, 2);
    const CTensor x = random_ctensor(rng, m.input_shape);
    const CTensor ref = random_ctensor(rng, m.input_shape, 0.3);
    const std::size_t idx[] = {c % 2};
    std::vector<DeepCShapDetails> details;
    explain_deepcshap_single(m, x, ref, idx, {}, &details);
    double err = 0.0;
    for (const MultiplierState& s : details.front().states) {
      err = std::max(err, max_abs_diff(s.m_xbar, conj(s.m_x)));
    }
    r.record(err, tol);
  }
  return r;
}

// For all-linear models the input multipliers are the Wirtinger derivatives.
inline CheckResult check_linear_multipliers(Rng& rng, std::size_t cases, double tol = 1e-12) {
  CheckResult r{"multipliers.linear_equals_wirtinger", 0, 0.0, tol, 0, "1-3 stacked linear layers"};
  for (std::size_t c = 0; c < cases; ++c) {
    Model m;
    m.input_shape = {detail::uniform_size(rng, 1, 6)};
    std::size_t cur = m.input_shape[0];
    const std::size_t depth = detail::uniform_size(rng, 1, 3);
    for (std::size_t d = 0; d < depth; ++d) {
      const std::size_t next = detail::uniform_size(rng, 1, 5);
      m.layers.push_back(random_linear(rng, cur, next));
      cur = next;
    }
    const CTensor x = random_ctensor(rng, m.input_shape);
    const std::size_t idx[] = {detail::uniform_size(rng, 0, cur - 1)};
    std::vector<DeepCShapDetails> details;
    explain_deepcshap_single(m, x, random_ctensor(rng, m.input_shape), idx, {}, &details);
    const WirtingerPair g = backward(m, forward(m, x), idx[0]);
    const MultiplierState& s = details.front().states.front();
    r.record(std::max(max_abs_diff(s.m_x, g.d_z), max_abs_diff(s.m_xbar, g.d_zbar)), tol);
  }
  return r;
}

// |sum 2 Re(phi) - (f(x) - f(0))| / |f(x) - f(0)| for integrated gradients
// with a zero baseline on random nets that are continuous along the path.
inline CheckResult check_ig_completeness(Rng& rng, std::size_t nets, std::size_t steps,
                                         double tol = 1e-3) {
  CheckResult r{"integrated_gradients.completeness", 0, 0.0, tol, 0,
                std::to_string(steps) + " steps, right Riemann sum, zero baseline"};
  std::vector<double> errors;
  for (std::size_t c = 0; c < nets; ++c) {
    const Model m = random_deep_model(rng, 5, 3, 8, 1, true);
    const CTensor x = random_ctensor(rng, {5});
    const CTensor base(Shape{5});
    const CTensor phi = explain_integrated_gradients(m, x, base, 0, steps);
    double total = 0.0;
    for (const CScalar& v : phi.data()) total += 2.0 * v.real();
    const double diff = predict(m, x)[0].real() - predict(m, base)[0].real();
    const double err = std::abs(total - diff) / std::abs(diff);
    errors.push_back(err);
    r.record(err, tol);
  }
  std::sort(errors.begin(), errors.end());
  r.note += "; median error " + std::to_string(errors[errors.size() / 2]);
  return r;
}

// The suite run by `oracle-check`: every per-layer oracle comparison with
// `cases` cases, plus the deep-model and derivative identities.
inline std::vector<CheckResult> run_oracle_suite(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(check_linear_oracle(rng, cases));
  out.push_back(check_pointwise_oracle(rng, cases));
  out.push_back(check_maxpool_oracle(rng, cases));
  out.push_back(check_deep_conservation(rng, std::max<std::size_t>(1, cases / 10)));
  out.push_back(check_wirtinger_fd(rng, std::max<std::size_t>(1, cases / 20)));
  out.push_back(check_wirtinger_conjugacy(rng, std::max<std::size_t>(1, cases / 20)));
  out.push_back(check_multiplier_conjugacy(rng, std::max<std::size_t>(1, cases / 10)));
  out.push_back(check_linear_multipliers(rng, std::max<std::size_t>(1, cases / 10)));
  return out;
}

}  // namespace cshap::harness
