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

// Saliency methods built on the conjugate Wirtinger cogradient dL/d(conj x),
// which points in the direction of steepest ascent of a real output.

#pragma once

#include <cstddef>
#include <optional>

#include "cshap/backprop.hpp"
#include "cshap/error.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

enum class GradMethod {
  kGradient,
  kGradTimesInput,
  kIntegratedGradients,
  kGuidedZ,
  kGuidedC,
};

struct GradExplanation {
  GradMethod method;
  CTensor phi;
  Reduction reduction;

  RTensor reduced() const { return reduce_saliency(phi, reduction); }
};

inline CTensor explain_gradient(const Model& model, const CTensor& x,
                                std::size_t output_index,
                                OutputPart part = OutputPart::kReal) {
  return backward(model, forward(model, x), output_index, Guidance::kNone, part).d_zbar;
}

// phi_j = dL/d(conj x_j) * x_j. Set `conjugate_input` to multiply by conj(x_j)
// instead.
inline CTensor explain_grad_times_input(const Model& model, const CTensor& x,
                                        std::size_t output_index,
                                        OutputPart part = OutputPart::kReal,
                                        bool conjugate_input = false) {
  const CTensor g = explain_gradient(model, x, output_index, part);
  return hadamard(g, conjugate_input ? conj(x) : x);
}

// Right Riemann sum along the straight line from `baseline` to `x`:
//   phi_j = mean_k G_j(baseline + k/steps (x - baseline)) * conj(x_j - baseline_j)
// so that sum_j 2 Re(phi_j) approximates f(x) - f(baseline).
inline CTensor explain_integrated_gradients(const Model& model, const CTensor& x,
                                            const CTensor& baseline,
                                            std::size_t output_index,
                                            std::size_t steps = 5,
                                            OutputPart part = OutputPart::kReal) {
  if (steps == 0) throw ValidationError("integrated gradients needs at least one step");
  if (baseline.shape() != x.shape()) {
    throw ShapeError("baseline shape " + shape_to_string(baseline.shape()) +
                     " does not match input " + shape_to_string(x.shape()));
  }
  const CTensor delta = x - baseline;
  CTensor acc(x.shape());
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps);
    const CTensor point = baseline + CScalar{t, 0.0} * delta;
    const CTensor g = explain_gradient(model, point, output_index, part);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= inv * std::conj(delta[i]);
  return acc;
}

inline CTensor explain_integrated_gradients(const Model& model, const CTensor& x,
                                            std::size_t output_index,
                                            std::size_t steps = 5,
                                            OutputPart part = OutputPart::kReal) {
  return explain_integrated_gradients(model, x, CTensor(x.shape()), output_index, steps, part);
}

inline CTensor explain_guided(const Model& model, const CTensor& x,
                              std::size_t output_index, Guidance variant,
                              OutputPart part = OutputPart::kReal) {
  return backward(model, forward(model, x), output_index, variant, part).d_zbar;
}

struct GradConfig {
  std::size_t steps = 5;
  std::optional<CTensor> baseline;  // zeros when unset
  OutputPart part = OutputPart::kReal;
  bool conjugate_input = false;
};

inline CTensor explain_with(GradMethod method, const Model& model, const CTensor& x,
                            std::size_t output_index, const GradConfig& config = {}) {
  switch (method) {
    case GradMethod::kGradient:
      return explain_gradient(model, x, output_index, config.part);
    case GradMethod::kGradTimesInput:
      return explain_grad_times_input(model, x, output_index, config.part,
                                      config.conjugate_input);
    case GradMethod::kIntegratedGradients:
      return explain_integrated_gradients(model, x,
                                          config.baseline.value_or(CTensor(x.shape())),
                                          output_index, config.steps, config.part);
    case GradMethod::kGuidedZ:
      return explain_guided(model, x, output_index, Guidance::kZ, config.part);
    case GradMethod::kGuidedC:
      return explain_guided(model, x, output_index, Guidance::kC, config.part);
  }
  throw ValidationError("unknown gradient method");
}

}  // namespace cshap
