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

// Uniform entry point over all explanation methods.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cshap/deepcshap.hpp"
#include "cshap/error.hpp"
#include "cshap/gradient_explainers.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

enum class Method {
  kDeepCShap,
  kGradient,
  kGradTimesInput,
  kIntegratedGradients,
  kGuidedZ,
  kGuidedC,
  kRandom,  // uniform random saliency, used as an evaluation baseline
};

inline constexpr std::array<std::string_view, 6> kMethodNames = {
    "deepcshap", "grad", "gradxinput", "intgrad", "guided-z", "guided-c"};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kDeepCShap: return "deepcshap";
    case Method::kGradient: return "grad";
    case Method::kGradTimesInput: return "gradxinput";
    case Method::kIntegratedGradients: return "intgrad";
    case Method::kGuidedZ: return "guided-z";
    case Method::kGuidedC: return "guided-c";
    case Method::kRandom: return "random";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kDeepCShap, Method::kGradient, Method::kGradTimesInput,
                   Method::kIntegratedGradients, Method::kGuidedZ, Method::kGuidedC,
                   Method::kRandom}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

inline std::string_view reduction_name(Reduction r) {
  return r == Reduction::kAbs ? "abs" : "ri";
}

inline std::optional<Reduction> parse_reduction(std::string_view name) {
  if (name == "abs") return Reduction::kAbs;
  if (name == "ri") return Reduction::kRealPlusImag;
  return std::nullopt;
}

struct ExplainConfig {
  std::vector<CTensor> references;  // DeepCSHAP references, IG baseline; zeros if empty
  std::size_t steps = 5;
  OutputPart part = OutputPart::kReal;
  bool conjugate_input = false;
  std::size_t window_cap = kDefaultEnumerationCap;
  std::uint64_t seed = 0;  // kRandom only
};

inline CTensor explain_method(Method method, const Model& model, const CTensor& x,
                              std::size_t output_index, const ExplainConfig& config = {}) {
  if (method == Method::kDeepCShap) {
    DeepCShapOptions options{config.part, config.window_cap};
    if (config.references.empty()) {
      return explain_deepcshap(model, x, CTensor(x.shape()), output_index, options).phi;
    }
    return explain_deepcshap(model, x, config.references, output_index, options).phi;
  }
  if (method == Method::kRandom) {
    check_output_selector(model, output_index, config.part);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CTensor phi(x.shape());
    for (CScalar& v : phi.data()) v = u(rng);
    return phi;
  }
  GradConfig gc;
  gc.steps = config.steps;
  gc.part = config.part;
  gc.conjugate_input = config.conjugate_input;
  if (!config.references.empty()) gc.baseline = config.references.front();
  const GradMethod gm = [&] {
    switch (method) {
      case Method::kGradient: return GradMethod::kGradient;
      case Method::kGradTimesInput: return GradMethod::kGradTimesInput;
      case Method::kIntegratedGradients: return GradMethod::kIntegratedGradients;
      case Method::kGuidedZ: return GradMethod::kGuidedZ;
      default: return GradMethod::kGuidedC;
    }
  }();
  return explain_with(gm, model, x, output_index, gc);
}

}  // namespace cshap
