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

// Explanation-quality evaluations: SHAP axiom checks, the pixel masking
// experiment and the channel attribution score.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cshap/deepcshap.hpp"
#include "cshap/error.hpp"
#include "cshap/explain.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap::harness {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Local accuracy and missingness of DeepCSHAP.

struct AxiomReport {
  double local_accuracy_error = 0.0;  // mean |sum phi + phi0 - f(x)|
  double mean_abs_output = 0.0;       // mean |f(x)|
  double relative_error = 0.0;        // local_accuracy_error / mean_abs_output
  double missingness_error_fraction = 0.0;
  std::size_t missing_features = 0;
  std::size_t missing_nonzero = 0;  // missing features with nonzero phi
  std::size_t evaluations = 0;
};

// Every input is explained against all `references` (averaged), for every
// output; complex readouts count the real and imaginary part as two outputs.
// A feature is missing when it equals its value in every reference.
inline AxiomReport check_axioms(const Model& model, std::span<const CTensor> inputs,
                                std::span<const CTensor> references,
                                std::size_t window_cap = kDefaultEnumerationCap) {
  if (inputs.empty()) throw ValidationError("check_axioms needs at least one input");
  if (references.empty()) throw ValidationError("check_axioms needs at least one reference");
  const std::size_t arity = model.output_arity();
  std::vector<std::size_t> indices(arity);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::vector<OutputPart> parts{OutputPart::kReal};
  if (model.readout == Readout::kComplex) parts.push_back(OutputPart::kImag);

  double err_sum = 0.0;
  double out_sum = 0.0;
  std::size_t evals = 0;
  std::size_t missing = 0;
  std::size_t missing_nonzero = 0;
  for (const CTensor& x : inputs) {
    for (OutputPart part : parts) {
      const DeepCShapOptions options{part, window_cap};
      std::vector<CTensor> phi(arity, CTensor(x.shape()));
      std::vector<CScalar> phi0(arity);
      for (const CTensor& ref : references) {
        const auto maps = explain_deepcshap_single(model, x, ref, indices, options);
        for (std::size_t o = 0; o < arity; ++o) {
          for (std::size_t j = 0; j < x.size(); ++j) phi[o][j] += maps[o].phi[j];
          phi0[o] += maps[o].phi0;
        }
      }
      const double inv = 1.0 / static_cast<double>(references.size());
      const ForwardTrace trace = forward(model, x);
      for (std::size_t o = 0; o < arity; ++o) {
        const CScalar fx = select_output(model, trace, o, part);
        const CScalar total = sum(phi[o]) * inv + phi0[o] * inv;
        err_sum += std::abs(total - fx);
        out_sum += std::abs(fx);
        ++evals;
        for (std::size_t j = 0; j < x.size(); ++j) {
          const bool is_missing = std::all_of(references.begin(), references.end(),
                                              [&](const CTensor& r) { return r[j] == x[j]; });
          if (!is_missing) continue;
          ++missing;
          if (phi[o][j] != CScalar{}) ++missing_nonzero;
        }
      }
    }
  }
  AxiomReport report;
  report.evaluations = evals;
  report.local_accuracy_error = err_sum / static_cast<double>(evals);
  report.mean_abs_output = out_sum / static_cast<double>(evals);
  report.relative_error = report.mean_abs_output > 0.0
                              ? report.local_accuracy_error / report.mean_abs_output
                              : report.local_accuracy_error;
  report.missing_features = missing;
  report.missing_nonzero = missing_nonzero;
  report.missingness_error_fraction =
      missing ? static_cast<double>(missing_nonzero) / static_cast<double>(missing) : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Masking experiment: zero the highest-scoring features for (source - target)
// and measure the drop of the logit difference.

struct MaskingResult {
  std::vector<double> changes;  // per image: (ls - lt) before minus after
  double median = 0.0;
  double mean = 0.0;
};

struct Explainer {
  Method method = Method::kDeepCShap;
  Reduction reduction = Reduction::kRealPlusImag;
  ExplainConfig config;
};

inline double logit(const Model& model, const CTensor& x, std::size_t k) {
  return predict(model, x)[k].real();
}

// Real score map of the explanation of output `source` minus output `target`.
inline RTensor difference_scores(const Model& model, const CTensor& x, std::size_t source,
                                 std::size_t target, const Explainer& explainer,
                                 std::uint64_t image_seed) {
  ExplainConfig config = explainer.config;
  config.seed = explainer.config.seed * 1000003ULL + image_seed;
  if (explainer.method == Method::kRandom) {
    return reduce_saliency(explain_method(Method::kRandom, model, x, source, config),
                           Reduction::kRealPlusImag);
  }
  const CTensor a = explain_method(explainer.method, model, x, source, config);
  const CTensor b = explain_method(explainer.method, model, x, target, config);
  return reduce_saliency(a - b, explainer.reduction);
}

inline MaskingResult masking_experiment(const Model& model, std::span<const CTensor> images,
                                        std::size_t source, std::size_t target,
                                        const Explainer& explainer, double fraction = 0.2) {
  const std::size_t arity = model.output_arity();
  if (arity < 2) throw ValidationError("masking experiment needs a classifier with >= 2 outputs");
  if (source >= arity || target >= arity || source == target) {
    throw ValidationError("invalid source/target classes");
  }
  if (fraction < 0.0 || fraction > 0.2) {
    throw ValidationError("masking fraction must lie in [0, 0.2]");
  }
  MaskingResult result;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const CTensor& x = images[i];
    const RTensor scores = difference_scores(model, x, source, target, explainer, i);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(x.size())));
    CTensor masked = x;
    for (std::size_t r = 0; r < count; ++r) masked[order[r]] = CScalar{};
    const double before = logit(model, x, source) - logit(model, x, target);
    const double after = logit(model, masked, source) - logit(model, masked, target);
    result.changes.push_back(before - after);
  }
  result.median = median(result.changes);
  result.mean = mean(result.changes);
  return result;
}

// ---------------------------------------------------------------------------
// Channel attribution score: share of the explanation that falls on the
// channels known to carry the explained class.

struct ChannelSample {
  CTensor input;                              // [C, H, W]
  std::size_t output_index;                   // explained class
  std::vector<std::size_t> correct_channels;  // channels of that class' patch
};

struct ChannelScore {
  std::vector<double> scores;
  std::size_t skipped = 0;  // degenerate denominators
  double median = 0.0;
  double mean = 0.0;
};

inline constexpr double kChannelDenominatorEpsilon = 1e-12;

inline double channel_fraction(const RTensor& scores, const Shape& shape,
                               const std::vector<std::size_t>& correct, bool* degenerate) {
  const std::size_t plane = shape_numel(shape) / shape[0];
  double on = 0.0;
  double all = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t ch = i / plane;
    all += scores[i];
    if (std::find(correct.begin(), correct.end(), ch) != correct.end()) on += scores[i];
  }
  *degenerate = std::abs(all) < kChannelDenominatorEpsilon;
  return *degenerate ? 0.0 : on / all;
}

inline ChannelScore channel_attribution_score(const Model& model,
                                              std::span<const ChannelSample> samples,
                                              const Explainer& explainer) {
  ChannelScore result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ChannelSample& s = samples[i];
    if (s.input.rank() < 2) throw ValidationError("channel score needs [C, ...] inputs");
    ExplainConfig config = explainer.config;
    config.seed = explainer.config.seed * 1000003ULL + i;
    const RTensor scores = reduce_saliency(
        explain_method(explainer.method, model, s.input, s.output_index, config),
        explainer.reduction);
    bool degenerate = false;
    const double f = channel_fraction(scores, s.input.shape(), s.correct_channels, &degenerate);
    if (degenerate) {
      ++result.skipped;
      continue;
    }
    result.scores.push_back(f);
  }
  result.median = median(result.scores);
  result.mean = mean(result.scores);
  return result;
}

}  // namespace cshap::harness
