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

// Brute-force references: exact Shapley values by subset enumeration, exact
// real/imaginary partial contributions, and finite-difference Wirtinger
// derivatives. These take arbitrary callables and share no code with the
// explainers they are used to check.

#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cshap/error.hpp"
#include "cshap/tensor.hpp"

namespace cshap::oracle {

using TensorFunction = std::function<CScalar(const CTensor&)>;

inline constexpr std::size_t kMaxFeatures = 12;

// Neumaier-compensated complex accumulator.
class CompensatedSum {
 public:
  void add(CScalar v) {
    add_part(re_, re_c_, v.real());
    add_part(im_, im_c_, v.imag());
  }
  CScalar value() const { return {re_ + re_c_, im_ + im_c_}; }

 private:
  static void add_part(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double re_ = 0.0, re_c_ = 0.0, im_ = 0.0, im_c_ = 0.0;
};

inline std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

// |S|! (M - |S| - 1)! / M!, from exact integer factorials.
inline double shapley_weight(std::size_t subset_size, std::size_t num_features) {
  return static_cast<double>(factorial(subset_size) *
                             factorial(num_features - subset_size - 1)) /
         static_cast<double>(factorial(num_features));
}

enum class Presence { kAbsent, kRealOnly, kFull };

// Input where present features come from x and absent ones from ref; a
// real-only feature takes Re(x_j) + i Im(ref_j).
inline CTensor compose(const CTensor& x, const CTensor& ref,
                       const std::vector<Presence>& mask) {
  CTensor z = ref;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    switch (mask[j]) {
      case Presence::kAbsent: break;
      case Presence::kRealOnly: z[j] = {x[j].real(), ref[j].imag()}; break;
      case Presence::kFull: z[j] = x[j]; break;
    }
  }
  return z;
}

namespace detail {

inline void check_inputs(const CTensor& x, const CTensor& ref) {
  if (x.shape() != ref.shape()) {
    throw ShapeError("oracle: input " + shape_to_string(x.shape()) +
                     " and reference " + shape_to_string(ref.shape()) + " differ");
  }
  if (x.size() > kMaxFeatures) {
    throw ValidationError("oracle: " + std::to_string(x.size()) +
                          " features exceed the enumeration limit of " +
                          std::to_string(kMaxFeatures));
  }
}

inline std::vector<Presence> mask_from_bits(std::uint32_t bits, std::size_t n) {
  std::vector<Presence> mask(n, Presence::kAbsent);
  for (std::size_t j = 0; j < n; ++j) {
    if (bits & (1u << j)) mask[j] = Presence::kFull;
  }
  return mask;
}

}  // namespace detail

struct ShapResult {
  CTensor phi;
  CScalar phi0;
};

// phi_j = sum over subsets S not containing j of w(|S|) (f(S + j) - f(S)),
// phi0 = f(ref).
inline ShapResult exact_shap(const TensorFunction& f, const CTensor& x,
                             const CTensor& ref) {
  detail::check_inputs(x, ref);
  const std::size_t n = x.size();
  const std::uint32_t subsets = 1u << n;
  std::vector<CScalar> value(subsets);
  for (std::uint32_t s = 0; s < subsets; ++s) {
    value[s] = f(compose(x, ref, detail::mask_from_bits(s, n)));
  }
  std::vector<double> weight(n);
  for (std::size_t k = 0; k < n; ++k) weight[k] = shapley_weight(k, n);

  CTensor phi(x.shape());
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint32_t bit = 1u << j;
    CompensatedSum acc;
    for (std::uint32_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      acc.add(weight[size] * (value[s | bit] - value[s]));
    }
    phi[j] = acc.value();
  }
  return {std::move(phi), value[0]};
}

struct PartialShap {
  CScalar phi_r;
  CScalar phi_i;
};

// The two summands of feature j's Shapley value: the gain from adding only
// its real part, and the remaining gain from then adding its imaginary part.
inline PartialShap exact_partial_shap(const TensorFunction& f, const CTensor& x,
                                      const CTensor& ref, std::size_t j) {
  detail::check_inputs(x, ref);
  const std::size_t n = x.size();
  if (j >= n) throw ValidationError("oracle: feature index out of range");
  CompensatedSum real_part;
  CompensatedSum imag_part;
  const std::uint32_t bit = 1u << j;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    if (s & bit) continue;
    auto mask = detail::mask_from_bits(s, n);
    const CScalar without = f(compose(x, ref, mask));
    mask[j] = Presence::kRealOnly;
    const CScalar real_only = f(compose(x, ref, mask));
    mask[j] = Presence::kFull;
    const CScalar with = f(compose(x, ref, mask));
    const double w = shapley_weight(static_cast<std::size_t>(std::popcount(s)), n);
    real_part.add(w * (real_only - without));
    imag_part.add(w * (with - real_only));
  }
  return {real_part.value(), imag_part.value()};
}

// Central differences along the real and imaginary axis of every element,
// combined into the Wirtinger pair.
inline WirtingerPair finite_diff_wirtinger(const TensorFunction& f, const CTensor& x,
                                           double h = 1e-5) {
  if (!(h > 0.0)) throw ValidationError("finite difference step must be positive");
  CTensor d_re(x.shape());
  CTensor d_im(x.shape());
  CTensor probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const CScalar orig = x[j];
    probe[j] = orig + h;
    const CScalar fp = f(probe);
    probe[j] = orig - h;
    const CScalar fm = f(probe);
    d_re[j] = (fp - fm) / (2.0 * h);
    probe[j] = orig + CScalar{0.0, h};
    const CScalar gp = f(probe);
    probe[j] = orig - CScalar{0.0, h};
    const CScalar gm = f(probe);
    d_im[j] = (gp - gm) / (2.0 * h);
    probe[j] = orig;
  }
  return wirtinger_from_real_parts(d_re, d_im);
}

}  // namespace cshap::oracle
