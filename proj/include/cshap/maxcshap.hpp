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

// Exact Shapley values of a magnitude max-pooling window.
//
// A window of n features has 2n candidate values: X_i when feature i is
// present and Y_i (the reference) when it is absent. Sorting the candidates
// by magnitude (ties: lower index, then present before absent) reproduces the
// forward tie rule, and the pooled value is the first active candidate. The
// pooled value therefore decomposes as
//
//   f(S) = sum_c v_c [c active and every earlier candidate inactive],
//
// and each indicator is a game that requires some features present (R) and
// others absent (F). Such a game has Shapley value
//   (|R|-1)! |F|! / m!   for features in R,
//   -|R|! (|F|-1)! / m!  for features in F,   m = |R| + |F|,
// which are exactly the subset weights w(j, m) = j! (m-j-1)! / m!. Once both
// candidates of some feature precede c, the game is identically zero, so at
// most n + 1 candidates contribute: O(n^2) after an O(n log n) sort.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cshap/error.hpp"
#include "cshap/layers.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

inline constexpr std::size_t kMaxPoolWindowLimit = 16;
inline constexpr std::size_t kDefaultEnumerationCap = 9;

// Subset weights for every sub-game size m <= n, stored as a flat
// triangular vector: entry offset(m) + j is j! (m-j-1)! / m!.
struct MaxPoolShapConfig {
  std::size_t n = 0;
  std::vector<double> M;

  static std::size_t offset(std::size_t m) { return (m - 1) * m / 2; }
  double weight(std::size_t j, std::size_t m) const { return M[offset(m) + j]; }
};

inline MaxPoolShapConfig precompute_M(std::size_t n) {
  if (n < 1 || n > kMaxPoolWindowLimit) {
    throw ValidationError("max-pool window size " + std::to_string(n) +
                          " outside [1, " + std::to_string(kMaxPoolWindowLimit) + "]");
  }
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  MaxPoolShapConfig config{n, {}};
  config.M.reserve(n * (n + 1) / 2);
  for (std::size_t m = 1; m <= n; ++m) {
    for (std::size_t j = 0; j < m; ++j) {
      config.M.push_back(fact[j] * fact[m - j - 1] / fact[m]);
    }
  }
  return config;
}

namespace detail {

struct PoolCandidate {
  CScalar value;
  double magnitude;
  std::size_t index;
  bool present;
};

inline void check_window_pair(std::span<const CScalar> x, std::span<const CScalar> y) {
  if (x.size() != y.size()) {
    throw ShapeError("max-pool window and reference sizes differ (" +
                     std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  if (x.empty()) throw ValidationError("empty max-pool window");
}

}  // namespace detail

// Shapley value of every window element for f = cmaxpool with reference Y.
inline std::vector<CScalar> maxpool_total(const MaxPoolShapConfig& config,
                                          std::span<const CScalar> x,
                                          std::span<const CScalar> y) {
  detail::check_window_pair(x, y);
  const std::size_t n = x.size();
  if (n != config.n) throw ValidationError("max-pool config was built for a different window size");

  std::vector<detail::PoolCandidate> cands;
  cands.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    cands.push_back({x[i], std::abs(x[i]), i, true});
    cands.push_back({y[i], std::abs(y[i]), i, false});
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const detail::PoolCandidate& a, const detail::PoolCandidate& b) {
                     if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
                     if (a.index != b.index) return a.index < b.index;
                     return a.present && !b.present;
                   });

  // +1: must be present, -1: must be absent, 0: unconstrained.
  std::vector<int> constraint(n, 0);
  std::vector<std::size_t> members;
  std::size_t required = 0;
  std::size_t forbidden = 0;
  std::vector<CScalar> phi(n);

  for (const auto& c : cands) {
    const int own = c.present ? +1 : -1;
    const bool fresh = constraint[c.index] == 0;
    const std::size_t r = required + (fresh && own > 0 ? 1 : 0);
    const std::size_t q = forbidden + (fresh && own < 0 ? 1 : 0);
    const std::size_t m = r + q;
    const CScalar gain_r = r > 0 ? c.value * config.weight(r - 1, m) : CScalar{};
    const CScalar loss_f = q > 0 ? c.value * config.weight(r, m) : CScalar{};
    for (std::size_t j : members) {
      phi[j] += constraint[j] > 0 ? gain_r : -loss_f;
    }
    if (fresh) phi[c.index] += own > 0 ? gain_r : -loss_f;

    // Later candidates see c inactive: absent if it was X_i, present if Y_i.
    if (!fresh) break;
    constraint[c.index] = c.present ? -1 : +1;
    members.push_back(c.index);
    (c.present ? forbidden : required) += 1;
  }
  return phi;
}

inline std::vector<CScalar> maxpool_total(std::span<const CScalar> x,
                                          std::span<const CScalar> y) {
  detail::check_window_pair(x, y);
  return maxpool_total(precompute_M(x.size()), x, y);
}

struct WindowPartials {
  std::vector<CScalar> phi_r;
  std::vector<CScalar> phi_i;
};

// Real/imaginary partial contributions by enumerating the 2^(n-1) subsets of
// the other window elements. A real-only element takes Re(X_j) + i Im(Y_j).
inline WindowPartials maxpool_partials(std::span<const CScalar> x,
                                       std::span<const CScalar> y,
                                       std::size_t cap = kDefaultEnumerationCap) {
  detail::check_window_pair(x, y);
  const std::size_t n = x.size();
  if (n > cap) {
    throw UnsupportedLayerError("max-pool window of " + std::to_string(n) +
                                " elements exceeds the enumeration cap of " +
                                std::to_string(cap));
  }
  const MaxPoolShapConfig config = precompute_M(n);
  WindowPartials out{std::vector<CScalar>(n), std::vector<CScalar>(n)};
  std::vector<CScalar> z(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint32_t others = (1u << n) - 1u - (1u << j);
    // Iterate over all subsets of `others` (including the empty set).
    std::uint32_t s = others;
    while (true) {
      for (std::size_t k = 0; k < n; ++k) z[k] = (s & (1u << k)) ? x[k] : y[k];
      const double w =
          config.weight(static_cast<std::size_t>(std::popcount(s)), n);
      z[j] = y[j];
      const CScalar without = cmaxpool_window(std::span<const CScalar>(z));
      z[j] = {x[j].real(), y[j].imag()};
      const CScalar real_only = cmaxpool_window(std::span<const CScalar>(z));
      z[j] = x[j];
      const CScalar with = cmaxpool_window(std::span<const CScalar>(z));
      out.phi_r[j] += w * (real_only - without);
      out.phi_i[j] += w * (with - real_only);
      if (s == 0) break;
      s = (s - 1) & others;
    }
  }
  return out;
}

}  // namespace cshap
