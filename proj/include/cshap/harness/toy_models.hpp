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

// Seeded random tensors and small model builders.

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cshap/layers.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap::harness {

using Rng = std::mt19937_64;

inline CScalar random_cscalar(Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline CTensor random_ctensor(Rng& rng, Shape shape, double scale = 1.0) {
  CTensor t(std::move(shape));
  for (CScalar& v : t.data()) v = random_cscalar(rng, scale);
  return t;
}

// Per-component std 1/sqrt(fan_in), so |w| has variance 2/fan_in.
inline ComplexLinear random_linear(Rng& rng, std::size_t in, std::size_t out,
                                   double bias_scale = 0.1) {
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  return {random_ctensor(rng, {out, in}, s), random_ctensor(rng, {out}, bias_scale)};
}

inline ComplexConv2d random_conv(Rng& rng, std::size_t in_c, std::size_t out_c,
                                 std::size_t k, std::size_t stride = 1,
                                 std::size_t padding = 0, double bias_scale = 0.1) {
  const double s = 1.0 / std::sqrt(static_cast<double>(in_c * k * k));
  return {random_ctensor(rng, {out_c, in_c, k, k}, s), random_ctensor(rng, {out_c}, bias_scale),
          stride, padding};
}

inline Model linear_model(Rng& rng, std::size_t in, std::size_t out,
                          Readout readout = Readout::kReal) {
  Model m;
  m.name = "linear";
  m.input_shape = {in};
  m.readout = readout;
  m.layers = {random_linear(rng, in, out)};
  return m;
}

inline Model mlp_crelu_model(Rng& rng, std::size_t in, std::size_t hidden, std::size_t out) {
  Model m;
  m.name = "mlp_crelu";
  m.input_shape = {in};
  m.layers = {random_linear(rng, in, hidden), CReLU{}, random_linear(rng, hidden, out)};
  return m;
}

// conv(3x3, padding 1) -> CReLU -> 2x2 magnitude max-pool -> flatten -> linear.
inline Model conv_crelu_maxpool_model(Rng& rng, Shape in_shape, std::size_t channels,
                                      std::size_t out) {
  Model m;
  m.name = "conv_crelu_maxpool";
  m.input_shape = in_shape;
  m.layers = {random_conv(rng, in_shape[0], channels, 3, 1, 1), CReLU{},
              MagnitudeMaxPool{2, 2, 2}, Flatten{}};
  const std::size_t flat = channels * (in_shape[1] / 2) * (in_shape[2] / 2);
  m.layers.push_back(random_linear(rng, flat, out));
  return m;
}

// `depth` linear layers with a random activation between consecutive ones.
// With `continuous` set, ZReLU (which jumps at the quadrant boundary) is
// left out of the draw.
inline Model random_deep_model(Rng& rng, std::size_t in, std::size_t depth,
                               std::size_t width, std::size_t out, bool continuous = false) {
  Model m;
  m.name = "deep";
  m.input_shape = {in};
  std::uniform_int_distribution<int> pick(0, 2);
  std::size_t cur = in;
  for (std::size_t d = 0; d < depth; ++d) {
    const std::size_t next = d + 1 == depth ? out : width;
    m.layers.push_back(random_linear(rng, cur, next, 0.3));
    cur = next;
    if (d + 1 < depth) {
      switch (pick(rng)) {
        case 0: m.layers.push_back(CReLU{}); break;
        case 1: m.layers.push_back(continuous ? Layer{CReLU{}} : Layer{ZReLU{}}); break;
        default: m.layers.push_back(Magnitude{}); break;
      }
    }
  }
  return m;
}

}  // namespace cshap::harness
