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

// Synthetic tasks and a small Wirtinger gradient-descent trainer.
//
// two_channel_synthetic: two patches of two complex 4x4 channels each are
//   stacked into a [4, 4, 4] input. A patch of class c has pixels
//   a * exp(i (2 pi c / K + pi/2 * channel + noise)) + noise, so the class
//   lives in the phase only. The label set is {class(X), class(Y)} with the
//   classes distinct; channels 0-1 belong to X and 2-3 to Y.
// mini_digits: real-valued 8x8 images of four stroke shapes (vertical bar,
//   horizontal bar, diagonal, box outline) with random shift, intensity and
//   pixel noise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cshap/backprop.hpp"
#include "cshap/error.hpp"
#include "cshap/harness/toy_models.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap::harness {

enum class ToyTask { kTwoChannelSynthetic, kMiniDigits };

inline std::string task_name(ToyTask t) {
  return t == ToyTask::kTwoChannelSynthetic ? "two_channel_synthetic" : "mini_digits";
}

struct Dataset {
  ToyTask task;
  std::size_t num_classes = 0;
  std::vector<CTensor> inputs;
  std::vector<std::vector<std::size_t>> labels;  // one (digits) or two (two-channel) classes
};

inline constexpr std::size_t kTwoChannelClasses = 4;
inline constexpr std::size_t kDigitClasses = 4;

inline void fill_patch(Rng& rng, CTensor& input, std::size_t first_channel, std::size_t cls) {
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::normal_distribution<double> phase_noise(0.0, 0.3);
  std::normal_distribution<double> noise(0.0, 0.1);
  const double base = 2.0 * std::numbers::pi * static_cast<double>(cls) /
                      static_cast<double>(kTwoChannelClasses);
  for (std::size_t ch = 0; ch < 2; ++ch) {
    for (std::size_t p = 0; p < 16; ++p) {
      const double phase = base + std::numbers::pi / 2.0 * static_cast<double>(ch) + phase_noise(rng);
      const double a = amp(rng);
      const double nr = noise(rng);
      const double ni = noise(rng);
      input[(first_channel + ch) * 16 + p] = std::polar(a, phase) + CScalar{nr, ni};
    }
  }
}

inline CTensor digit_image(Rng& rng, std::size_t cls) {
  std::uniform_int_distribution<int> shift(-1, 1);
  std::uniform_real_distribution<double> intensity(0.7, 1.3);
  std::normal_distribution<double> noise(0.0, 0.1);
  const int dx = shift(rng);
  const int dy = shift(rng);
  const double level = intensity(rng);
  CTensor img(Shape{1, 8, 8});
  auto lit = [](std::size_t c, int y, int x) {
    switch (c) {
      case 0: return x >= 3 && x <= 4 && y >= 1 && y <= 6;
      case 1: return y >= 3 && y <= 4 && x >= 1 && x <= 6;
      case 2: return x == y && x >= 1 && x <= 6;
      default:
        return (x >= 2 && x <= 5 && (y == 2 || y == 5)) ||
               (y >= 2 && y <= 5 && (x == 2 || x == 5));
    }
  };
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double v = (lit(cls, y - dy, x - dx) ? level : 0.0) + noise(rng);
      img[static_cast<std::size_t>(y * 8 + x)] = {std::max(0.0, v), 0.0};
    }
  }
  return img;
}

inline Dataset make_dataset(ToyTask task, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds{task, task == ToyTask::kTwoChannelSynthetic ? kTwoChannelClasses : kDigitClasses,
             {}, {}};
  ds.inputs.reserve(count);
  ds.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (task == ToyTask::kTwoChannelSynthetic) {
      std::uniform_int_distribution<std::size_t> cls(0, kTwoChannelClasses - 1);
      const std::size_t cx = cls(rng);
      std::size_t cy = cls(rng);
      while (cy == cx) cy = cls(rng);
      CTensor input(Shape{4, 4, 4});
      fill_patch(rng, input, 0, cx);
      fill_patch(rng, input, 2, cy);
      ds.inputs.push_back(std::move(input));
      ds.labels.push_back({cx, cy});
    } else {
      const std::size_t c = i % kDigitClasses;
      ds.inputs.push_back(digit_image(rng, c));
      ds.labels.push_back({c});
    }
  }
  return ds;
}

struct TrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t train_size = 512;
  std::size_t hidden = 16;
  std::uint64_t seed = 1;

  std::string describe() const {
    std::ostringstream out;
    out << "epochs=" << epochs << " lr=" << learning_rate << " momentum=" << momentum
        << " batch=" << batch_size << " train_size=" << train_size << " hidden=" << hidden
        << " seed=" << seed;
    return out.str();
  }
};

inline Model initial_model(ToyTask task, const TrainConfig& config) {
  Rng rng(config.seed);
  Model m;
  if (task == ToyTask::kTwoChannelSynthetic) {
    m.name = "two_channel_synthetic";
    m.input_shape = {4, 4, 4};
    m.layers = {Flatten{}, random_linear(rng, 64, config.hidden, 0.0), CReLU{},
                random_linear(rng, config.hidden, kTwoChannelClasses, 0.0)};
  } else {
    m.name = "mini_digits";
    m.input_shape = {1, 8, 8};
    m.layers = {random_conv(rng, 1, 4, 3, 1, 1, 0.0), CReLU{}, MagnitudeMaxPool{2, 2, 2},
                Flatten{}, random_linear(rng, 64, config.hidden, 0.0), CReLU{},
                random_linear(rng, config.hidden, kDigitClasses, 0.0)};
  }
  return m;
}

// Loss and dL/d(conj output) for one example. Logits are the real parts of
// the outputs. Digits: softmax cross-entropy. Two-channel: per-class
// sigmoid binary cross-entropy against the label set.
struct LossAndSeed {
  double loss;
  CTensor seed;
};

inline LossAndSeed loss_and_seed(ToyTask task, const CTensor& out,
                                 const std::vector<std::size_t>& labels) {
  const std::size_t k = out.size();
  CTensor seed(out.shape());
  double loss = 0.0;
  if (task == ToyTask::kMiniDigits) {
    double mx = out[0].real();
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, out[i].real());
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += std::exp(out[i].real() - mx);
    for (std::size_t i = 0; i < k; ++i) {
      const double p = std::exp(out[i].real() - mx) / z;
      const double y = i == labels.front() ? 1.0 : 0.0;
      seed[i] = 0.5 * (p - y);
    }
    loss = -(out[labels.front()].real() - mx - std::log(z));
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      const double l = out[i].real();
      const double y = std::find(labels.begin(), labels.end(), i) != labels.end() ? 1.0 : 0.0;
      const double p = 1.0 / (1.0 + std::exp(-l));
      seed[i] = 0.5 * (p - y);
      loss += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
    }
  }
  return {loss, std::move(seed)};
}

// Digits: argmax equals the label. Two-channel: the top-|labels| outputs are
// exactly the label set.
inline bool is_correct(const CTensor& out, const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out[a].real() > out[b].real();
  });
  std::vector<std::size_t> top(order.begin(), order.begin() + static_cast<long>(labels.size()));
  std::vector<std::size_t> want = labels;
  std::sort(top.begin(), top.end());
  std::sort(want.begin(), want.end());
  return top == want;
}

inline double accuracy(const Model& model, const Dataset& ds) {
  if (ds.inputs.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
    if (is_correct(predict(model, ds.inputs[i]), ds.labels[i])) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(ds.inputs.size());
}

struct TrainResult {
  Model model;
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

// Mini-batch gradient descent with momentum along -dL/d(conj theta).
// Single-threaded and fully determined by the task and config.
inline TrainResult train_toy(ToyTask task, const TrainConfig& config) {
  const Dataset ds = make_dataset(task, config.train_size, config.seed + 1000);
  TrainResult result{initial_model(task, config), 0.0, {}};
  Model& model = result.model;
  const std::size_t n_layers = model.layers.size();
  std::vector<CTensor> vel_w(n_layers), vel_b(n_layers);
  Rng rng(config.seed + 2000);
  std::vector<std::size_t> order(ds.inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<CTensor> gw(n_layers), gb(n_layers);
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t i = order[s];
        const ForwardTrace trace = forward(model, ds.inputs[i]);
        const LossAndSeed ls = loss_and_seed(task, trace.output(), ds.labels[i]);
        if (!std::isfinite(ls.loss)) {
          throw DivergenceError("training diverged (non-finite loss) for task " +
                                task_name(task) + " with " + config.describe());
        }
        epoch_loss += ls.loss;
        const BackwardState state = backward_all(model, trace, ls.seed);
        const auto pg = parameter_cogradients(model, trace, state);
        for (std::size_t k = 0; k < n_layers; ++k) {
          if (!pg[k]) continue;
          if (gw[k].empty()) {
            gw[k] = pg[k]->weight;
            gb[k] = pg[k]->bias;
          } else {
            gw[k] = gw[k] + pg[k]->weight;
            gb[k] = gb[k] + pg[k]->bias;
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = 0; k < n_layers; ++k) {
        if (gw[k].empty()) continue;
        CTensor* w = nullptr;
        CTensor* b = nullptr;
        if (auto* lin = std::get_if<ComplexLinear>(&model.layers[k])) {
          w = &lin->weight;
          b = &lin->bias;
        } else if (auto* conv = std::get_if<ComplexConv2d>(&model.layers[k])) {
          w = &conv->kernel;
          b = &conv->bias;
        }
        if (vel_w[k].empty()) {
          vel_w[k] = CTensor(w->shape());
          vel_b[k] = CTensor(b->shape());
        }
        for (std::size_t e = 0; e < w->size(); ++e) {
          vel_w[k][e] = config.momentum * vel_w[k][e] + scale * gw[k][e];
          (*w)[e] -= config.learning_rate * vel_w[k][e];
        }
        for (std::size_t e = 0; e < b->size(); ++e) {
          vel_b[k][e] = config.momentum * vel_b[k][e] + scale * gb[k][e];
          (*b)[e] -= config.learning_rate * vel_b[k][e];
        }
      }
    }
    epoch_loss /= static_cast<double>(ds.inputs.size());
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("training diverged (non-finite loss) for task " +
                            task_name(task) + " with " + config.describe());
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  result.train_accuracy = accuracy(model, ds);
  return result;
}

}  // namespace cshap::harness
