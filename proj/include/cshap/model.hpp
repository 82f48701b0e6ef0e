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

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cshap/error.hpp"
#include "cshap/layers.hpp"
#include "cshap/tensor.hpp"

namespace cshap {

// How the final activation is turned into model outputs.
//   kReal:    output k is Re(final[k]); layers such as RealPart or Magnitude
//             make this exact, otherwise the real part is the declared output.
//   kComplex: output k is the complex value final[k]; it is explained as two
//             real outputs (real part and imaginary part).
enum class Readout { kReal, kComplex };

// Which real quantity of a (possibly complex) output is explained.
enum class OutputPart { kReal, kImag, kComplex };

struct Model {
  std::string name = "model";
  int version = 1;
  Shape input_shape;
  Readout readout = Readout::kReal;
  std::vector<Layer> layers;

  // Shapes of every activation, input first. Throws ShapeError naming the
  // first layer that does not compose.
  std::vector<Shape> activation_shapes() const {
    std::vector<Shape> shapes{input_shape};
    shapes.reserve(layers.size() + 1);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      try {
        shapes.push_back(cshap::output_shape(layers[k], shapes.back()));
      } catch (const ShapeError& e) {
        throw ShapeError("layer " + std::to_string(k) + " (" +
                         std::string(layer_kind(layers[k])) + "): " + e.what());
      }
    }
    return shapes;
  }

  Shape output_shape() const { return activation_shapes().back(); }
  std::size_t output_arity() const { return shape_numel(output_shape()); }

  void validate() const {
    if (input_shape.empty()) throw ValidationError("model input_shape is empty");
    for (std::size_t d : input_shape) {
      if (d == 0) throw ValidationError("model input_shape has a zero dimension");
    }
    activation_shapes();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const Layer& l = layers[k];
      const auto check = [&](const CTensor& t, const char* what) {
        if (!all_finite(t)) {
          throw ValidationError("layer " + std::to_string(k) + " " + what +
                                " contains non-finite values");
        }
      };
      if (const auto* lin = std::get_if<ComplexLinear>(&l)) {
        check(lin->weight, "weight");
        check(lin->bias, "bias");
      } else if (const auto* conv = std::get_if<ComplexConv2d>(&l)) {
        check(conv->kernel, "kernel");
        check(conv->bias, "bias");
      }
    }
  }
};

// Activations of one forward pass: activations[0] is the input and
// activations[k + 1] is the output of layer k.
struct ForwardTrace {
  std::vector<CTensor> activations;

  const CTensor& input() const { return activations.front(); }
  const CTensor& output() const { return activations.back(); }
};

inline ForwardTrace forward(const Model& model, const CTensor& x) {
  if (x.shape() != model.input_shape) {
    throw ShapeError("input shape " + shape_to_string(x.shape()) +
                     " does not match model input " +
                     shape_to_string(model.input_shape));
  }
  ForwardTrace trace;
  trace.activations.reserve(model.layers.size() + 1);
  trace.activations.push_back(x);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const Layer& layer = model.layers[k];
    try {
      output_shape(layer, trace.activations.back().shape());
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(k) + " (" +
                       std::string(layer_kind(layer)) + "): " + e.what());
    }
    trace.activations.push_back(layer_forward(layer, trace.activations.back()));
  }
  return trace;
}

// Model outputs as a flat tensor; real readouts have zero imaginary parts.
inline CTensor outputs_of(const Model& model, const ForwardTrace& trace) {
  const CTensor& last = trace.output();
  CTensor out = last.reshaped({last.size()});
  if (model.readout == Readout::kReal) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {out[i].real(), 0.0};
  }
  return out;
}

inline CTensor predict(const Model& model, const CTensor& x) {
  return outputs_of(model, forward(model, x));
}

inline void check_output_selector(const Model& model, std::size_t output_index,
                                  OutputPart part) {
  const std::size_t arity = model.output_arity();
  if (output_index >= arity) {
    throw ValidationError("output index " + std::to_string(output_index) +
                          " out of range for model with " +
                          std::to_string(arity) + " outputs");
  }
  if (model.readout == Readout::kReal && part != OutputPart::kReal) {
    throw ValidationError("model has a real readout; only the real part can be explained");
  }
}

// The explained quantity of output `output_index` as a complex number (real
// for kReal / kImag).
inline CScalar select_output(const Model& model, const ForwardTrace& trace,
                             std::size_t output_index, OutputPart part) {
  const CScalar v = trace.output()[output_index];
  if (model.readout == Readout::kReal) return {v.real(), 0.0};
  switch (part) {
    case OutputPart::kReal: return {v.real(), 0.0};
    case OutputPart::kImag: return {v.imag(), 0.0};
    case OutputPart::kComplex: return v;
  }
  return v;
}

}  // namespace cshap
