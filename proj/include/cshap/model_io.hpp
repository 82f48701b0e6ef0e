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

// Model and tensor files.
//
// Model document:
//
//   {
//     "name": "mlp",
//     "version": 1,
//     "input_shape": [4],
//     "readout": "real",                       // or "complex"; default real
//     "layers": [
//       {"kind": "ComplexLinear",
//        "params": {"in_features": 4, "out_features": 3},
//        "weights": {"weight": {"shape": [3, 4], "re": [...], "im": [...]},
//                    "bias":   {"shape": [3],    "re": [...], "im": [...]}}},
//       {"kind": "ComplexConv2d",
//        "params": {"in_channels": 1, "out_channels": 2, "kernel_size": [3, 3],
//                   "stride": 1, "padding": 0},
//        "weights": {"kernel": {...}, "bias": {...}}},
//       {"kind": "MagnitudeMaxPool", "params": {"window": [2, 2], "stride": 2}},
//       {"kind": "CReLU"}, {"kind": "ZReLU"}, {"kind": "Flatten"},
//       {"kind": "RealPart"}, {"kind": "Magnitude"}, {"kind": "SquaredMagnitude"}
//     ]
//   }
//
// Tensor values are flat row-major re/im lists. The writer emits every number
// with 17 significant digits so files round-trip bit-exactly. Tensor files
// hold one {"shape", "re", "im"} object or {"tensors": [ ... ]}.

#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "cshap/error.hpp"
#include "cshap/layers.hpp"
#include "cshap/model.hpp"
#include "cshap/tensor.hpp"

namespace cshap::io {

using Json = nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialize a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Writing.

namespace detail {

inline void write_shape(std::ostringstream& out, const Shape& shape) {
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? ", " : "") << shape[i];
  out << ']';
}

inline void write_tensor(std::ostringstream& out, const CTensor& t, const std::string& indent) {
  out << "{\n" << indent << "  \"shape\": ";
  write_shape(out, t.shape());
  out << ",\n" << indent << "  \"re\": [";
  for (std::size_t i = 0; i < t.size(); ++i) out << (i ? ", " : "") << format_double(t[i].real());
  out << "],\n" << indent << "  \"im\": [";
  for (std::size_t i = 0; i < t.size(); ++i) out << (i ? ", " : "") << format_double(t[i].imag());
  out << "]\n" << indent << '}';
}

inline std::string json_string(const std::string& s) { return Json(s).dump(); }

}  // namespace detail

inline std::string serialize_model(const Model& model) {
  model.validate();
  std::ostringstream out;
  out << "{\n  \"name\": " << detail::json_string(model.name) << ",\n"
      << "  \"version\": " << model.version << ",\n  \"input_shape\": ";
  detail::write_shape(out, model.input_shape);
  out << ",\n  \"readout\": \"" << (model.readout == Readout::kReal ? "real" : "complex")
      << "\",\n  \"layers\": [";
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const Layer& layer = model.layers[k];
    out << (k ? ",\n" : "\n") << "    {\"kind\": \"" << layer_kind(layer) << '"';
    if (const auto* l = std::get_if<ComplexLinear>(&layer)) {
      out << ", \"params\": {\"in_features\": " << l->in_features()
          << ", \"out_features\": " << l->out_features() << "},\n"
          << "     \"weights\": {\"weight\": ";
      detail::write_tensor(out, l->weight, "     ");
      out << ",\n     \"bias\": ";
      detail::write_tensor(out, l->bias, "     ");
      out << "}}";
    } else if (const auto* c = std::get_if<ComplexConv2d>(&layer)) {
      out << ", \"params\": {\"in_channels\": " << c->in_channels()
          << ", \"out_channels\": " << c->out_channels() << ", \"kernel_size\": ["
          << c->kernel_h() << ", " << c->kernel_w() << "], \"stride\": " << c->stride
          << ", \"padding\": " << c->padding << "},\n"
          << "     \"weights\": {\"kernel\": ";
      detail::write_tensor(out, c->kernel, "     ");
      out << ",\n     \"bias\": ";
      detail::write_tensor(out, c->bias, "     ");
      out << "}}";
    } else if (const auto* p = std::get_if<MagnitudeMaxPool>(&layer)) {
      out << ", \"params\": {\"window\": [" << p->window_h << ", " << p->window_w
          << "], \"stride\": " << p->stride << "}}";
    } else {
      out << '}';
    }
  }
  out << "\n  ]\n}\n";
  return out.str();
}

inline void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

inline std::string model_hash(const Model& model) { return fnv1a_hex(serialize_model(model)); }

inline std::string serialize_tensors(const std::vector<CTensor>& tensors) {
  std::ostringstream out;
  out << "{\n  \"tensors\": [";
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    out << (i ? ",\n    " : "\n    ");
    detail::write_tensor(out, tensors[i], "    ");
  }
  out << "\n  ]\n}\n";
  return out.str();
}

inline void save_tensors(const std::vector<CTensor>& tensors, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_tensors(tensors));
}

// ---------------------------------------------------------------------------
// Reading. Errors name the offending field, e.g. "layers[1].weights.bias.re".

namespace detail {

inline IoError field_error(const std::string& path, const std::string& what) {
  return IoError(path + ": " + what);
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw field_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw field_error(path + "." + key, "missing field");
  return *it;
}

inline std::size_t read_size(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw field_error(path, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline Shape read_shape(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw field_error(path, "expected a non-empty integer list");
  Shape shape;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t d = read_size(v[i], path + "[" + std::to_string(i) + "]");
    if (d == 0) throw field_error(path, "dimensions must be positive");
    shape.push_back(d);
  }
  return shape;
}

inline std::vector<double> read_numbers(const Json& v, const std::string& path) {
  if (!v.is_array()) throw field_error(path, "expected a number list");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw field_error(path + "[" + std::to_string(i) + "]", "expected a number");
    const double d = v[i].get<double>();
    if (!std::isfinite(d)) throw field_error(path + "[" + std::to_string(i) + "]", "non-finite value");
    out.push_back(d);
  }
  return out;
}

inline CTensor read_tensor(const Json& v, const std::string& path) {
  const Shape shape = read_shape(require(v, "shape", path), path + ".shape");
  const std::vector<double> re = read_numbers(require(v, "re", path), path + ".re");
  std::vector<double> im(re.size(), 0.0);
  if (v.contains("im")) im = read_numbers(v["im"], path + ".im");
  const std::size_t n = shape_numel(shape);
  if (re.size() != n) {
    throw field_error(path + ".re", "expected " + std::to_string(n) + " values, got " +
                                        std::to_string(re.size()));
  }
  if (im.size() != n) {
    throw field_error(path + ".im", "expected " + std::to_string(n) + " values, got " +
                                        std::to_string(im.size()));
  }
  std::vector<CScalar> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = {re[i], im[i]};
  return CTensor(shape, std::move(data));
}

inline void expect_shape(const CTensor& t, const Shape& shape, const std::string& path) {
  if (t.shape() != shape) {
    throw ValidationError(path + ": shape " + shape_to_string(t.shape()) +
                          " inconsistent with declared " + shape_to_string(shape));
  }
}

inline Layer read_layer(const Json& v, const std::string& path) {
  const Json& kind_json = require(v, "kind", path);
  if (!kind_json.is_string()) throw field_error(path + ".kind", "expected a string");
  const std::string kind = kind_json.get<std::string>();
  const Json empty = Json::object();
  const Json& params = v.contains("params") ? v["params"] : empty;
  const std::string pp = path + ".params";
  if (kind == "ComplexLinear") {
    const std::size_t in = read_size(require(params, "in_features", pp), pp + ".in_features");
    const std::size_t out = read_size(require(params, "out_features", pp), pp + ".out_features");
    const Json& w = require(v, "weights", path);
    const std::string wp = path + ".weights";
    ComplexLinear l{read_tensor(require(w, "weight", wp), wp + ".weight"),
                    read_tensor(require(w, "bias", wp), wp + ".bias")};
    expect_shape(l.weight, {out, in}, wp + ".weight");
    expect_shape(l.bias, {out}, wp + ".bias");
    return l;
  }
  if (kind == "ComplexConv2d") {
    const std::size_t ic = read_size(require(params, "in_channels", pp), pp + ".in_channels");
    const std::size_t oc = read_size(require(params, "out_channels", pp), pp + ".out_channels");
    const Shape ks = read_shape(require(params, "kernel_size", pp), pp + ".kernel_size");
    if (ks.size() != 2) throw field_error(pp + ".kernel_size", "expected [kh, kw]");
    const Json& w = require(v, "weights", path);
    const std::string wp = path + ".weights";
    ComplexConv2d c{read_tensor(require(w, "kernel", wp), wp + ".kernel"),
                    read_tensor(require(w, "bias", wp), wp + ".bias"), 1, 0};
    if (params.contains("stride")) c.stride = read_size(params["stride"], pp + ".stride");
    if (params.contains("padding")) c.padding = read_size(params["padding"], pp + ".padding");
    if (c.stride == 0) throw ValidationError(pp + ".stride: must be positive");
    expect_shape(c.kernel, {oc, ic, ks[0], ks[1]}, wp + ".kernel");
    expect_shape(c.bias, {oc}, wp + ".bias");
    return c;
  }
  if (kind == "MagnitudeMaxPool") {
    const Shape win = read_shape(require(params, "window", pp), pp + ".window");
    if (win.size() != 2) throw field_error(pp + ".window", "expected [h, w]");
    MagnitudeMaxPool p{win[0], win[1], win[0]};
    if (params.contains("stride")) p.stride = read_size(params["stride"], pp + ".stride");
    if (p.stride == 0) throw ValidationError(pp + ".stride: must be positive");
    return p;
  }
  if (kind == "CReLU") return CReLU{};
  if (kind == "ZReLU") return ZReLU{};
  if (kind == "Flatten") return Flatten{};
  if (kind == "RealPart") return RealPart{};
  if (kind == "Magnitude") return Magnitude{};
  if (kind == "SquaredMagnitude") return SquaredMagnitude{};
  throw UnsupportedLayerError(path + ".kind: unsupported layer kind '" + kind + "'");
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(origin + ": malformed document: " + e.what());
  }
}

}  // namespace detail

inline Model parse_model(const std::string& text, const std::string& origin = "model") {
  const Json doc = detail::parse_json(text, origin);
  Model model;
  const std::string root = origin;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw detail::field_error(root + ".name", "expected a string");
    model.name = doc["name"].get<std::string>();
  }
  const Json& version = detail::require(doc, "version", root);
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw detail::field_error(root + ".version", "unsupported version (expected 1)");
  }
  model.input_shape =
      detail::read_shape(detail::require(doc, "input_shape", root), root + ".input_shape");
  if (doc.contains("readout")) {
    const Json& r = doc["readout"];
    if (r == "real") {
      model.readout = Readout::kReal;
    } else if (r == "complex") {
      model.readout = Readout::kComplex;
    } else {
      throw detail::field_error(root + ".readout", "expected \"real\" or \"complex\"");
    }
  }
  const Json& layers = detail::require(doc, "layers", root);
  if (!layers.is_array()) throw detail::field_error(root + ".layers", "expected a list");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    model.layers.push_back(
        detail::read_layer(layers[k], root + ".layers[" + std::to_string(k) + "]"));
  }
  try {
    model.validate();
  } catch (const ShapeError& e) {
    throw ValidationError(root + ": " + e.what());
  }
  return model;
}

inline Model load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.filename().string());
}

inline std::vector<CTensor> parse_tensors(const std::string& text,
                                          const std::string& origin = "tensors") {
  const Json doc = detail::parse_json(text, origin);
  std::vector<CTensor> out;
  if (doc.is_object() && doc.contains("tensors")) {
    const Json& list = doc["tensors"];
    if (!list.is_array()) throw detail::field_error(origin + ".tensors", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      out.push_back(detail::read_tensor(list[i], origin + ".tensors[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(detail::read_tensor(doc, origin));
  }
  return out;
}

inline std::vector<CTensor> load_tensors(const std::filesystem::path& path) {
  return parse_tensors(read_file(path), path.filename().string());
}

}  // namespace cshap::io
