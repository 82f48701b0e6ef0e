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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cshap/cshap.hpp"

namespace {

using namespace cshap;
using Report = nlohmann::ordered_json;

constexpr const char* kVersion = CSHAP_VERSION_STRING;

enum ExitCode { kOk = 0, kCheckFailed = 1, kBadInput = 2, kUnsupported = 3 };

// ---------------------------------------------------------------------------
// Parallel fan-out

std::size_t thread_cap() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CSHAP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min(n, static_cast<std::size_t>(v));
  }
  return n;
}

// Runs fn(i) for i in [0, n). Each index writes only its own result slot, so
// the outcome does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(n, thread_cap());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string header_lines(const std::string& prefix, const std::string& command,
                          const std::string& config, const std::string& hash) {
  std::ostringstream out;
  out << prefix << "cshap " << kVersion << '\n'
      << prefix << "command: " << command << '\n'
      << prefix << "config: " << config << '\n'
      << prefix << "model_hash: " << hash << '\n';
  return out.str();
}

Report report_header(const std::string& command, const Report& config, const std::string& hash) {
  Report r;
  r["tool"] = "cshap";
  r["version"] = kVersion;
  r["command"] = command;
  r["config"] = config;
  r["model_hash"] = hash;
  return r;
}

void write_report(const Report& r, const std::string& path) {
  io::write_file_atomic(path, r.dump(2) + "\n");
}

// Model document with a producer record; loaders ignore the extra key.
std::string model_with_producer(const Model& m, const std::string& command,
                                const std::string& config) {
  std::string text = io::serialize_model(m);
  Report producer;
  producer["tool"] = "cshap";
  producer["version"] = kVersion;
  producer["command"] = command;
  producer["config"] = config;
  producer["model_hash"] = io::model_hash(m);
  return "{\n  \"producer\": " + producer.dump() + "," + text.substr(1);
}

// Rank-3 maps are tiled channel by channel from left to right.
std::string graymap(const RTensor& map, const std::string& comments) {
  const Shape& s = map.shape();
  std::size_t rows = 1;
  std::size_t cols = map.size();
  std::size_t channels = 1;
  if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
  } else if (s.size() == 3) {
    channels = s[0];
    rows = s[1];
    cols = s[2];
  }
  double lo = map[0];
  double hi = map[0];
  for (double v : map.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::ostringstream out;
  out << "P2\n" << comments << cols * channels << ' ' << rows << "\n255\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t k = 0; k < cols; ++k) {
        const double v = map[(c * rows + r) * cols + k];
        const long level = hi > lo ? std::lround(255.0 * (v - lo) / (hi - lo)) : 0;
        out << level << ((c + 1 == channels && k + 1 == cols) ? '\n' : ' ');
      }
    }
  }
  return out.str();
}

std::vector<CTensor> references_for(const std::string& path, const Model& m) {
  if (path.empty()) return {CTensor(m.input_shape)};
  std::vector<CTensor> refs = io::load_tensors(path);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].shape() != m.input_shape) {
      throw ValidationError(path + ": reference " + std::to_string(i) + " has shape " +
                            shape_to_string(refs[i].shape()) + ", model expects " +
                            shape_to_string(m.input_shape));
    }
  }
  if (refs.empty()) throw ValidationError(path + ": no reference tensors");
  return refs;
}

OutputPart parse_part(const std::string& s) {
  if (s == "im") return OutputPart::kImag;
  if (s == "complex") return OutputPart::kComplex;
  return OutputPart::kReal;
}

harness::ToyTask parse_task(const std::string& s) {
  if (s == "two_channel_synthetic" || s == "two_channel") {
    return harness::ToyTask::kTwoChannelSynthetic;
  }
  if (s == "mini_digits" || s == "digits") return harness::ToyTask::kMiniDigits;
  throw ValidationError("unknown task '" + s + "' (expected two_channel_synthetic or mini_digits)");
}

// ---------------------------------------------------------------------------
// Commands

struct ExplainArgs {
  std::string model, input, reference, method = "deepcshap", reduce = "ri", output;
  std::string part = "re";
  std::size_t steps = 5, output_index = 0, window_cap = kDefaultEnumerationCap;
  std::uint64_t seed = 0;
  bool conjugate_input = false;
};

int cmd_explain(const ExplainArgs& a) {
  const Model m = io::load_model(a.model);
  const std::vector<CTensor> inputs = io::load_tensors(a.input);
  const std::vector<CTensor> refs = references_for(a.reference, m);
  const Method method = *parse_method(a.method);
  const Reduction reduction = *parse_reduction(a.reduce);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].shape() != m.input_shape) {
      throw ValidationError(a.input + ": input " + std::to_string(i) + " has shape " +
                            shape_to_string(inputs[i].shape()) + ", model expects " +
                            shape_to_string(m.input_shape));
    }
  }
  ExplainConfig config;
  config.references = refs;
  config.steps = a.steps;
  config.part = parse_part(a.part);
  config.conjugate_input = a.conjugate_input;
  config.window_cap = a.window_cap;
  config.seed = a.seed;
  check_output_selector(m, a.output_index, config.part);

  std::vector<CTensor> phi(inputs.size());
  std::vector<CScalar> phi0(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) {
    if (method == Method::kDeepCShap) {
      const ContributionMap c = explain_deepcshap(m, inputs[i], refs, a.output_index,
                                                  {config.part, config.window_cap});
      phi[i] = c.phi;
      phi0[i] = c.phi0;
    } else {
      phi[i] = explain_method(method, m, inputs[i], a.output_index, config);
    }
  });

  std::ostringstream cfg;
  cfg << "method=" << a.method << " reduce=" << a.reduce << " steps=" << a.steps
      << " seed=" << a.seed << " output_index=" << a.output_index << " part=" << a.part
      << " conjugate_input=" << (a.conjugate_input ? 1 : 0) << " window_cap=" << a.window_cap
      << " model=" << a.model << " input=" << a.input
      << " reference=" << (a.reference.empty() ? "zeros" : a.reference);
  const std::string hash = io::model_hash(m);
  const std::string head = header_lines("# ", "explain", cfg.str(), hash);

  std::ostringstream meta;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const CScalar fx = select_output(m, forward(m, inputs[i]), a.output_index, config.part);
    const CScalar s = sum(phi[i]);
    meta << "# input " << i << ": f(x)=" << fmt(fx.real()) << ',' << fmt(fx.imag());
    if (method == Method::kDeepCShap) {
      const CScalar total = s + phi0[i];
      meta << " phi0=" << fmt(phi0[i].real()) << ',' << fmt(phi0[i].imag())
           << " sum_phi_plus_phi0=" << fmt(total.real()) << ',' << fmt(total.imag())
           << " abs_error=" << fmt(std::abs(total - fx));
    } else {
      meta << " sum_phi=" << fmt(s.real()) << ',' << fmt(s.imag());
    }
    meta << '\n';
  }

  std::ostringstream csv;
  csv << head << meta.str() << "input,index,re,im\n";
  std::ostringstream reduced;
  reduced << head << "input,index,value\n";
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const RTensor r = reduce_saliency(phi[i], reduction);
    for (std::size_t j = 0; j < phi[i].size(); ++j) {
      csv << i << ',' << j << ',' << fmt(phi[i][j].real()) << ',' << fmt(phi[i][j].imag()) << '\n';
      reduced << i << ',' << j << ',' << fmt(r[j]) << '\n';
    }
    io::write_file_atomic(a.output + "." + std::to_string(i) + ".pgm",
                          graymap(r, head + "# input " + std::to_string(i) + "\n"));
  }
  io::write_file_atomic(a.output + ".csv", csv.str());
  io::write_file_atomic(a.output + ".reduced.csv", reduced.str());
  std::cout << "explained " << inputs.size() << " input(s) with " << a.method << " -> "
            << a.output << ".csv\n";
  return kOk;
}

struct AxiomArgs {
  std::string model, input, reference, output;
  std::size_t count = 100, window_cap = kDefaultEnumerationCap;
  std::uint64_t seed = 0;
  double missing_fraction = 0.2, tolerance = 1e-5;
};

int cmd_axioms(const AxiomArgs& a) {
  const Model m = io::load_model(a.model);
  const std::vector<CTensor> refs = references_for(a.reference, m);
  std::vector<CTensor> inputs;
  if (!a.input.empty()) {
    inputs = io::load_tensors(a.input);
  } else {
    // Random inputs with a share of features copied from the reference, so
    // that missingness is exercised.
    harness::Rng rng(a.seed);
    std::bernoulli_distribution copy(a.missing_fraction);
    for (std::size_t i = 0; i < a.count; ++i) {
      CTensor x = harness::random_ctensor(rng, m.input_shape);
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (copy(rng)) x[j] = refs.front()[j];
      }
      inputs.push_back(std::move(x));
    }
  }
  std::vector<harness::AxiomReport> parts(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) {
    parts[i] = harness::check_axioms(m, std::span<const CTensor>(&inputs[i], 1), refs,
                                     a.window_cap);
  });
  double err = 0.0, out = 0.0;
  std::size_t missing = 0, missing_bad = 0, evals = 0;
  for (const auto& p : parts) {
    err += p.local_accuracy_error * static_cast<double>(p.evaluations);
    out += p.mean_abs_output * static_cast<double>(p.evaluations);
    evals += p.evaluations;
    missing += p.missing_features;
    missing_bad += p.missing_nonzero;
  }
  harness::AxiomReport total;
  total.evaluations = evals;
  total.local_accuracy_error = err / static_cast<double>(evals);
  total.mean_abs_output = out / static_cast<double>(evals);
  total.relative_error = total.mean_abs_output > 0.0
                             ? total.local_accuracy_error / total.mean_abs_output
                             : total.local_accuracy_error;
  total.missing_features = missing;
  total.missing_nonzero = missing_bad;
  total.missingness_error_fraction =
      missing ? static_cast<double>(missing_bad) / static_cast<double>(missing) : 0.0;
  const bool ok = total.relative_error <= a.tolerance && total.missingness_error_fraction == 0.0;

  Report config;
  config["model"] = a.model;
  config["input"] = a.input.empty() ? "random" : a.input;
  config["reference"] = a.reference.empty() ? "zeros" : a.reference;
  config["count"] = inputs.size();
  config["seed"] = a.seed;
  config["missing_fraction"] = a.missing_fraction;
  config["tolerance"] = a.tolerance;
  config["window_cap"] = a.window_cap;
  Report r = report_header("axioms", config, io::model_hash(m));
  r["local_accuracy_error"] = total.local_accuracy_error;
  r["mean_abs_output"] = total.mean_abs_output;
  r["relative_error"] = total.relative_error;
  r["missingness_error_fraction"] = total.missingness_error_fraction;
  r["missing_features"] = total.missing_features;
  r["missing_nonzero"] = total.missing_nonzero;
  r["evaluations"] = total.evaluations;
  r["passed"] = ok;
  write_report(r, a.output);
  std::cout << "relative error " << fmt(total.relative_error) << ", missingness "
            << 100.0 * total.missingness_error_fraction << "% over " << missing
            << " missing features: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kCheckFailed;
}

struct EvaluateArgs {
  std::string model, task, method = "deepcshap", reduce = "ri", output;
  std::size_t count = 100, steps = 5, source = 0, target = 1;
  std::uint64_t seed = 0;
  double fraction = 0.2;
  bool conjugate_input = false;
};

Report summary(const std::vector<double>& values, double median, double mean) {
  Report s;
  s["values"] = values;
  s["median"] = median;
  s["mean"] = mean;
  return s;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const Model m = io::load_model(a.model);
  const harness::ToyTask task = parse_task(a.task.empty() ? m.name : a.task);
  harness::Explainer explainer{*parse_method(a.method), *parse_reduction(a.reduce), {}};
  explainer.config.steps = a.steps;
  explainer.config.conjugate_input = a.conjugate_input;
  explainer.config.seed = a.seed;
  const harness::Dataset ds = harness::make_dataset(task, a.count, a.seed);

  Report config;
  config["model"] = a.model;
  config["task"] = harness::task_name(task);
  config["method"] = a.method;
  config["reduce"] = a.reduce;
  config["count"] = a.count;
  config["steps"] = a.steps;
  config["seed"] = a.seed;
  config["conjugate_input"] = a.conjugate_input;
  if (task == harness::ToyTask::kMiniDigits) {
    config["fraction"] = a.fraction;
    config["source"] = a.source;
    config["target"] = a.target;
  }
  Report r = report_header("evaluate", config, io::model_hash(m));
  r["accuracy"] = harness::accuracy(m, ds);

  if (task == harness::ToyTask::kTwoChannelSynthetic) {
    std::vector<harness::ChannelSample> samples;
    for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
      samples.push_back({ds.inputs[i], ds.labels[i][0], {0, 1}});
      samples.push_back({ds.inputs[i], ds.labels[i][1], {2, 3}});
    }
    const harness::ChannelScore s = harness::channel_attribution_score(m, samples, explainer);
    Report cs = summary(s.scores, s.median, s.mean);
    cs["skipped"] = s.skipped;
    r["channel_score"] = cs;
    std::cout << "channel score median " << fmt(s.median) << " over " << s.scores.size()
              << " samples (" << s.skipped << " skipped)\n";
  } else {
    std::vector<CTensor> images;
    for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
      if (ds.labels[i][0] == a.source) images.push_back(ds.inputs[i]);
    }
    if (images.empty()) throw ValidationError("no images of the source class");
    const auto res = harness::masking_experiment(m, images, a.source, a.target, explainer,
                                                 a.fraction);
    harness::Explainer random{Method::kRandom, Reduction::kRealPlusImag, {}};
    random.config.seed = a.seed;
    const auto base = harness::masking_experiment(m, images, a.source, a.target, random,
                                                  a.fraction);
    r["masking"] = summary(res.changes, res.median, res.mean);
    r["random_baseline"] = summary(base.changes, base.median, base.mean);
    std::cout << "median log-odds change " << fmt(res.median) << " (random "
              << fmt(base.median) << ") over " << images.size() << " images\n";
  }
  write_report(r, a.output);
  return kOk;
}

int cmd_oracle_check(std::size_t cases, std::uint64_t seed, const std::string& output) {
  const auto results = harness::run_oracle_suite(cases, seed);
  Report config;
  config["cases"] = cases;
  config["seed"] = seed;
  Report r = report_header("oracle-check", config, "none");
  bool ok = true;
  Report checks = Report::array();
  for (const auto& c : results) {
    Report e;
    e["name"] = c.name;
    e["cases"] = c.cases;
    e["max_error"] = c.max_error;
    e["tolerance"] = c.tolerance;
    e["failures"] = c.failures;
    e["note"] = c.note;
    e["passed"] = c.passed();
    checks.push_back(e);
    ok = ok && c.passed();
    std::cout << (c.passed() ? "ok   " : "FAIL ") << c.name << ": " << c.cases
              << " cases, max error " << fmt_short(c.max_error) << " (tolerance "
              << fmt_short(c.tolerance) << ")\n";
  }
  r["checks"] = checks;
  r["passed"] = ok;
  if (!output.empty()) write_report(r, output);
  return ok ? kOk : kCheckFailed;
}

struct TrainArgs {
  std::string task = "two_channel_synthetic", output;
  harness::TrainConfig config;
};

int cmd_train_toy(const TrainArgs& a) {
  const harness::ToyTask task = parse_task(a.task);
  const harness::TrainResult r = harness::train_toy(task, a.config);
  const std::string cfg = "task=" + harness::task_name(task) + " " + a.config.describe();
  io::write_file_atomic(a.output, model_with_producer(r.model, "train-toy", cfg));
  std::cout << harness::task_name(task) << ": train accuracy " << r.train_accuracy
            << ", final loss " << fmt(r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back())
            << " -> " << a.output << '\n';
  if (task == harness::ToyTask::kTwoChannelSynthetic && r.train_accuracy < 0.9) {
    std::cerr << "error: train accuracy below 0.9 with " << cfg << '\n';
    return kCheckFailed;
  }
  return kOk;
}

struct ToyModelArgs {
  std::string kind = "linear", output, inputs_output;
  std::size_t count = 100;
  std::uint64_t seed = 0;
};

int cmd_toy_model(const ToyModelArgs& a) {
  harness::Rng rng(a.seed);
  Model m;
  if (a.kind == "linear") {
    m = harness::linear_model(rng, 8, 3);
  } else if (a.kind == "mlp_crelu") {
    m = harness::mlp_crelu_model(rng, 8, 16, 3);
  } else {
    m = harness::conv_crelu_maxpool_model(rng, {2, 8, 8}, 4, 3);
  }
  const std::string cfg = "kind=" + a.kind + " seed=" + std::to_string(a.seed);
  io::write_file_atomic(a.output, model_with_producer(m, "toy-model", cfg));
  if (!a.inputs_output.empty()) {
    std::vector<CTensor> inputs;
    for (std::size_t i = 0; i < a.count; ++i) {
      inputs.push_back(harness::random_ctensor(rng, m.input_shape));
    }
    io::save_tensors(inputs, a.inputs_output);
  }
  std::cout << a.kind << " model " << io::model_hash(m) << " -> " << a.output << '\n';
  return kOk;
}

int cmd_verify_export(const std::string& model_path, const std::string& probes_path,
                      const std::string& expected_path, double tolerance) {
  const Model m = io::load_model(model_path);
  const auto probes = io::load_tensors(probes_path);
  const auto expected = io::load_tensors(expected_path);
  if (probes.size() != expected.size()) {
    throw ValidationError("probe and expected counts differ (" + std::to_string(probes.size()) +
                          " vs " + std::to_string(expected.size()) + ")");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const CTensor out = forward(m, probes[i]).output();
    const CTensor want = expected[i].reshaped({expected[i].size()});
    const CTensor got = out.reshaped({out.size()});
    const double scale = std::max(max_abs(want), 1e-300);
    worst = std::max(worst, max_abs_diff(got, want) / scale);
  }
  const bool ok = worst <= tolerance;
  std::cout << probes.size() << " probes, max relative error " << fmt(worst) << ": "
            << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kCheckFailed;
}

int run(int argc, char** argv) {
  CLI::App app{"cshap: Shapley explanations for complex-valued networks", "cshap"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const std::vector<std::string> methods(kMethodNames.begin(), kMethodNames.end());
  const std::vector<std::string> reductions{"abs", "ri"};

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "Explain one output of a model for each input");
  explain->add_option("--model", ex.model, "Model file")->required()->check(CLI::ExistingFile);
  explain->add_option("--input", ex.input, "Tensor file with one or more inputs")
      ->required()
      ->check(CLI::ExistingFile);
  explain->add_option("--reference", ex.reference,
                      "Tensor file of references (DeepCSHAP) or baseline (first entry); zeros if omitted")
      ->check(CLI::ExistingFile);
  explain->add_option("--method", ex.method, "Explanation method")
      ->check(CLI::IsMember(methods))
      ->capture_default_str();
  explain->add_option("--reduce", ex.reduce, "Reduction for the real map")
      ->check(CLI::IsMember(reductions))
      ->capture_default_str();
  explain->add_option("--output", ex.output, "Output path prefix")->required();
  explain->add_option("--steps", ex.steps, "Integrated-gradients steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  explain->add_option("--seed", ex.seed, "Seed")->capture_default_str();
  explain->add_option("--output-index", ex.output_index, "Explained output")->capture_default_str();
  explain->add_option("--part", ex.part, "Explained part of a complex output")
      ->check(CLI::IsMember({"re", "im", "complex"}))
      ->capture_default_str();
  explain->add_flag("--conjugate-input", ex.conjugate_input,
                    "Multiply gradients by conj(x) in grad-times-input");
  explain->add_option("--window-cap", ex.window_cap, "Largest max-pool window explained exactly")
      ->capture_default_str();

  AxiomArgs ax;
  auto* axioms = app.add_subcommand("axioms", "Check local accuracy and missingness of DeepCSHAP");
  axioms->add_option("--model", ax.model, "Model file")->required()->check(CLI::ExistingFile);
  axioms->add_option("--input", ax.input, "Tensor file of inputs; random inputs if omitted")
      ->check(CLI::ExistingFile);
  axioms->add_option("--reference", ax.reference, "Tensor file of references; zeros if omitted")
      ->check(CLI::ExistingFile);
  axioms->add_option("--count", ax.count, "Number of random inputs")->capture_default_str();
  axioms->add_option("--seed", ax.seed, "Seed for random inputs")->capture_default_str();
  axioms->add_option("--missing-fraction", ax.missing_fraction,
                     "Share of features copied from the reference in random inputs")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  axioms->add_option("--tolerance", ax.tolerance, "Largest accepted relative error")
      ->capture_default_str();
  axioms->add_option("--window-cap", ax.window_cap, "Largest max-pool window explained exactly")
      ->capture_default_str();
  axioms->add_option("--output", ax.output, "Report file")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Channel score (two-channel task) or masking experiment (digits task)");
  evaluate->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--task", ev.task, "two_channel_synthetic or mini_digits; model name if omitted");
  evaluate->add_option("--method", ev.method, "Explanation method")
      ->check(CLI::IsMember(methods))
      ->capture_default_str();
  evaluate->add_option("--reduce", ev.reduce, "Reduction")
      ->check(CLI::IsMember(reductions))
      ->capture_default_str();
  evaluate->add_option("--count", ev.count, "Dataset size")->capture_default_str();
  evaluate->add_option("--steps", ev.steps, "Integrated-gradients steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--seed", ev.seed, "Dataset seed")->capture_default_str();
  evaluate->add_option("--fraction", ev.fraction, "Masked share of pixels")
      ->check(CLI::Range(0.0, 0.2))
      ->capture_default_str();
  evaluate->add_option("--source", ev.source, "Source class")->capture_default_str();
  evaluate->add_option("--target", ev.target, "Target class")->capture_default_str();
  evaluate->add_flag("--conjugate-input", ev.conjugate_input,
                     "Multiply gradients by conj(x) in grad-times-input");
  evaluate->add_option("--output", ev.output, "Report file")->required();

  std::size_t cases = 1000;
  std::uint64_t oracle_seed = 20260101;
  std::string oracle_output;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Cross-check explainers against brute force");
  oracle_cmd->add_option("--cases", cases, "Cases per layer kind")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle_cmd->add_option("--seed", oracle_seed, "Seed")->capture_default_str();
  oracle_cmd->add_option("--output", oracle_output, "Report file");

  TrainArgs tr;
  auto* train = app.add_subcommand("train-toy", "Train a toy classifier");
  train->add_option("--task", tr.task, "two_channel_synthetic or mini_digits")->capture_default_str();
  train->add_option("--epochs", tr.config.epochs, "Epochs")->capture_default_str();
  train->add_option("--lr", tr.config.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--momentum", tr.config.momentum, "Momentum")->capture_default_str();
  train->add_option("--batch", tr.config.batch_size, "Batch size")->capture_default_str();
  train->add_option("--train-size", tr.config.train_size, "Training examples")->capture_default_str();
  train->add_option("--hidden", tr.config.hidden, "Hidden units")->capture_default_str();
  train->add_option("--seed", tr.config.seed, "Seed")->capture_default_str();
  train->add_option("--output", tr.output, "Model file")->required();

  ToyModelArgs tm;
  auto* toy = app.add_subcommand("toy-model", "Write a random toy model");
  toy->add_option("--kind", tm.kind, "linear, mlp_crelu or conv_crelu_maxpool")
      ->check(CLI::IsMember({"linear", "mlp_crelu", "conv_crelu_maxpool"}))
      ->capture_default_str();
  toy->add_option("--seed", tm.seed, "Seed")->capture_default_str();
  toy->add_option("--output", tm.output, "Model file")->required();
  toy->add_option("--inputs-output", tm.inputs_output, "Also write random inputs here");
  toy->add_option("--count", tm.count, "Number of random inputs")->capture_default_str();

  std::string vmodel, vprobes, vexpected;
  double vtol = 1e-5;
  auto* verify = app.add_subcommand("verify-export", "Check an exported bundle against its probes");
  verify->add_option("--model", vmodel, "Model file")->required()->check(CLI::ExistingFile);
  verify->add_option("--probes", vprobes, "Probe inputs")->required()->check(CLI::ExistingFile);
  verify->add_option("--expected", vexpected, "Expected outputs")->required()->check(CLI::ExistingFile);
  verify->add_option("--tolerance", vtol, "Largest relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kBadInput;
  }

  try {
    if (*explain) return cmd_explain(ex);
    if (*axioms) return cmd_axioms(ax);
    if (*evaluate) return cmd_evaluate(ev);
    if (*oracle_cmd) return cmd_oracle_check(cases, oracle_seed, oracle_output);
    if (*train) return cmd_train_toy(tr);
    if (*toy) return cmd_toy_model(tm);
    if (*verify) return cmd_verify_export(vmodel, vprobes, vexpected, vtol);
  } catch (const UnsupportedLayerError& e) {
    std::cerr << "error: unsupported layer: " << e.what() << '\n';
    return kUnsupported;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
