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

#include "test_support.hpp"

namespace cshap {
namespace {

using harness::ChannelSample;
using harness::Rng;
using harness::Explainer;
using harness::ToyTask;
using harness::TrainConfig;

std::vector<ChannelSample> channel_samples(const harness::Dataset& ds) {
  std::vector<ChannelSample> samples;
  for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
    samples.push_back({ds.inputs[i], ds.labels[i][0], {0, 1}});
    samples.push_back({ds.inputs[i], ds.labels[i][1], {2, 3}});
  }
  return samples;
}

std::vector<CTensor> images_of_class(const harness::Dataset& ds, std::size_t cls) {
  std::vector<CTensor> out;
  for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
    if (ds.labels[i][0] == cls) out.push_back(ds.inputs[i]);
  }
  return out;
}

const harness::TrainResult& two_channel_model() {
  static const harness::TrainResult r = harness::train_toy(ToyTask::kTwoChannelSynthetic, {});
  return r;
}

const harness::TrainResult& digits_model() {
  static const harness::TrainResult r = harness::train_toy(ToyTask::kMiniDigits, {});
  return r;
}

TEST(Axioms, LinearModelIsExact) {
  Rng rng(401);
  const Model m = harness::linear_model(rng, 6, 3, Readout::kComplex);
  std::vector<CTensor> inputs, refs;
  for (int i = 0; i < 20; ++i) inputs.push_back(harness::random_ctensor(rng, {6}));
  refs.push_back(harness::random_ctensor(rng, {6}));
  inputs[3][2] = refs[0][2];
  inputs[7][0] = refs[0][0];
  const auto report = harness::check_axioms(m, inputs, refs);
  EXPECT_LE(report.local_accuracy_error, 1e-10);
  EXPECT_EQ(report.missing_features, 2u * 3u * 2u);
  EXPECT_EQ(report.missingness_error_fraction, 0.0);
  EXPECT_DOUBLE_EQ(report.relative_error,
                   report.local_accuracy_error / report.mean_abs_output);
}

TEST(Axioms, InputsEqualToReferencesGiveZeroError) {
  Rng rng(403);
  const Model m = harness::mlp_crelu_model(rng, 5, 7, 2);
  const std::vector<CTensor> inputs(1, harness::random_ctensor(rng, {5}));
  const auto report = harness::check_axioms(m, inputs, inputs);
  EXPECT_EQ(report.local_accuracy_error, 0.0);
  EXPECT_EQ(report.missing_features, 5u * 2u);
  EXPECT_EQ(report.missingness_error_fraction, 0.0);
  const auto map = explain_deepcshap(m, inputs[0], inputs[0], 1);
  EXPECT_EQ(map.phi0, predict(m, inputs[0])[1]);
}

TEST(Axioms, ConvMaxPoolModelRelativeError) {
  Rng rng(405);
  const Model m = harness::conv_crelu_maxpool_model(rng, {2, 6, 6}, 3, 4);
  std::vector<CTensor> inputs;
  for (int i = 0; i < 10; ++i) inputs.push_back(harness::random_ctensor(rng, {2, 6, 6}));
  const std::vector<CTensor> refs{CTensor(Shape{2, 6, 6})};
  const auto report = harness::check_axioms(m, inputs, refs);
  EXPECT_LE(report.relative_error, 1e-5);
  EXPECT_EQ(report.missingness_error_fraction, 0.0);
}

TEST(Axioms, RejectsEmptyInputs) {
  Rng rng(407);
  const Model m = harness::linear_model(rng, 3, 1, Readout::kReal);
  const std::vector<CTensor> none;
  const std::vector<CTensor> refs{CTensor(Shape{3})};
  EXPECT_THROW(harness::check_axioms(m, none, refs), ValidationError);
}

TEST(ChannelScore, AllOnCorrectChannelsIsOne) {
  RTensor scores(Shape{4, 2}, 0.0);
  scores.at({1, 0}) = 2.0;
  scores.at({1, 1}) = 0.5;
  bool degenerate = true;
  EXPECT_DOUBLE_EQ(harness::channel_fraction(scores, {4, 2}, {1}, &degenerate), 1.0);
  EXPECT_FALSE(degenerate);
}

TEST(ChannelScore, EqualContributionsGiveHalf) {
  const RTensor scores(Shape{4, 3}, 0.25);
  bool degenerate = true;
  EXPECT_DOUBLE_EQ(harness::channel_fraction(scores, {4, 3}, {0, 1}, &degenerate), 0.5);
}

TEST(ChannelScore, DegenerateSamplesAreSkipped) {
  Model m;
  m.input_shape = {4, 4, 4};
  m.layers = {Flatten{}, ComplexLinear{CTensor(Shape{2, 64}), CTensor(Shape{2})}};
  Rng rng(409);
  const std::vector<ChannelSample> samples{
      {harness::random_ctensor(rng, {4, 4, 4}), 0, {0, 1}},
      {harness::random_ctensor(rng, {4, 4, 4}), 1, {2, 3}}};
  const auto score = harness::channel_attribution_score(
      m, samples, Explainer{Method::kDeepCShap, Reduction::kRealPlusImag, {}});
  EXPECT_EQ(score.skipped, 2u);
  EXPECT_TRUE(score.scores.empty());
}

TEST(ChannelScore, TrainedTaskDeepCShapBeatsAbsGradient) {
  const auto samples =
      channel_samples(harness::make_dataset(ToyTask::kTwoChannelSynthetic, 50, 778));
  const Model& m = two_channel_model().model;
  const auto deep = harness::channel_attribution_score(
      m, samples, Explainer{Method::kDeepCShap, Reduction::kRealPlusImag, {}});
  const auto grad = harness::channel_attribution_score(
      m, samples, Explainer{Method::kGradient, Reduction::kAbs, {}});
  EXPECT_GT(deep.median, grad.median);
}

TEST(Masking, ZeroFractionChangesNothing) {
  Rng rng(411);
  const Model m = harness::mlp_crelu_model(rng, 6, 8, 3);
  std::vector<CTensor> images;
  for (int i = 0; i < 5; ++i) images.push_back(harness::random_ctensor(rng, {6}));
  const auto r = harness::masking_experiment(
      m, images, 0, 2, Explainer{Method::kDeepCShap, Reduction::kRealPlusImag, {}}, 0.0);
  for (double c : r.changes) EXPECT_EQ(c, 0.0);
}

TEST(Masking, RejectsLargeFractionsAndBadClasses) {
  Rng rng(413);
  const Model m = harness::mlp_crelu_model(rng, 6, 8, 3);
  const std::vector<CTensor> images{harness::random_ctensor(rng, {6})};
  const Explainer e{Method::kGradient, Reduction::kAbs, {}};
  EXPECT_THROW(harness::masking_experiment(m, images, 0, 1, e, 0.25), ValidationError);
  EXPECT_THROW(harness::masking_experiment(m, images, 1, 1, e), ValidationError);
  EXPECT_THROW(harness::masking_experiment(m, images, 0, 3, e), ValidationError);
}

TEST(Masking, TrainedDigitsDeepCShapBeatsRandomAndGrowsWithFraction) {
  const auto images =
      images_of_class(harness::make_dataset(ToyTask::kMiniDigits, 60, 556), 0);
  const Model& m = digits_model().model;
  const Explainer deep{Method::kDeepCShap, Reduction::kRealPlusImag, {}};
  const Explainer random{Method::kRandom, Reduction::kRealPlusImag, {}};
  const auto at20 = harness::masking_experiment(m, images, 0, 1, deep, 0.2);
  const auto at5 = harness::masking_experiment(m, images, 0, 1, deep, 0.05);
  const auto base = harness::masking_experiment(m, images, 0, 1, random, 0.2);
  EXPECT_GT(at20.median, base.median);
  EXPECT_GE(at20.median, at5.median);
}

TEST(Training, TwoChannelReachesNinetyPercent) {
  const auto& r = two_channel_model();
  EXPECT_LE(r.epoch_loss.size(), 200u);
  EXPECT_GE(r.train_accuracy, 0.9);
}

TEST(Training, ZeroLearningRateKeepsWeights) {
  TrainConfig c;
  c.epochs = 2;
  c.learning_rate = 0.0;
  c.train_size = 32;
  const auto r = harness::train_toy(ToyTask::kMiniDigits, c);
  EXPECT_EQ(io::serialize_model(r.model),
            io::serialize_model(harness::initial_model(ToyTask::kMiniDigits, c)));
}

TEST(Training, SameSeedSameWeights) {
  TrainConfig c;
  c.epochs = 3;
  c.train_size = 64;
  const auto a = harness::train_toy(ToyTask::kTwoChannelSynthetic, c);
  const auto b = harness::train_toy(ToyTask::kTwoChannelSynthetic, c);
  EXPECT_EQ(io::serialize_model(a.model), io::serialize_model(b.model));
  c.seed = 2;
  const auto other = harness::train_toy(ToyTask::kTwoChannelSynthetic, c);
  EXPECT_NE(io::serialize_model(a.model), io::serialize_model(other.model));
}

TEST(Training, DivergenceReportsConfig) {
  TrainConfig c;
  c.epochs = 50;
  c.learning_rate = 1e6;
  c.train_size = 32;
  try {
    harness::train_toy(ToyTask::kTwoChannelSynthetic, c);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("seed=1"), std::string::npos);
  }
}

TEST(Datasets, TwoChannelLabelsAreDistinctPairs) {
  const auto ds = harness::make_dataset(ToyTask::kTwoChannelSynthetic, 40, 9);
  for (const auto& l : ds.labels) {
    ASSERT_EQ(l.size(), 2u);
    EXPECT_NE(l[0], l[1]);
    EXPECT_LT(l[1], harness::kTwoChannelClasses);
  }
  EXPECT_EQ(ds.inputs[0].shape(), (Shape{4, 4, 4}));
}

TEST(Datasets, SameSeedSameData) {
  const auto a = harness::make_dataset(ToyTask::kMiniDigits, 8, 5);
  const auto b = harness::make_dataset(ToyTask::kMiniDigits, 8, 5);
  EXPECT_EQ(a.inputs, b.inputs);
}

TEST(Names, MethodAndReductionRoundTrip) {
  for (std::string_view n : kMethodNames) {
    const auto m = parse_method(n);
    ASSERT_TRUE(m.has_value()) << n;
    EXPECT_EQ(method_name(*m), n);
  }
  EXPECT_FALSE(parse_method("bogus").has_value());
  EXPECT_EQ(parse_reduction("abs"), Reduction::kAbs);
  EXPECT_EQ(parse_reduction("ri"), Reduction::kRealPlusImag);
  EXPECT_FALSE(parse_reduction("sum").has_value());
}

TEST(Checks, OracleSuitePassesOnSmallRun) {
  for (const auto& r : harness::run_oracle_suite(40, 3)) {
    EXPECT_TRUE(r.passed()) << r.name << " max error " << r.max_error;
    EXPECT_GT(r.cases, 0u) << r.name;
  }
}

TEST(Checks, RecordCountsFailures) {
  harness::CheckResult r{"x", 0, 0.0, 1e-3, 0, ""};
  r.record(1e-4, 1e-3);
  r.record(2e-3, 1e-3);
  r.record(std::nan(""), 1e-3);
  EXPECT_EQ(r.cases, 3u);
  EXPECT_EQ(r.failures, 2u);
  EXPECT_DOUBLE_EQ(r.max_error, 2e-3);
  EXPECT_FALSE(r.passed());
}

}  // namespace
}  // namespace cshap
