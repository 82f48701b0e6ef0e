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

using testing::near;
using testing::single_layer_model;
using testing::vec;

oracle::TensorFunction real_output(const Model& m, std::size_t idx) {
  return [&m, idx](const CTensor& x) { return CScalar(forward(m, x).output()[idx].real()); };
}

TEST(Backward, RealPartIsOneHalf) {
  const Model m = single_layer_model(RealPart{}, {3});
  const CTensor x = vec({{1, 2}, {-3, 0.5}, {0, -1}});
  const WirtingerPair p = backward(m, forward(m, x), 1);
  EXPECT_TRUE(near(p.d_zbar, vec({0.0, 0.5, 0.0}), 0.0));
  EXPECT_TRUE(near(p.d_z, vec({0.0, 0.5, 0.0}), 0.0));
}

TEST(Backward, SquaredMagnitude) {
  const Model m = single_layer_model(SquaredMagnitude{}, {1});
  const WirtingerPair p = backward(m, forward(m, vec({{3, 4}})), 0);
  EXPECT_EQ(p.d_zbar[0], CScalar(3, 4));
  EXPECT_EQ(p.d_z[0], CScalar(3, -4));
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNets) {
  harness::Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = harness::random_deep_model(rng, 5, 3, 6, 2);
    const CTensor x = harness::random_ctensor(rng, {5});
    for (std::size_t idx = 0; idx < 2; ++idx) {
      const WirtingerPair got = backward(m, forward(m, x), idx);
      const WirtingerPair fd = oracle::finite_diff_wirtinger(real_output(m, idx), x);
      EXPECT_LE(testing::relative_error(got.d_zbar, fd.d_zbar), 1e-4) << "trial " << trial;
      EXPECT_LE(testing::relative_error(got.d_z, fd.d_z), 1e-4) << "trial " << trial;
    }
  }
}

TEST(Backward, MatchesFiniteDifferencesThroughConvAndPool) {
  harness::Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = harness::conv_crelu_maxpool_model(rng, {2, 4, 4}, 3, 3);
    const CTensor x = harness::random_ctensor(rng, {2, 4, 4});
    const WirtingerPair got = backward(m, forward(m, x), 2);
    const WirtingerPair fd = oracle::finite_diff_wirtinger(real_output(m, 2), x);
    EXPECT_LE(testing::relative_error(got.d_zbar, fd.d_zbar), 1e-4);
  }
}

TEST(Backward, ImaginaryPartOfComplexReadout) {
  harness::Rng rng(107);
  const Model m = harness::linear_model(rng, 4, 2, Readout::kComplex);
  const CTensor x = harness::random_ctensor(rng, {4});
  const WirtingerPair got = backward(m, forward(m, x), 1, Guidance::kNone, OutputPart::kImag);
  const WirtingerPair fd = oracle::finite_diff_wirtinger(
      [&](const CTensor& z) { return CScalar(forward(m, z).output()[1].imag()); }, x);
  EXPECT_LE(testing::relative_error(got.d_zbar, fd.d_zbar), 1e-6);
  EXPECT_THROW(backward(m, forward(m, x), 1, Guidance::kNone, OutputPart::kComplex),
               ValidationError);
}

TEST(Backward, ConjugateIdentityAtEveryLayer) {
  harness::Rng rng(109);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = harness::random_deep_model(rng, 4, 4, 5, 3);
    const ForwardTrace t = forward(m, harness::random_ctensor(rng, {4}));
    const BackwardState s = backward_all(m, t, output_seed(m, t, 0, OutputPart::kReal));
    for (const auto& pair : s.pairs) EXPECT_TRUE(near(pair.d_zbar, conj(pair.d_z), 1e-12));
  }
}

TEST(Backward, AllLinearModelHasConstantGradient) {
  harness::Rng rng(113);
  Model m = harness::linear_model(rng, 5, 4);
  m.layers.push_back(harness::random_linear(rng, 4, 2));
  const WirtingerPair a = backward(m, forward(m, harness::random_ctensor(rng, {5})), 1);
  const WirtingerPair b = backward(m, forward(m, harness::random_ctensor(rng, {5})), 1);
  EXPECT_TRUE(near(a.d_zbar, b.d_zbar, 1e-12));
}

TEST(Backward, LinearGradientIsHalfConjugateWeightRow) {
  harness::Rng rng(127);
  const Model m = harness::linear_model(rng, 3, 2);
  const auto& w = std::get<ComplexLinear>(m.layers[0]).weight;
  const WirtingerPair p = backward(m, forward(m, harness::random_ctensor(rng, {3})), 1);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_TRUE(near(p.d_zbar[j], 0.5 * std::conj(w.at({1, j})), 1e-15));
  }
}

TEST(Backward, MaxPoolRoutesToArgmax) {
  const Model m = single_layer_model(MagnitudeMaxPool{2, 2, 2}, {1, 2, 2});
  const CTensor x(Shape{1, 2, 2}, {CScalar{1, 0}, CScalar{0, 2}, CScalar{-2, 0}, CScalar{0.5, 0}});
  const WirtingerPair p = backward(m, forward(m, x), 0);
  EXPECT_TRUE(near(p.d_zbar, CTensor(Shape{1, 2, 2}, {0.0, 0.5, 0.0, 0.0}), 0.0));
}

TEST(Backward, GuidedNoneIsPlain) {
  harness::Rng rng(131);
  const Model m = harness::random_deep_model(rng, 4, 3, 5, 2);
  const ForwardTrace t = forward(m, harness::random_ctensor(rng, {4}));
  EXPECT_EQ(backward(m, t, 0, Guidance::kNone).d_zbar, backward(m, t, 0).d_zbar);
}

TEST(Backward, GuidedZFilterKeepsOrZeroes) {
  harness::Rng rng(137);
  const CTensor g = harness::random_ctensor(rng, {200});
  const CTensor z = detail::guide(g, Guidance::kZ);
  const CTensor c = detail::guide(g, Guidance::kC);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_TRUE(z[i] == g[i] || z[i] == CScalar{});
    EXPECT_LE(std::abs(z[i]), std::abs(g[i]));
    EXPECT_GE(c[i].real(), 0.0);
    EXPECT_GE(c[i].imag(), 0.0);
  }
}

TEST(Backward, Errors) {
  harness::Rng rng(139);
  const Model m = harness::mlp_crelu_model(rng, 3, 4, 2);
  const ForwardTrace t = forward(m, harness::random_ctensor(rng, {3}));
  EXPECT_THROW(backward(m, t, 2), ValidationError);
  const Model other = harness::mlp_crelu_model(rng, 3, 5, 2);
  EXPECT_THROW(backward(other, t, 0), ValidationError);
  ForwardTrace truncated = t;
  truncated.activations.pop_back();
  EXPECT_THROW(backward(m, truncated, 0), ValidationError);
}

TEST(Backward, ParameterCogradientsMatchFiniteDifferences) {
  harness::Rng rng(149);
  const Model m = harness::conv_crelu_maxpool_model(rng, {1, 4, 4}, 2, 2);
  const CTensor x = harness::random_ctensor(rng, {1, 4, 4});
  const ForwardTrace t = forward(m, x);
  const BackwardState s = backward_all(m, t, output_seed(m, t, 1, OutputPart::kReal));
  const auto grads = parameter_cogradients(m, t, s);
  ASSERT_TRUE(grads[0].has_value());
  ASSERT_TRUE(grads[4].has_value());
  for (std::size_t k : {0u, 4u}) {
    const bool conv = k == 0;
    const CTensor& theta = conv ? std::get<ComplexConv2d>(m.layers[k]).kernel
                                : std::get<ComplexLinear>(m.layers[k]).weight;
    const WirtingerPair fd = oracle::finite_diff_wirtinger(
        [&](const CTensor& p) {
          Model q = m;
          if (conv) {
            std::get<ComplexConv2d>(q.layers[k]).kernel = p;
          } else {
            std::get<ComplexLinear>(q.layers[k]).weight = p;
          }
          return CScalar(forward(q, x).output()[1].real());
        },
        theta);
    EXPECT_LE(testing::relative_error(grads[k]->weight, fd.d_zbar), 1e-6) << "layer " << k;
  }
}

TEST(ComplexOutputDerivatives, HolomorphicLinearMap) {
  harness::Rng rng(161);
  const Model m = harness::linear_model(rng, 4, 3);
  const CTensor x = harness::random_ctensor(rng, {4});
  const WirtingerPair d = complex_output_derivatives(m, forward(m, x), 2);
  const auto& w = std::get<ComplexLinear>(m.layers[0]).weight;
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_TRUE(near(d.d_z[j], w[2 * 4 + j], 1e-15));
    EXPECT_EQ(d.d_zbar[j], CScalar{});
  }
}

TEST(ComplexOutputDerivatives, MatchFiniteDifferences) {
  harness::Rng rng(163);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = trial % 2 ? harness::random_deep_model(rng, 5, 3, 6, 2)
                              : harness::conv_crelu_maxpool_model(rng, {2, 4, 4}, 2, 2);
    const CTensor x = harness::random_ctensor(rng, m.input_shape);
    const WirtingerPair got = complex_output_derivatives(m, forward(m, x), 1);
    const WirtingerPair fd = oracle::finite_diff_wirtinger(
        [&](const CTensor& z) { return forward(m, z).output()[1]; }, x);
    EXPECT_LE(testing::relative_error(got.d_z, fd.d_z), 1e-6) << "trial " << trial;
    EXPECT_LE(testing::relative_error(got.d_zbar, fd.d_zbar), 1e-6) << "trial " << trial;
  }
}

TEST(ComplexOutputDerivatives, RealPartAgreesWithBackward) {
  harness::Rng rng(165);
  const Model m = harness::mlp_crelu_model(rng, 5, 7, 2);
  const CTensor x = harness::random_ctensor(rng, {5});
  const ForwardTrace trace = forward(m, x);
  const WirtingerPair u = complex_output_derivatives(m, trace, 0);
  const WirtingerPair g = backward(m, trace, 0);
  EXPECT_TRUE(near(g.d_z, 0.5 * (u.d_z + conj(u.d_zbar)), 1e-14));
  EXPECT_TRUE(near(g.d_zbar, 0.5 * (u.d_zbar + conj(u.d_z)), 1e-14));
}

}  // namespace
}  // namespace cshap
