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

ComplexLinear scalar_linear(CScalar w) {
  return {CTensor(Shape{1, 1}, w), CTensor(Shape{1})};
}

std::vector<DeepCShapDetails> details_of(const Model& m, const CTensor& x, const CTensor& ref,
                                         std::size_t idx, OutputPart part = OutputPart::kReal) {
  std::vector<DeepCShapDetails> d;
  const std::size_t indices[] = {idx};
  explain_deepcshap_single(m, x, ref, indices, {part, kDefaultEnumerationCap}, &d);
  return d;
}

TEST(LinearPartials, ScalarExample) {
  const ComplexLinear l = scalar_linear({2, 1});
  const CTensor x = vec({{1, 1}});
  const CTensor ref(Shape{1});
  const PartialContrib pc = layer_partials_linear(l, x, ref);
  EXPECT_TRUE(near(pc.phi_r[0], CScalar(2, 1), 1e-15));
  EXPECT_TRUE(near(pc.phi_i[0], CScalar(-1, 2), 1e-15));
  EXPECT_TRUE(near(pc.total()[0], CScalar(1, 3), 1e-15));
  const MultiplierState m = partial_multipliers(pc, x, ref);
  EXPECT_TRUE(near(m.m_x[0], CScalar(2, 1), 1e-15));
  EXPECT_TRUE(near(m.m_xbar[0], CScalar(0, 0), 1e-15));
}

TEST(LinearPartials, RealDifferenceHasNoImaginaryShare) {
  harness::Rng rng(501);
  const ComplexLinear l = harness::random_linear(rng, 3, 2);
  const CTensor ref = harness::random_ctensor(rng, {3});
  CTensor x = ref;
  for (CScalar& v : x.data()) v += 0.7;
  const PartialContrib pc = layer_partials_linear(l, x, ref);
  for (const CScalar& v : pc.phi_i.data()) EXPECT_EQ(v, CScalar{});
}

TEST(LinearPartials, RowsMatchScalarCase) {
  harness::Rng rng(503);
  const ComplexLinear l = harness::random_linear(rng, 4, 3);
  const CTensor x = harness::random_ctensor(rng, {4});
  const CTensor ref = harness::random_ctensor(rng, {4});
  const PartialContrib pc = layer_partials_linear(l, x, ref);
  ASSERT_EQ(pc.phi_r.shape(), (Shape{3, 4}));
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t j = 0; j < 4; ++j) {
      const PartialContrib s =
          layer_partials_linear(scalar_linear(l.weight.at({o, j})), vec({x[j]}), vec({ref[j]}));
      EXPECT_EQ(pc.phi_r.at({o, j}), s.phi_r[0]);
      EXPECT_EQ(pc.phi_i.at({o, j}), s.phi_i[0]);
    }
  }
}

TEST(PointwisePartials, CReLUExample) {
  const PartialContrib pc = layer_partials_pointwise(CReLU{}, vec({{-1, 2}}), CTensor(Shape{1}));
  EXPECT_EQ(pc.phi_r[0], CScalar(0, 0));
  EXPECT_EQ(pc.phi_i[0], CScalar(0, 2));
}

TEST(PointwisePartials, EqualInputAndReference) {
  harness::Rng rng(505);
  const CTensor x = harness::random_ctensor(rng, {5});
  for (const Layer& g : {Layer{CReLU{}}, Layer{ZReLU{}}, Layer{Magnitude{}}, Layer{RealPart{}}}) {
    const PartialContrib pc = layer_partials_pointwise(g, x, x);
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_EQ(pc.phi_r[k], CScalar{});
      EXPECT_EQ(pc.phi_i[k], CScalar{});
    }
  }
}

TEST(PointwisePartials, IdentityThroughUnitLinear) {
  const CTensor x = vec({{0.3, -2}});
  const CTensor ref = vec({{1, 0.5}});
  const PartialContrib pc = layer_partials_linear(scalar_linear(1.0), x, ref);
  EXPECT_EQ(pc.phi_r[0], CScalar(-0.7, 0));
  EXPECT_EQ(pc.phi_i[0], CScalar(0, -2.5));
}

TEST(PointwisePartials, MatchPartialOracle) {
  harness::Rng rng(507);
  for (const Layer& g : {Layer{CReLU{}}, Layer{ZReLU{}}, Layer{Magnitude{}}, Layer{RealPart{}},
                         Layer{SquaredMagnitude{}}}) {
    for (int trial = 0; trial < 50; ++trial) {
      const CTensor x = harness::random_ctensor(rng, {1});
      const CTensor ref = harness::random_ctensor(rng, {1});
      const PartialContrib pc = layer_partials_pointwise(g, x, ref);
      const auto want = oracle::exact_partial_shap(
          [&](const CTensor& z) { return apply_pointwise(g, z[0]); }, x, ref, 0);
      EXPECT_TRUE(near(pc.phi_r[0], want.phi_r, 1e-14));
      EXPECT_TRUE(near(pc.phi_i[0], want.phi_i, 1e-14));
    }
  }
}

TEST(PartialMultipliers, FallbackForDegenerateImaginaryDifference) {
  harness::Rng rng(509);
  for (int trial = 0; trial < 20; ++trial) {
    const CTensor y = harness::random_ctensor(rng, {1});
    const CTensor ref = vec({{harness::random_cscalar(rng).real(), y[0].imag()}});
    const Layer g = Magnitude{};
    const AxisDerivatives d = pointwise_axis_derivatives(g, y);
    const MultiplierState m =
        partial_multipliers(layer_partials_pointwise(g, y, ref), y, ref, &d);
    EXPECT_EQ(m.fallbacks, 1u);
    // A slightly displaced reference gives a regular multiplier close to it.
    const CTensor ref2 = vec({ref[0] - CScalar{0.0, 1e-5}});
    const MultiplierState m2 = partial_multipliers(layer_partials_pointwise(g, y, ref2), y, ref2);
    EXPECT_TRUE(near(m.m_x[0], m2.m_x[0], 1e-4));
    EXPECT_TRUE(near(m.m_xbar[0], m2.m_xbar[0], 1e-4));
  }
  EXPECT_THROW(partial_multipliers(layer_partials_pointwise(Magnitude{}, vec({1.0}), vec({1.0})),
                                   vec({1.0}), vec({1.0})),
               ValidationError);
}

TEST(ChainStep, StackedLinearLayersMultiply) {
  harness::Rng rng(511);
  const ComplexLinear a = harness::random_linear(rng, 3, 4);
  const ComplexLinear b = harness::random_linear(rng, 4, 1);
  const MultiplierState mb{b.weight.reshaped({4}), CTensor(Shape{4}), 0};
  const MultiplierState ma{a.weight, CTensor(Shape{4, 3}), 0};
  const MultiplierState h = chain_step(mb, ma);
  for (std::size_t k = 0; k < 3; ++k) {
    CScalar want{};
    for (std::size_t j = 0; j < 4; ++j) want += b.weight.at({0, j}) * a.weight.at({j, k});
    EXPECT_TRUE(near(h.m_x[k], want, 1e-14));
    EXPECT_EQ(h.m_xbar[k], CScalar{});
  }
}

TEST(ChainStep, IdentityLeavesMultipliersUnchanged) {
  harness::Rng rng(513);
  const MultiplierState up{harness::random_ctensor(rng, {3}), harness::random_ctensor(rng, {3}), 0};
  CTensor eye(Shape{3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at({i, i}) = 1.0;
  const MultiplierState h = chain_step(up, {eye, CTensor(Shape{3, 3}), 0});
  EXPECT_TRUE(near(h.m_x, up.m_x, 0.0));
  EXPECT_TRUE(near(h.m_xbar, up.m_xbar, 0.0));
  EXPECT_THROW(chain_step(up, {CTensor(Shape{2, 3}), CTensor(Shape{2, 3}), 0}), ShapeError);
  EXPECT_THROW(chain_step(up, {CTensor(Shape{3}), CTensor(Shape{3}), 0}), ShapeError);
}

TEST(ChainStep, ConservationOnLinearThenCReLU) {
  harness::Rng rng(515);
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexLinear l = harness::random_linear(rng, 2, 3);
    const CTensor y = harness::random_ctensor(rng, {2});
    const CTensor ref = harness::random_ctensor(rng, {2});
    const CTensor u = linear_forward(l, y);
    const CTensor ur = linear_forward(l, ref);
    // h(y) = sum_j CReLU(l(y))_j.
    const AxisDerivatives d = pointwise_axis_derivatives(CReLU{}, u);
    const MultiplierState mg = partial_multipliers(layer_partials_pointwise(CReLU{}, u, ur), u, ur, &d);
    CTensor mf_dense(Shape{3, 3}), mbf_dense(Shape{3, 3});
    for (std::size_t i = 0; i < 3; ++i) {
      mf_dense.at({i, i}) = mg.m_x[i];
      mbf_dense.at({i, i}) = mg.m_xbar[i];
    }
    const MultiplierState seed{CTensor(Shape{3}, CScalar{1.0}), CTensor(Shape{3}), 0};
    const MultiplierState after_relu = chain_step(seed, {mf_dense, mbf_dense, 0});
    const MultiplierState at_input = chain_step(after_relu, {l.weight, CTensor(Shape{3, 2}), 0});
    const Reconstruction rec = reconstruct_contributions(at_input, y, ref);
    const CScalar h_y = sum(layer_forward(CReLU{}, u));
    const CScalar h_r = sum(layer_forward(CReLU{}, ur));
    EXPECT_TRUE(near(sum(rec.phi), h_y - h_r, 1e-12));
  }
}

// Dense [J, K] multiplier matrices of one layer, built without the
// structured fast paths.
MultiplierState dense_layer_multipliers(const Layer& layer, const CTensor& y, const CTensor& r) {
  const std::size_t in = y.size();
  if (const auto* lin = std::get_if<ComplexLinear>(&layer)) {
    const AxisDerivatives d = linear_axis_derivatives(*lin);
    return partial_multipliers(layer_partials_linear(*lin, y, r), y, r, &d);
  }
  const CTensor out = layer_forward(layer, y);
  MultiplierState m{CTensor(Shape{out.size(), in}), CTensor(Shape{out.size(), in}), 0};
  if (std::holds_alternative<Flatten>(layer)) {
    for (std::size_t i = 0; i < in; ++i) m.m_x.at({i, i}) = 1.0;
    return m;
  }
  if (const auto* pool = std::get_if<MagnitudeMaxPool>(&layer)) {
    const auto windows = pool_windows(*pool, y.shape());
    for (std::size_t w = 0; w < windows.size(); ++w) {
      std::vector<CScalar> xs, rs;
      for (std::size_t i : windows[w]) {
        xs.push_back(y[i]);
        rs.push_back(r[i]);
      }
      const auto p = maxpool_partials(xs, rs);
      const std::size_t n = xs.size();
      AxisDerivatives d{CTensor(Shape{n}), CTensor(Shape{n})};
      d.d_re[cmaxpool_argmax(xs).position] = 1.0;
      d.d_im[cmaxpool_argmax(xs).position] = kI;
      const MultiplierState local = partial_multipliers(
          {CTensor(Shape{n}, p.phi_r), CTensor(Shape{n}, p.phi_i)}, CTensor(Shape{n}, xs),
          CTensor(Shape{n}, rs), &d);
      for (std::size_t e = 0; e < n; ++e) {
        m.m_x.at({w, windows[w][e]}) = local.m_x[e];
        m.m_xbar.at({w, windows[w][e]}) = local.m_xbar[e];
      }
    }
    return m;
  }
  const AxisDerivatives d = pointwise_axis_derivatives(layer, y);
  const MultiplierState local = partial_multipliers(layer_partials_pointwise(layer, y, r), y, r, &d);
  for (std::size_t i = 0; i < in; ++i) {
    m.m_x.at({i, i}) = local.m_x[i];
    m.m_xbar.at({i, i}) = local.m_xbar[i];
  }
  return m;
}

TEST(ChainStep, StructuredPipelineMatchesDenseChain) {
  harness::Rng rng(517);
  for (int trial = 0; trial < 10; ++trial) {
    Model m = harness::conv_crelu_maxpool_model(rng, {2, 4, 4}, 2, 3);
    m.layers.insert(m.layers.begin() + 2, ZReLU{});
    const CTensor x = harness::random_ctensor(rng, {2, 4, 4});
    const CTensor ref = harness::random_ctensor(rng, {2, 4, 4}, 0.2);
    const ForwardTrace tx = forward(m, x);
    const ForwardTrace tr = forward(m, ref);
    const auto details = details_of(m, x, ref, 1);
    MultiplierState state = details.front().states.back();
    for (std::size_t k = m.layers.size(); k-- > 1;) {
      state = chain_step(state, dense_layer_multipliers(m.layers[k], tx.activations[k],
                                                        tr.activations[k]));
      EXPECT_TRUE(near(state.m_x.reshaped({state.m_x.size()}),
                       details.front().states[k].m_x.reshaped({state.m_x.size()}), 1e-12));
      EXPECT_TRUE(near(state.m_xbar.reshaped({state.m_x.size()}),
                       details.front().states[k].m_xbar.reshaped({state.m_x.size()}), 1e-12));
    }
  }
}

TEST(Reconstruct, LinearModelEndToEnd) {
  harness::Rng rng(519);
  const Model m = harness::linear_model(rng, 4, 2, Readout::kComplex);
  const auto& w = std::get<ComplexLinear>(m.layers[0]).weight;
  const CTensor x = harness::random_ctensor(rng, {4});
  const CTensor ref = harness::random_ctensor(rng, {4});
  const ContributionMap c = explain_deepcshap(m, x, ref, 1, {OutputPart::kComplex});
  const ContributionMap r = explain_deepcshap(m, x, ref, 1);
  for (std::size_t j = 0; j < 4; ++j) {
    const CScalar want = w.at({1, j}) * (x[j] - ref[j]);
    EXPECT_TRUE(near(c.phi[j], want, 1e-14));
    EXPECT_TRUE(near(r.phi[j], want.real(), 1e-14));
  }
}

TEST(Reconstruct, ReferenceEqualsInput) {
  harness::Rng rng(521);
  const Model m = harness::random_deep_model(rng, 5, 3, 6, 2);
  const CTensor x = harness::random_ctensor(rng, {5});
  const ContributionMap c = explain_deepcshap(m, x, x, 1);
  for (const CScalar& v : c.phi.data()) EXPECT_EQ(v, CScalar{});
  EXPECT_EQ(c.phi0, CScalar(predict(m, x)[1]));
  EXPECT_THROW(reconstruct_contributions({CTensor(Shape{2}), CTensor(Shape{2}), 0}, x, x),
               ShapeError);
}

TEST(DeepCShap, SingleLinearLayerIsExactShapley) {
  harness::Rng rng(523);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = harness::linear_model(rng, 5, 3);
    const CTensor x = harness::random_ctensor(rng, {5});
    const CTensor ref = harness::random_ctensor(rng, {5});
    const auto want = oracle::exact_shap([&](const CTensor& z) { return predict(m, z)[2]; }, x, ref);
    const ContributionMap c = explain_deepcshap(m, x, ref, 2);
    EXPECT_TRUE(near(c.phi, want.phi, 1e-12));
    EXPECT_TRUE(near(c.phi0, want.phi0, 1e-12));
  }
}

TEST(DeepCShap, MissingFeaturesGetExactlyZero) {
  harness::Rng rng(525);
  for (int trial = 0; trial < 30; ++trial) {
    const Model m = harness::conv_crelu_maxpool_model(rng, {1, 4, 4}, 2, 3);
    const CTensor ref = harness::random_ctensor(rng, {1, 4, 4}, 0.3);
    CTensor x = harness::random_ctensor(rng, {1, 4, 4});
    for (std::size_t j = 0; j < x.size(); j += 3) x[j] = ref[j];
    const ContributionMap c = explain_deepcshap(m, x, ref, 0);
    for (std::size_t j = 0; j < x.size(); j += 3) EXPECT_EQ(c.phi[j], CScalar{});
  }
}

TEST(DeepCShap, ConservationOnDeepModels) {
  harness::Rng rng(527);
  for (int trial = 0; trial < 30; ++trial) {
    const Model m = harness::random_deep_model(rng, 6, 4, 8, 3);
    const CTensor x = harness::random_ctensor(rng, {6});
    const CTensor ref = harness::random_ctensor(rng, {6}, 0.5);
    for (std::size_t idx = 0; idx < 3; ++idx) {
      const ContributionMap c = explain_deepcshap(m, x, ref, idx);
      const double fx = predict(m, x)[idx].real();
      EXPECT_LE(std::abs(sum(c.phi) + c.phi0 - fx) / std::max(1.0, std::abs(fx)), 1e-7);
    }
  }
}

TEST(DeepCShap, RealOutputMultipliersAreConjugatePairs) {
  harness::Rng rng(529);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = harness::conv_crelu_maxpool_model(rng, {2, 4, 4}, 2, 2);
    const auto d = details_of(m, harness::random_ctensor(rng, {2, 4, 4}),
                              harness::random_ctensor(rng, {2, 4, 4}, 0.3), 0);
    for (const MultiplierState& s : d.front().states) {
      EXPECT_TRUE(near(s.m_xbar, conj(s.m_x), 1e-12));
    }
  }
}

TEST(DeepCShap, LinearModelMultipliersEqualWirtingerDerivatives) {
  harness::Rng rng(531);
  Model m = harness::linear_model(rng, 4, 5);
  m.layers.push_back(harness::random_linear(rng, 5, 2));
  const CTensor x = harness::random_ctensor(rng, {4});
  const auto d = details_of(m, x, harness::random_ctensor(rng, {4}), 1);
  const WirtingerPair g = backward(m, forward(m, x), 1);
  EXPECT_TRUE(near(d.front().states.front().m_x, g.d_z, 1e-12));
  EXPECT_TRUE(near(d.front().states.front().m_xbar, g.d_zbar, 1e-12));
}

TEST(DeepCShap, ComplexOutputSplitsIntoRealAndImaginaryParts) {
  harness::Rng rng(533);
  for (int trial = 0; trial < 10; ++trial) {
    Model m = harness::mlp_crelu_model(rng, 4, 6, 2);
    m.readout = Readout::kComplex;
    const CTensor x = harness::random_ctensor(rng, {4});
    const CTensor ref = harness::random_ctensor(rng, {4});
    const ContributionMap re = explain_deepcshap(m, x, ref, 1, {OutputPart::kReal});
    const ContributionMap im = explain_deepcshap(m, x, ref, 1, {OutputPart::kImag});
    const ContributionMap full = explain_deepcshap(m, x, ref, 1, {OutputPart::kComplex});
    EXPECT_TRUE(near(re.phi + kI * im.phi, full.phi, 1e-12));
    EXPECT_TRUE(near(sum(full.phi) + full.phi0, predict(m, x)[1], 1e-10));
  }
  Model real_model = harness::mlp_crelu_model(rng, 4, 6, 2);
  EXPECT_THROW(explain_deepcshap(real_model, CTensor(Shape{4}), CTensor(Shape{4}), 0,
                                 {OutputPart::kImag}),
               ValidationError);
}

TEST(DeepCShap, SmallNetAgainstExactShapley) {
  harness::Rng rng(535);
  double deviation = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = harness::mlp_crelu_model(rng, 6, 4, 1);
    const CTensor x = harness::random_ctensor(rng, {6});
    const CTensor ref = harness::random_ctensor(rng, {6}, 0.5);
    const ContributionMap c = explain_deepcshap(m, x, ref, 0);
    const auto exact = oracle::exact_shap([&](const CTensor& z) { return predict(m, z)[0]; }, x, ref);
    EXPECT_TRUE(near(sum(c.phi), sum(exact.phi), 1e-10));
    for (std::size_t j = 0; j < 6; ++j) deviation += std::abs(c.phi[j] - exact.phi[j]);
  }
  RecordProperty("mean_abs_deviation", std::to_string(deviation / 120.0));
  EXPECT_TRUE(std::isfinite(deviation));
}

TEST(DeepCShap, MultipleReferencesAreAveraged) {
  harness::Rng rng(537);
  const Model m = harness::mlp_crelu_model(rng, 3, 5, 2);
  const CTensor x = harness::random_ctensor(rng, {3});
  const std::vector<CTensor> refs{harness::random_ctensor(rng, {3}), harness::random_ctensor(rng, {3}),
                                  harness::random_ctensor(rng, {3})};
  const ContributionMap avg = explain_deepcshap(m, x, refs, 0);
  CTensor want(Shape{3});
  CScalar phi0{};
  for (const CTensor& r : refs) {
    const ContributionMap c = explain_deepcshap(m, x, r, 0);
    want = want + (1.0 / 3.0) * c.phi;
    phi0 += c.phi0 / 3.0;
  }
  EXPECT_TRUE(near(avg.phi, want, 1e-14));
  EXPECT_TRUE(near(avg.phi0, phi0, 1e-14));
  EXPECT_THROW(explain_deepcshap(m, x, std::span<const CTensor>(), 0), ValidationError);
}

TEST(DeepCShap, PoolWindowBeyondCapIsUnsupported) {
  harness::Rng rng(539);
  Model m;
  m.input_shape = {1, 4, 4};
  m.layers = {MagnitudeMaxPool{4, 4, 4}, Flatten{}, harness::random_linear(rng, 1, 1)};
  const CTensor x = harness::random_ctensor(rng, {1, 4, 4});
  EXPECT_THROW(explain_deepcshap(m, x, CTensor(x.shape()), 0), UnsupportedLayerError);
  EXPECT_NO_THROW(explain_deepcshap(m, x, CTensor(x.shape()), 0, {OutputPart::kReal, 16}));
}

}  // namespace
}  // namespace cshap
