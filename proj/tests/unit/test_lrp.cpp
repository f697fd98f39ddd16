#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rlens/fixtures.hpp"
#include "rlens/lrp.hpp"
#include "rlens/reference_models.hpp"

using namespace rlens;

namespace {

ModelGraph single_dense(std::vector<double> w) {
  const std::size_t n = w.size();
  ModelGraph m;
  m.name = "one";
  m.representation = Representation::features;
  m.input_shape = {n};
  m.class_count = 1;
  m.layers = {LayerSpec::dense(n, 1)};
  m.layers[0].weight = Tensor({1, n}, std::move(w));
  m.layers[0].bias = Tensor({1});
  return m;
}

ModelGraph random_mlp(std::uint64_t seed, bool bias) {
  ModelGraph m;
  m.name = "mlp";
  m.representation = Representation::features;
  m.input_shape = {8};
  m.class_count = 4;
  m.layers = {LayerSpec::dense(8, 12), LayerSpec::relu(), LayerSpec::dense(12, 6), LayerSpec::relu(),
              LayerSpec::dense(6, 4)};
  initialize_weights(m, seed, bias);
  return m;
}

Tensor random_input(Rng& rng, const Shape& s) {
  Tensor t(s);
  for (double& v : t.data) v = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("single dense neuron splits relevance by contribution") {
  const auto m = single_dense({2, 3});
  const auto trace = forward(m, Tensor({2}, {1, 1}));
  const auto ex = lrp_backward(m, trace, 0, LrpRule::epsilon(1e-12));
  CHECK(ex.input_relevance.data[0] == doctest::Approx(2.0));
  CHECK(ex.input_relevance.data[1] == doctest::Approx(3.0));
}

TEST_CASE("z+ keeps only the positive contribution") {
  const auto m = single_dense({2, -3});
  const auto trace = forward(m, Tensor({2}, {1, 1}));
  const auto ex = lrp_backward(m, trace, 0, LrpRule::zplus());
  const double y = trace.logits().data[0];
  CHECK(ex.input_relevance.data[0] == doctest::Approx(y));
  CHECK(ex.input_relevance.data[1] == 0.0);
}

TEST_CASE("conservation at every layer of bias-free networks") {
  Rng rng(31);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = random_mlp(100 + s, false);
    const auto trace = forward(m, random_input(rng, {8}));
    for (std::size_t c = 0; c < 4; ++c) {
      const auto ex = lrp_backward(m, trace, c, LrpRule::epsilon(1e-9));
      const double logit = trace.logits().data[c];
      for (double t : ex.layer_totals) CHECK(std::abs(t - logit) <= 1e-4 * std::abs(logit) + 1e-12);
    }
  }
}

TEST_CASE("biases absorb relevance and the leak is reported") {
  Rng rng(32);
  const auto m = random_mlp(7, true);
  const auto trace = forward(m, random_input(rng, {8}));
  const auto ex = lrp_backward(m, trace, 0, LrpRule::epsilon());
  CHECK(ex.absorbed == doctest::Approx(trace.logits().data[0] - ex.layer_totals.front()));
  CHECK(std::abs(ex.absorbed) > 1e-6);
}

TEST_CASE("proportionality within one linear layer") {
  const auto m = single_dense({0.5, -1.5, 2.0, 0.25});
  const Tensor x({4}, {1.0, 0.4, 0.3, -2.0});
  const auto ex = lrp_backward(m, forward(m, x), 0, LrpRule::epsilon(1e-9));
  const std::vector<double> z{0.5, -0.6, 0.6, -0.5};
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(ex.input_relevance.data[i] / ex.input_relevance.data[0] == doctest::Approx(z[i] / z[0]).epsilon(1e-12));
  }
}

TEST_CASE("z+ relevance is nonnegative through conv, pooling and dense layers") {
  const auto m = tiny_1d_model();
  for (const auto& clip : synthetic_clips(4, 33)) {
    const auto trace = forward(m, Tensor({1, 16000}, clip.waveform.samples));
    const auto& l = trace.logits().data;
    const auto c = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
    REQUIRE(l[c] > 0.0);
    const auto ex = lrp_backward(m, trace, c, LrpRule::zplus());
    for (double v : ex.input_relevance.data) CHECK(v >= 0.0);
  }
}

TEST_CASE("scaling the explained row scales the relevance") {
  Rng rng(34);
  auto m = random_mlp(9, false);
  const auto x = random_input(rng, {8});
  const auto base = lrp_backward(m, forward(m, x), 2, LrpRule::epsilon(1e-12));
  for (std::size_t i = 0; i < 6; ++i) m.layers[4].weight.data[2 * 6 + i] *= 3.0;
  const auto scaled = lrp_backward(m, forward(m, x), 2, LrpRule::epsilon(1e-12));
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(scaled.input_relevance.data[i] == doctest::Approx(3.0 * base.input_relevance.data[i]).epsilon(1e-9));
  }
}

TEST_CASE("two-layer toy model matches explicit nested-loop redistribution") {
  ModelGraph m;
  m.name = "toy";
  m.representation = Representation::features;
  m.input_shape = {3};
  m.class_count = 2;
  m.layers = {LayerSpec::dense(3, 4), LayerSpec::relu(), LayerSpec::dense(4, 2)};
  initialize_weights(m, 35);
  const Tensor x({3}, {0.7, -0.2, 1.1});
  const auto trace = forward(m, x);
  const double eps = 1e-6;
  const auto ex = lrp_backward(m, trace, 1, LrpRule::epsilon(eps));

  std::vector<double> r_out(2, 0.0);
  r_out[1] = trace.logits().data[1];
  const auto r_hidden = oracle::explicit_epsilon_lrp(m.layers[2].weight.data, trace.activations[2].data, r_out, eps);
  const auto r_in = oracle::explicit_epsilon_lrp(m.layers[0].weight.data, x.data, r_hidden, eps);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ex.input_relevance.data[i] == doctest::Approx(r_in[i]).epsilon(1e-12));
}

TEST_CASE("maxpool sends relevance to the window winner, avgpool proportionally") {
  const Tensor x({1, 4}, {1.0, 3.0, 2.0, 2.0});
  const Tensor r({1, 2}, {5.0, 4.0});
  const auto mp = propagate_layer(LayerSpec::maxpool(2, 2), RuleVariant::passthrough(), x, r);
  CHECK(mp.data == std::vector<double>{0.0, 5.0, 4.0, 0.0});
  const auto ap = propagate_layer(LayerSpec::avgpool(2, 2), RuleVariant::passthrough(), x, r);
  CHECK(ap.data[0] == doctest::Approx(1.25));
  CHECK(ap.data[1] == doctest::Approx(3.75));
  CHECK(ap.data[2] == doctest::Approx(2.0));
  CHECK(ap.data[3] == doctest::Approx(2.0));
}

TEST_CASE("composite epsilon-plus assignment") {
  const auto refs = build_reference_architectures();
  const auto rule = composite_epsilon_plus(refs.waveform);
  for (std::size_t i = 0; i < refs.waveform.layers.size(); ++i) {
    const auto kind = refs.waveform.layers[i].kind;
    const auto& v = rule.for_layer(i, kind);
    if (kind == LayerKind::conv1d) CHECK(v.kind == RuleKind::zplus);
    if (kind == LayerKind::dense) CHECK(v.kind == RuleKind::epsilon);
    if (kind == LayerKind::relu || kind == LayerKind::maxpool) CHECK(v.kind == RuleKind::passthrough);
  }
  const auto mlp = random_mlp(1, false);
  const auto r2 = composite_epsilon_plus(mlp);
  CHECK(r2.for_layer(0, LayerKind::dense).kind == RuleKind::epsilon);
  CHECK(r2.for_layer(4, LayerKind::dense).kind == RuleKind::epsilon);
}

TEST_CASE("epsilon-plus maps are sparser than epsilon maps") {
  const auto m = tiny_1d_model();
  const auto clips = synthetic_clips(5, 36);
  std::size_t dense_count = 0, sparse_count = 0;
  for (const auto& clip : clips) {
    const auto trace = forward(m, Tensor({1, 16000}, clip.waveform.samples));
    auto count = [](const Tensor& r) {
      double mx = 0.0;
      for (double v : r.data) mx = std::max(mx, std::abs(v));
      std::size_t n = 0;
      for (double v : r.data) n += std::abs(v) > 0.01 * mx ? 1 : 0;
      return n;
    };
    const auto c = static_cast<std::size_t>(clip.class_id);
    dense_count += count(lrp_backward(m, trace, c, LrpRule::epsilon()).input_relevance);
    sparse_count += count(lrp_backward(m, trace, c, composite_epsilon_plus(m)).input_relevance);
  }
  CHECK(sparse_count < dense_count);
}

TEST_CASE("rule and trace errors") {
  const auto m = random_mlp(2, false);
  Rng rng(37);
  const auto trace = forward(m, random_input(rng, {8}));
  CHECK_THROWS_AS(lrp_backward(m, trace, 4, LrpRule::epsilon()), ConfigError);
  LrpRule partial;
  partial.by_kind[LayerKind::dense] = RuleVariant::eps();
  CHECK_THROWS_AS(lrp_backward(m, trace, 0, partial), ConfigError);
  LrpRule bad = LrpRule::epsilon();
  bad.by_layer[0] = RuleVariant::passthrough();
  CHECK_THROWS_AS(lrp_backward(m, trace, 0, bad), ConfigError);
  ForwardTrace shortened = trace;
  shortened.activations.pop_back();
  CHECK_THROWS_AS(lrp_backward(m, shortened, 0, LrpRule::epsilon()), ShapeError);
}

TEST_CASE("explanation domains follow the model family") {
  const auto refs = build_reference_architectures();
  Rng rng(38);
  const auto lm = forward(refs.logmel, random_input(rng, {1, 64, 20}));
  const auto ex = lrp_backward(refs.logmel, lm, 3, composite_epsilon_plus(refs.logmel));
  CHECK(ex.map.domain == RelevanceDomain::mel_time_frequency);
  CHECK(ex.map.values.rows() == 64);
  CHECK(ex.map.values.cols() == 20);
  const auto tiny = tiny_1d_model();
  const auto t = forward(tiny, Tensor({1, 16000}, synthetic_clips(1, 39).front().waveform.samples));
  const auto ex2 = lrp_backward(tiny, t, 0, LrpRule::epsilon());
  CHECK(ex2.map.domain == RelevanceDomain::time);
  CHECK(ex2.map.values.cols() == 16000);
  CHECK(ex2.map.logit == t.logits().data[0]);
}
