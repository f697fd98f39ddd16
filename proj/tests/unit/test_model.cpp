#include <cmath>
#include <cstring>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "rlens/fixtures.hpp"
#include "rlens/model.hpp"
#include "rlens/model_io.hpp"
#include "rlens/reference_models.hpp"
#include "temp_dir.hpp"

using namespace rlens;

namespace {

Tensor random_tensor(Rng& rng, Shape s) {
  Tensor t(std::move(s));
  for (double& v : t.data) v = rng.normal();
  return t;
}

void randomize(LayerSpec& l, Rng& rng, bool bias = true) {
  l.weight = random_tensor(rng, l.weight_shape());
  l.bias = bias ? random_tensor(rng, {l.weight.shape.front()}) : Tensor({l.weight.shape.front()});
}

// Central finite differences of sum(c * layer(x)) against input_gradient.
void check_gradient(const LayerSpec& l, const Tensor& x, Rng& rng) {
  const Tensor y = apply_layer(l, x);
  const Tensor c = random_tensor(rng, y.shape);
  const Tensor g = input_gradient(l, x, c);
  REQUIRE(g.shape == x.shape);
  auto objective = [&](const Tensor& in) {
    const Tensor out = apply_layer(l, in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += c.data[i] * out.data[i];
    return s;
  };
  const double h = 1e-4;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.data[i] += h;
    xm.data[i] -= h;
    const double fd = (objective(xp) - objective(xm)) / (2 * h);
    CHECK(std::abs(fd - g.data[i]) <= 1e-3 * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("dense, relu and conv1d hand examples") {
  auto d = LayerSpec::dense(2, 2);
  d.weight = Tensor({2, 2}, {1, 2, 3, 4});
  d.bias = Tensor({2});
  CHECK(apply_layer(d, Tensor({2}, {1, 1})).data == std::vector<double>{3, 7});
  CHECK(apply_layer(LayerSpec::relu(), Tensor({3}, {-1, 0, 2})).data == std::vector<double>{0, 0, 2});
  auto c = LayerSpec::conv1d(1, 1, 2, 1);
  c.weight = Tensor({1, 1, 2}, {1, -1});
  c.bias = Tensor({1});
  CHECK(apply_layer(c, Tensor({1, 3}, {3, 1, 4})).data == std::vector<double>{2, -3});
}

TEST_CASE("conv1d matches a sliding-window oracle with stride and channels") {
  Rng rng(21);
  auto c = LayerSpec::conv1d(3, 4, 5, 2);
  randomize(c, rng);
  const Tensor x = random_tensor(rng, {3, 23});
  const Tensor y = apply_layer(c, x);
  REQUIRE(y.shape == Shape{4, 10});
  for (std::size_t o = 0; o < 4; ++o) {
    for (std::size_t t = 0; t < 10; ++t) {
      double s = c.bias.data[o];
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 5; ++k) s += c.weight.data[(o * 3 + i) * 5 + k] * x.data[i * 23 + t * 2 + k];
      CHECK(y.data[o * 10 + t] == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("same padding follows ceil(in / stride)") {
  const auto l = LayerSpec::conv2d(1, 2, 3, 3, 2, 2, Padding::same);
  CHECK(output_shape(l, {1, 64, 20}) == Shape{2, 32, 10});
  CHECK(output_shape(l, {1, 5, 5}) == Shape{2, 3, 3});
  CHECK(output_shape(LayerSpec::maxpool2d(2, 2, 2, 2), {3, 5, 4}) == Shape{3, 2, 2});
  CHECK(output_shape(LayerSpec::global_avgpool(), {7, 3, 3}) == Shape{7});
}

TEST_CASE("pre-activations are linear in the input when biases are zero") {
  Rng rng(22);
  for (auto l : {LayerSpec::dense(6, 4), LayerSpec::conv1d(2, 3, 3, 1), LayerSpec::conv2d(2, 3, 3, 3, 1, 1)}) {
    randomize(l, rng, false);
    Shape in = l.kind == LayerKind::dense ? Shape{6} : l.kind == LayerKind::conv1d ? Shape{2, 9} : Shape{2, 5, 5};
    const Tensor x = random_tensor(rng, in);
    Tensor xs = x;
    for (double& v : xs.data) v *= -2.5;
    const auto y = apply_layer(l, x), ys = apply_layer(l, xs);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(ys.data[i] == doctest::Approx(-2.5 * y.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("input gradients match finite differences for every layer kind") {
  Rng rng(23);
  auto dense = LayerSpec::dense(5, 3);
  randomize(dense, rng);
  check_gradient(dense, random_tensor(rng, {5}), rng);
  auto c1 = LayerSpec::conv1d(2, 3, 4, 2);
  randomize(c1, rng);
  check_gradient(c1, random_tensor(rng, {2, 13}), rng);
  auto c2 = LayerSpec::conv2d(2, 2, 3, 3, 2, 1, Padding::same);
  randomize(c2, rng);
  check_gradient(c2, random_tensor(rng, {2, 5, 4}), rng);
  auto dw = LayerSpec::depthwise_conv2d(3, 3, 3, 1, 2, Padding::same);
  randomize(dw, rng);
  check_gradient(dw, random_tensor(rng, {3, 4, 5}), rng);
  check_gradient(LayerSpec::relu(), random_tensor(rng, {11}), rng);
  check_gradient(LayerSpec::maxpool(3, 2), random_tensor(rng, {2, 9}), rng);
  check_gradient(LayerSpec::maxpool2d(2, 2, 2, 2), random_tensor(rng, {2, 4, 4}), rng);
  check_gradient(LayerSpec::avgpool(2, 2), random_tensor(rng, {2, 8}), rng);
  check_gradient(LayerSpec::avgpool2d(2, 3, 1, 2), random_tensor(rng, {1, 4, 6}), rng);
  check_gradient(LayerSpec::flatten(), random_tensor(rng, {2, 3, 2}), rng);
  check_gradient(LayerSpec::global_avgpool(), random_tensor(rng, {3, 2, 2}), rng);
}

TEST_CASE("depthwise then pointwise equals a full conv with a separable kernel") {
  Rng rng(24);
  const std::size_t cin = 3, cout = 4;
  auto dw = LayerSpec::depthwise_conv2d(cin, 3, 3, 1, 1, Padding::same);
  randomize(dw, rng, false);
  auto pw = LayerSpec::conv2d(cin, cout, 1, 1, 1, 1, Padding::same);
  randomize(pw, rng, false);
  auto full = LayerSpec::conv2d(cin, cout, 3, 3, 1, 1, Padding::same);
  full.weight = Tensor({cout, cin, 3, 3});
  full.bias = Tensor({cout});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t i = 0; i < cin; ++i)
      for (std::size_t k = 0; k < 9; ++k) full.weight.data[(o * cin + i) * 9 + k] = pw.weight.data[o * cin + i] * dw.weight.data[i * 9 + k];
  const Tensor x = random_tensor(rng, {cin, 6, 5});
  const auto a = apply_layer(pw, apply_layer(dw, x));
  const auto b = apply_layer(full, x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-6);
}

TEST_CASE("shape errors name the layer index") {
  ModelGraph m;
  m.name = "broken";
  m.input_shape = {4};
  m.class_count = 2;
  m.layers = {LayerSpec::dense(4, 3), LayerSpec::relu(), LayerSpec::dense(5, 2)};
  try {
    m.validate();
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
  }
  auto ok = tiny_1d_model();
  CHECK_THROWS_AS(forward(ok, Tensor({1, 100})), ShapeError);
}

TEST_CASE("reference architectures") {
  const auto refs = build_reference_architectures();
  CHECK(refs.waveform.input_shape == Shape{1, 16000});
  CHECK(refs.logmel.input_shape == Shape{1, 64, 20});
  CHECK(count_layers(refs.waveform, LayerKind::conv1d) == 4);
  CHECK(count_layers(refs.logmel, LayerKind::conv2d) + count_layers(refs.logmel, LayerKind::depthwise_conv2d) == 13);
  CHECK(refs.waveform.layer_shapes().back() == Shape{10});
  CHECK(refs.logmel.layer_shapes().back() == Shape{10});
  CHECK(refs.waveform.parameter_count() > 0);
  CHECK(refs.logmel.parameter_count() > 0);
  Rng rng(25);
  const auto out = forward(refs.logmel, random_tensor(rng, {1, 64, 20}));
  CHECK(out.logits().shape == Shape{10});
}

TEST_CASE("replaying a trace reproduces the logits bitwise") {
  const auto m = tiny_1d_model();
  const auto clip = synthetic_clips(1, 26).front();
  const auto trace = forward(m, Tensor({1, 16000}, clip.waveform.samples));
  Tensor a = trace.input();
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    a = apply_layer(m.layers[i], a);
    CHECK(a == trace.activations[i + 1]);
  }
}

TEST_CASE("tiny-1d has about 10k parameters and frozen logits") {
  const auto m = tiny_1d_model();
  CHECK(m.parameter_count() > 9000);
  CHECK(m.parameter_count() < 12000);
  const auto clip = synthetic_clips(1, 27).front();
  const auto logits = forward(m, Tensor({1, 16000}, clip.waveform.samples)).logits().data;
  // Recorded from this implementation; guards against silent engine drift.
  const std::vector<double> golden{1.7947049767033267,   -2.2866271902373962, 3.1694865901910387,  -1.3206650184168081,
                                   -0.030523270492645277, -1.3154949275058607, 0.88144673587149303, 0.86075063411924568,
                                   1.8597980032579275,   1.363608709692419};
  REQUIRE(logits.size() == golden.size());
  for (std::size_t i = 0; i < logits.size(); ++i) CHECK(logits[i] == doctest::Approx(golden[i]).epsilon(1e-9));
}

TEST_CASE("manifest round trip keeps weights and logits") {
  TempDir dir;
  const auto m = build_reference_architectures().logmel;
  write_model(dir / "logmel.json", m);
  const auto back = read_model(dir / "logmel.json");
  REQUIRE(back.layers.size() == m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CHECK(back.layers[i].weight == m.layers[i].weight);
    CHECK(back.layers[i].kind == m.layers[i].kind);
  }
  Rng rng(28);
  const auto x = random_tensor(rng, {1, 64, 20});
  CHECK(forward(back, x).logits() == forward(m, x).logits());
}

TEST_CASE("manifest errors") {
  const auto m = tiny_1d_model();
  auto s = save_model(m, "tiny.bin");
  auto short_blob = s.blob;
  short_blob.resize(short_blob.size() - 4);
  try {
    load_model(s.manifest, short_blob);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("blob shorter than manifest requires") != std::string::npos);
  }
  auto flipped = s.blob;
  flipped[10] ^= 0x40;
  CHECK_THROWS_WITH_AS(load_model(s.manifest, flipped), doctest::Contains("checksum"), DataError);

  auto doc = nlohmann::json::parse(s.manifest);
  doc["layers"][1]["kind"] = "softmax";
  CHECK_THROWS_AS(load_model(doc.dump(), s.blob), DataError);

  doc = nlohmann::json::parse(s.manifest);
  doc["layers"][0]["out_channels"] = 5;
  CHECK_THROWS_AS(load_model(doc.dump(), s.blob), DataError);
}

TEST_CASE("batchnorm entries fold into the preceding layer") {
  ModelGraph m;
  m.name = "bn";
  m.representation = Representation::features;
  m.input_shape = {3};
  m.class_count = 2;
  m.layers = {LayerSpec::dense(3, 2)};
  m.layers[0].weight = Tensor({2, 3}, {1, 2, 3, -1, 0.5, 2});
  m.layers[0].bias = Tensor({2}, {0.5, -1});
  auto s = save_model(m, "bn.bin");
  auto doc = nlohmann::json::parse(s.manifest);
  const std::vector<float> gamma{2, 0.5}, beta{1, -1}, mean{0.25, 1}, var{4, 1};
  nlohmann::json tensors;
  for (auto [name, values] : {std::pair{"gamma", &gamma}, std::pair{"beta", &beta}, std::pair{"mean", &mean},
                              std::pair{"var", &var}}) {
    tensors[name] = {{"shape", {2}}, {"offset", s.blob.size()}};
    const auto* p = reinterpret_cast<const std::uint8_t*>(values->data());
    s.blob.insert(s.blob.end(), p, p + 8);
  }
  doc["layers"].push_back({{"kind", "batchnorm"}, {"epsilon", 0.0}, {"tensors", tensors}});
  doc["blob_bytes"] = s.blob.size();
  doc["crc32"] = crc32(s.blob);
  const auto folded = load_model(doc.dump(), s.blob);
  REQUIRE(folded.layers.size() == 1);
  const Tensor x({3}, {0.3, -1.2, 2.0});
  const auto y = forward(m, x).logits().data;
  const auto z = forward(folded, x).logits().data;
  for (std::size_t c = 0; c < 2; ++c) {
    const double expect = gamma[c] * (y[c] - mean[c]) / std::sqrt(var[c]) + beta[c];
    CHECK(z[c] == doctest::Approx(expect).epsilon(1e-9));
  }
}
