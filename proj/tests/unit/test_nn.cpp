#include <doctest.h>

#include <cmath>

#include "choreo/nn/adam.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/nn/ops.hpp"
#include "support/layer_cases.hpp"

using namespace choreo;
using namespace choreo::nn;

namespace {

Var seq(std::vector<double> values, Shape shape, bool grad = false) {
  return Var(Tensor(std::move(shape), std::move(values)), grad);
}

}  // namespace

TEST_SUITE("conv1d") {
  TEST_CASE("width-1 identity kernel passes input through") {
    Rng rng(1);
    Conv1d conv(3, 3, 1, 1, rng);
    conv.weight.mutable_value().fill(0.0);
    for (std::size_t c = 0; c < 3; ++c) conv.weight.mutable_value().at(c, c, 0) = 1.0;
    Var x(testing::random_tensor({2, 3, 7}, rng));
    Var y = conv.forward(x, {});
    for (std::size_t i = 0; i < x.value().size(); ++i) CHECK(y.value()[i] == x.value()[i]);
  }

  TEST_CASE("zero input and zero bias give zero output") {
    Rng rng(2);
    Conv1d conv(2, 5, 3, 2, rng);
    Var y = conv.forward(Var(Tensor({1, 2, 9}, 0.0)), {});
    for (double v : y.value().data()) CHECK(v == 0.0);
  }

  TEST_CASE("two-tap causal kernel on a ramp") {
    Var y = conv1d(seq({1, 2, 3, 4}, {1, 1, 4}), seq({1, 1}, {1, 1, 2}), seq({0}, {1}), 1);
    CHECK(y.value().data()[0] == 1.0);
    CHECK(y.value().data()[1] == 3.0);
    CHECK(y.value().data()[2] == 5.0);
    CHECK(y.value().data()[3] == 7.0);
  }

  TEST_CASE("perturbing time t never changes earlier outputs") {
    Rng rng(3);
    Conv1d conv(2, 3, 3, 2, rng);
    Tensor base = testing::random_tensor({1, 2, 12}, rng);
    Tensor y0 = conv.forward(Var(base), {}).value();
    for (std::size_t t = 0; t < 12; ++t) {
      Tensor pert = base;
      pert.at(0, 1, t) += 1.0;
      Tensor y1 = conv.forward(Var(pert), {}).value();
      for (std::size_t o = 0; o < 3; ++o) {
        for (std::size_t s = 0; s < t; ++s) CHECK(y1.at(0, o, s) == y0.at(0, o, s));
      }
    }
  }

  TEST_CASE("channel mismatch names expected and actual shapes") {
    Rng rng(4);
    Conv1d conv(3, 2, 3, 1, rng);
    try {
      conv.forward(Var(Tensor({1, 2, 5})), {});
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("[* x 3 x *]") != std::string::npos);
      CHECK(std::string(e.what()).find("[1 x 2 x 5]") != std::string::npos);
    }
  }
}

TEST_SUITE("gated tanh") {
  TEST_CASE("zero halves give zero") {
    Var y = gated_tanh(Var(Tensor({1, 4, 3}, 0.0)));
    CHECK(y.shape() == Shape{1, 2, 3});
    for (double v : y.value().data()) CHECK(v == 0.0);
  }
  TEST_CASE("saturates towards one") {
    Var y = gated_tanh(seq({40.0, 40.0}, {1, 2}));
    CHECK(y.value()[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  TEST_CASE("tanh(1) * sigmoid(0)") {
    Var y = gated_tanh(seq({1.0, 0.0}, {1, 2}));
    CHECK(y.value()[0] == doctest::Approx(0.38079707797788243).epsilon(1e-14));
  }
  TEST_CASE("odd channel count is rejected") { CHECK_THROWS_AS(gated_tanh(Var(Tensor({1, 3, 2}))), ValidationError); }
  TEST_CASE("outputs stay inside (-1, 1)") {
    Rng rng(9);
    Var y = gated_tanh(Var(testing::random_tensor({4, 6, 10}, rng, 3.0)));
    for (double v : y.value().data()) CHECK(std::abs(v) < 1.0);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("linear contraction gradient equals the other factor") {
    Rng rng(5);
    Var w(testing::random_tensor({6}, rng), true);
    Var x(testing::random_tensor({6}, rng));
    backward(sum(mul(w, x)));
    for (std::size_t i = 0; i < 6; ++i) CHECK(w.grad()[i] == x.value()[i]);
  }
  TEST_CASE("square at w = 5 has slope 4") {
    Var w(Tensor::scalar(5.0), true);
    Var d = add_scalar(w, -3.0);
    backward(mul(d, d));
    CHECK(w.grad()[0] == 4.0);
  }
  TEST_CASE("non-scalar loss is rejected") {
    Var w(Tensor({3}, 1.0), true);
    CHECK_THROWS_AS(backward(scale(w, 2.0)), ShapeError);
  }
  TEST_CASE("unreachable parameters keep a zero gradient") {
    Rng rng(6);
    Linear used(3, 2, rng), unused(3, 2, rng);
    ParameterRegistry reg;
    used.collect("used.", reg);
    unused.collect("unused.", reg);
    reg.zero_grad();
    backward(sum(used.forward(Var(testing::random_tensor({4, 3}, rng)), {})));
    for (double v : unused.weight.grad().data()) CHECK(v == 0.0);
    double total = 0.0;
    for (double v : used.weight.grad().data()) total += std::abs(v);
    CHECK(total > 0.0);
  }
  TEST_CASE("every layer kind matches central differences over 20 seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (auto& c : testing::layer_cases(seed)) {
        const auto r = testing::gradcheck(c.params, c.loss);
        INFO(c.name << " seed " << seed << " param " << r.worst_name);
        CHECK(r.worst_relative_error < 1e-4);
      }
    }
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient decays both moments geometrically") {
    Var p(Tensor({3}, 2.0), true);
    ParameterRegistry reg;
    reg.parameters.push_back({"p", p});
    Adam adam(reg, {.learning_rate = 0.1});
    p.node()->ensure_grad().fill(1.0);
    adam.step();
    const double m1 = adam.first_moment(0)[0];
    const double v1 = adam.second_moment(0)[0];
    p.zero_grad();
    adam.step();
    CHECK(adam.first_moment(0)[0] == doctest::Approx(0.9 * m1));
    CHECK(adam.second_moment(0)[0] == doctest::Approx(0.999 * v1));
    CHECK(adam.step_count() == 2);
  }
  TEST_CASE("zero gradient from a fresh state is an exact no-op") {
    Var p(Tensor({2}, -1.5), true);
    ParameterRegistry reg;
    reg.parameters.push_back({"p", p});
    Adam adam(reg, {});
    p.zero_grad();
    p.node()->ensure_grad();
    for (int i = 0; i < 5; ++i) adam.step();
    CHECK(p.value()[0] == -1.5);
  }
  TEST_CASE("first bias-corrected step moves by the learning rate") {
    Var p(Tensor::scalar(0.0), true);
    ParameterRegistry reg;
    reg.parameters.push_back({"p", p});
    Adam adam(reg, {.learning_rate = 1e-5});
    p.node()->ensure_grad()[0] = 1.0;
    adam.step();
    // -lr * g / (|g| + eps)
    CHECK(p.value()[0] == doctest::Approx(-1e-5 / (1.0 + 1e-8)).epsilon(1e-12));
  }
  TEST_CASE("constant gradient drives the step size to lr * sign(g)") {
    Var p(Tensor::scalar(0.0), true);
    ParameterRegistry reg;
    reg.parameters.push_back({"p", p});
    Adam adam(reg, {.learning_rate = 1e-3});
    double prev = 0.0, last_step = 0.0;
    for (int i = 0; i < 5000; ++i) {
      p.node()->ensure_grad()[0] = -0.37;
      adam.step();
      last_step = p.value()[0] - prev;
      prev = p.value()[0];
    }
    CHECK(last_step == doctest::Approx(1e-3).epsilon(1e-6));
  }
  TEST_CASE("non-finite gradient names the parameter") {
    Var a(Tensor({2}, 0.0), true), b(Tensor({2}, 0.0), true);
    ParameterRegistry reg;
    reg.parameters.push_back({"alpha", a});
    reg.parameters.push_back({"beta.weight", b});
    Adam adam(reg, {});
    a.node()->ensure_grad();
    b.node()->ensure_grad()[1] = NAN;
    try {
      adam.step();
      FAIL("expected RuntimeError");
    } catch (const RuntimeError& e) {
      CHECK(std::string(e.what()).find("beta.weight") != std::string::npos);
    }
    CHECK(adam.step_count() == 0);
  }
}

TEST_SUITE("standard layers") {
  TEST_CASE("batchnorm on a constant batch gives zero mean before the affine") {
    BatchNorm1d bn(2);
    ForwardContext ctx{Mode::kTrain, nullptr};
    Var y = bn.forward(Var(Tensor({3, 2, 4}, 7.5)), ctx);
    for (double v : y.value().data()) CHECK(v == 0.0);
    CHECK(bn.running_mean[0] == doctest::Approx(0.75));
  }
  TEST_CASE("batchnorm training output is standardized per channel") {
    Rng rng(8);
    BatchNorm1d bn(3);
    Var y = bn.forward(Var(testing::random_tensor({4, 3, 6}, rng, 5.0)), {Mode::kTrain, nullptr});
    for (std::size_t c = 0; c < 3; ++c) {
      double m = 0.0, v = 0.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t t = 0; t < 6; ++t) m += y.value().at(n, c, t);
      m /= 24.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t t = 0; t < 6; ++t) v += std::pow(y.value().at(n, c, t) - m, 2);
      CHECK(std::abs(m) < 1e-12);
      CHECK(v / 24.0 == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
  TEST_CASE("batchnorm and dropout refuse to run without a mode") {
    BatchNorm1d bn(2);
    Dropout drop(0.5);
    CHECK_THROWS_AS(bn.forward(Var(Tensor({1, 2, 3})), {}), ValidationError);
    CHECK_THROWS_AS(drop.forward(Var(Tensor({1, 2, 3})), {}), ValidationError);
  }
  TEST_CASE("dropout at rate 0 is identity, eval mode is identity") {
    Rng rng(10);
    Var x(testing::random_tensor({2, 3, 4}, rng));
    Dropout none(0.0), half(0.5);
    CHECK(none.forward(x, {Mode::kTrain, &rng}).value().data()[5] == x.value()[5]);
    Var y = half.forward(x, {Mode::kEval, nullptr});
    for (std::size_t i = 0; i < x.value().size(); ++i) CHECK(y.value()[i] == x.value()[i]);
  }
  TEST_CASE("dropout masks are reproducible from the seed") {
    Rng data(12);
    Var x(testing::random_tensor({2, 3, 40}, data));
    Dropout drop(0.4);
    Rng r1(77), r2(77);
    Tensor a = drop.forward(x, {Mode::kTrain, &r1}).value();
    Tensor b = drop.forward(x, {Mode::kTrain, &r2}).value();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
  TEST_CASE("maxpool ratio 2") {
    Var y = maxpool1d(seq({1, 3, 2, 5}, {1, 1, 4}), 2, 2);
    CHECK(y.shape() == Shape{1, 1, 2});
    CHECK(y.value()[0] == 3.0);
    CHECK(y.value()[1] == 5.0);
  }
  TEST_CASE("leaky relu is identity on non-negative input") {
    Var y = leaky_relu(seq({0.0, 1.5, 3.0, -2.0}, {1, 4}), 0.1);
    CHECK(y.value()[0] == 0.0);
    CHECK(y.value()[1] == 1.5);
    CHECK(y.value()[2] == 3.0);
    CHECK(y.value()[3] == doctest::Approx(-0.2));
  }
  TEST_CASE("softmax is shift invariant and sums to one") {
    Rng rng(13);
    Tensor logits = testing::random_tensor({3, 4}, rng);
    Tensor shifted = logits;
    for (double& v : shifted.data()) v += 123.25;
    Tensor a = softmax(Var(logits)).value();
    Tensor b = softmax(Var(shifted)).value();
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(a.at(r, k) - b.at(r, k)) < 1e-9);
        s += a.at(r, k);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
  TEST_CASE("layer specs validate hyperparameters") {
    CHECK_THROWS_AS((LayerSpec{.kind = LayerKind::kConv1d, .in_channels = 1, .out_channels = 1, .kernel = 0}.validate()),
                    ValidationError);
    CHECK_THROWS_AS((LayerSpec{.kind = LayerKind::kDropout, .dropout_rate = 1.0}.validate()), ValidationError);
    CHECK_THROWS_AS((LayerSpec{.kind = LayerKind::kLeakyRelu, .leak = 0.0}.validate()), ValidationError);
    Rng rng(1);
    auto layer = make_layer({.kind = LayerKind::kConv1d, .in_channels = 2, .out_channels = 3, .kernel = 4}, rng);
    CHECK(layer->kind() == LayerKind::kConv1d);
  }
}
