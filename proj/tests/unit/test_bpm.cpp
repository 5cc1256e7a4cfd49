#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "choreo/core/rng.hpp"
#include "choreo//audio/mulaw.hpp"
#include "choreo/audio/synth.hpp"
#include "choreo/bpm/bpm_net.hpp"
#include "choreo/genre/genre_classifier.hpp"
#include "choreo/nn/ops.hpp"
#include "choreo/pipeline/checkpoint.hpp"

using namespace choreo;
using namespace choreo::bpm;
using nn::Tensor;

namespace {

std::vector<BpmSample> clips(std::size_t n, double seconds, std::uint64_t seed) {
  std::vector<BpmSample> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = rng.uniform(80, 160);
    out.push_back({audio::mulaw_encode(audio::synth_clip(GenreId::from_index(i % 4), b, seconds, seed + i)), b,
                   "c" + std::to_string(i)});
  }
  return out;
}

}  // namespace

TEST_SUITE("bpm-net") {
  TEST_CASE("default architecture reduces a 2 s window to 10 steps of 128") {
    const auto cfg = BpmNetConfig::desk_default();
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.input_length == 44100);
    CHECK(cfg.blocks.size() >= kTransferBlocks);
    CHECK(downsampled_length(cfg, kTransferBlocks) == kFeatureSteps);
    CHECK(cfg.blocks[kTransferBlocks - 1].channels == kFeatureDim);
    CHECK(BpmNetConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

    auto bad = cfg;
    bad.blocks.resize(9);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.blocks[0].pool = 2;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.dropout = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.bpm_std = 0.0;
    CHECK_THROWS_AS(bad.validate_stats(), ValidationError);
  }

  TEST_CASE("standardization inverts") {
    auto cfg = BpmNetConfig::desk_default();
    cfg.bpm_mean = 111.0;
    cfg.bpm_std = 17.0;
    for (double b : {40.0, 111.0, 239.5}) CHECK(cfg.destandardize(cfg.standardize(b)) == doctest::Approx(b));
    CHECK(cfg.standardize(128.0) == 1.0);
  }

  TEST_CASE("forward shapes and loss") {
    BpmNet net(BpmNetConfig::desk_default(), 2);
    Rng rng(1);
    Tensor x({2, 1, 44100});
    for (auto& v : x.data()) v = rng.uniform(-1, 1);
    nn::NoGradGuard guard;
    const Tensor y = net.forward(nn::Var(x), {nn::Mode::kEval, nullptr}).value();
    CHECK(y.shape() == nn::Shape{2, 1});
    CHECK(y.all_finite());
    CHECK(net.features(nn::Var(x), {nn::Mode::kEval, nullptr}, 3).value().shape() ==
          nn::Shape{2, net.config().blocks[2].channels, downsampled_length(net.config(), 3)});
    CHECK(net.predict(x.data().first(44100)) == doctest::Approx(y[0] * 30.0 + 120.0));

    // mse against a loop
    Tensor target({2, 1}, std::vector<double>{0.3, -1.2});
    const double loss = bpm_loss(nn::Var(y), target).value()[0];
    CHECK(loss == doctest::Approx(((y[0] - 0.3) * (y[0] - 0.3) + (y[1] + 1.2) * (y[1] + 1.2)) / 2).epsilon(1e-14));
    CHECK_THROWS_AS(net.predict(x.data().first(100)), ValidationError);
  }

  TEST_CASE("dataset validation") {
    auto data = clips(2, 2.5, 1);
    CHECK_NOTHROW(validate_bpm_dataset(data, 44100));
    data.push_back(clips(1, 1.5, 9)[0]);
    CHECK_THROWS_AS(validate_bpm_dataset(data, 44100), ValidationError);
    CHECK_THROWS_AS(validate_bpm_dataset({}, 44100), ValidationError);
    data.pop_back();
    data[0].bpm = 500;
    CHECK_THROWS_AS(validate_bpm_dataset(data, 44100), ValidationError);
  }

  TEST_CASE("a short training run: stats, log, checkpoint, transfer") {
    const auto train = clips(3, 2.2, 10);
    const auto val = clips(1, 2.2, 20);
    TrainBpmOptions o;
    o.epochs = 2;
    o.batch_size = 2;
    o.steps_per_epoch = 1;
    o.seed = 4;
    const auto r = train_bpm(train, val, BpmNetConfig::desk_default(), o);
    REQUIRE(r.log.size() == 2);
    CHECK(std::isfinite(r.log[1].train_mse));
    CHECK(std::isfinite(r.log[1].val_mse));

    double mean = 0.0, var = 0.0;
    for (const auto& s : train) mean += s.bpm / 3;
    for (const auto& s : train) var += (s.bpm - mean) * (s.bpm - mean) / 3;
    auto net = load_bpm_net(r.checkpoint);
    CHECK(net.config().bpm_mean == doctest::Approx(mean));
    CHECK(net.config().bpm_std == doctest::Approx(std::sqrt(var)));

    std::ostringstream csv;
    write_bpm_log_csv(csv, r.log);
    CHECK(csv.str().rfind("epoch,train_mse,val_mse\n1,", 0) == 0);

    // reload predicts identically
    auto ck = r.checkpoint;
    auto again = load_bpm_net(pipeline::deserialize(pipeline::serialize(ck)));
    const auto window = audio::mulaw_decode(train[0].audio).samples;
    CHECK(net.predict(std::span(window).first(44100)) == again.predict(std::span(window).first(44100)));
    CHECK(evaluate_bpm(net, val, 44100) == evaluate_bpm(again, val, 44100));

    // same seed, same weights
    CHECK(train_bpm(train, val, BpmNetConfig::desk_default(), o).checkpoint.hash == r.checkpoint.hash);

    const auto ex = extract_lower_blocks(r.checkpoint);
    CHECK(ex.checkpoint_hash() == r.checkpoint.hash);
    CHECK(ex.extract(std::span(window).first(44100)).shape() == nn::Shape{10, 128});

    genre::GenreClassifier g(genre::GenreNetConfig{}, 1);
    CHECK_THROWS_AS(extract_lower_blocks(genre::genre_checkpoint(g, {})), ValidationError);
  }
}

TEST_SUITE("checkpoint") {
  pipeline::ModelCheckpoint sample_checkpoint() {
    pipeline::ModelCheckpoint ck;
    ck.kind = pipeline::ModelKind::kGenre;
    ck.config = {{"layers", 3}};
    ck.metadata = {{"seed", 7}, {"final_loss", 0.25}};
    Tensor a({2, 3}, std::vector<double>{-0.0, 1e-310, 1e308, -3.5, std::nextafter(1.0, 2.0), 0.1});
    Tensor b({4}, std::vector<double>{1, 2, 3, 4});
    ck.tensors = {{"layer.weight", a}, {"layer.bias", b}};
    return ck;
  }

  TEST_CASE("serialize/deserialize is bit-exact") {
    auto ck = sample_checkpoint();
    const auto bytes = pipeline::serialize(ck);
    CHECK(std::memcmp(bytes.data(), "CHOREOCK", 8) == 0);
    CHECK(ck.hash.size() == 64);
    const auto back = pipeline::deserialize(bytes);
    CHECK(back.hash == ck.hash);
    CHECK(back.kind == ck.kind);
    CHECK(back.config == ck.config);
    CHECK(back.metadata == ck.metadata);
    REQUIRE(back.tensors.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(back.tensors[i].name == ck.tensors[i].name);
      CHECK(back.tensors[i].tensor.shape() == ck.tensors[i].tensor.shape());
      CHECK(std::memcmp(back.tensors[i].tensor.ptr(), ck.tensors[i].tensor.ptr(),
                        ck.tensors[i].tensor.size() * sizeof(double)) == 0);
    }
    CHECK(std::signbit(back.tensor("layer.weight")[0]));
    CHECK_THROWS_AS(back.tensor("nope"), ValidationError);
  }

  TEST_CASE("corruption is detected") {
    auto ck = sample_checkpoint();
    auto bytes = pipeline::serialize(ck);
    for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{10}}) {
      try {
        pipeline::deserialize(std::span(bytes).first(cut));
        FAIL("truncation not detected");
      } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("hash mismatch") != std::string::npos);
      }
    }
    auto flipped = bytes;
    flipped[60] ^= 0x01;
    CHECK_THROWS_WITH_AS(pipeline::deserialize(flipped), doctest::Contains("hash mismatch"), ValidationError);
  }

  TEST_CASE("file round trip and restore checks shapes") {
    const auto path = std::filesystem::temp_directory_path() / "choreo_test.ckpt";
    auto ck = sample_checkpoint();
    pipeline::save_checkpoint(path, ck);
    CHECK(pipeline::load_checkpoint(path).hash == ck.hash);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(pipeline::load_checkpoint(path), ValidationError);

    nn::Var w(Tensor({2, 3}), true), bias(Tensor({3}), true);
    nn::ParameterRegistry reg;
    reg.parameters = {{"layer.weight", w}, {"layer.bias", bias}};
    CHECK_THROWS_AS(pipeline::restore(ck, reg), ValidationError);
    reg.parameters = {{"layer.weight", w}};
    pipeline::restore(ck, reg);
    CHECK(w.value()[3] == -3.5);
    reg.parameters = {{"other", w}};
    CHECK_THROWS_AS(pipeline::restore(ck, reg), ValidationError);
  }
}
