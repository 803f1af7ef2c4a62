/* Copyright 2026 The ettk authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "ettk/models.hpp"

using namespace ettk;

namespace {

/// Small desk-scale ASR topology for fast tests.
AsrNetSpec tiny_asr_spec() {
  AsrNetSpec spec;
  spec.conv = {{2, 3, 11, 2, 4}, {2, 3, 5, 1, 2}};
  spec.hidden = 6;
  spec.alphabet = 29;
  return spec;
}

Tensor<double> random_features(Index frames, Rng& rng) {
  return Tensor<double>::random_uniform(Shape{frames, kSpectrogramBins}, -1.0, 1.0, rng);
}

}  // namespace

TEST_CASE("asr build: topology audit and forward shapes") {
  Rng rng(11);
  AsrNet<double> net = build_asr<double>(tiny_asr_spec(), rng);
  auto named = net.named_params();
  // 2 conv stages x 2 tensors + 5 layers x 2 cells x 9 tensors + output pair.
  CHECK(named.size() == 2 * 2 + 5 * 2 * 9 + 2);
  CHECK(net.layers.size() == 5);
  CHECK(net.conv.size() == 2);

  const Index frames = 25;
  Tensor<double> feats = random_features(frames, rng);
  AsrForward<double> fw = asr_forward_with_taps(net, feats);
  const Index expect_t = net.spec.out_frames(frames);
  CHECK(fw.log_probs.extent(0) == expect_t);
  CHECK(fw.log_probs.extent(1) == 29);
  REQUIRE(fw.taps.size() == 5);
  for (const auto& tap : fw.taps) {
    CHECK(tap.extent(0) == expect_t);
    CHECK(tap.extent(1) == 2 * net.spec.hidden);
  }
  // Per-frame log-probs exponentiate to distributions.
  for (Index t = 0; t < expect_t; ++t) {
    double sum = 0.0;
    for (Index v = 0; v < 29; ++v) sum += std::exp(fw.log_probs.at(t, v));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("asr spec: validation and derived sizes") {
  AsrNetSpec bad = tiny_asr_spec();
  bad.conv.pop_back();
  CHECK_THROWS_AS(bad.validate(), ContractError);

  AsrNetSpec defaults = AsrNetSpec::defaults();
  CHECK(defaults.conv_out_freq() == 21);          // 161 -> 61 -> 21
  CHECK(defaults.gru_input_width() == 32 * 21);
  CHECK(defaults.out_frames(99) == 35);           // 99 -> 45 -> 35
  CHECK(defaults.min_spect_frames() == 31);
  CHECK(defaults.time_stride() == 2);
}

TEST_CASE("asr forward: feature width and frame-count contracts") {
  Rng rng(13);
  AsrNet<double> net = build_asr<double>(tiny_asr_spec(), rng);
  Tensor<double> narrow = Tensor<double>::random_uniform(Shape{20, 40}, -1, 1, rng);
  CHECK_THROWS_AS(asr_forward_with_taps(net, narrow), DimensionError);
  Tensor<double> short_feats = random_features(net.spec.min_spect_frames() - 1, rng);
  CHECK_THROWS_AS(asr_forward_with_taps(net, short_feats), ContractError);
}

TEST_CASE("asr tap of layer 1 matches a standalone layer-1 pass") {
  Rng rng(17);
  AsrNet<double> net = build_asr<double>(tiny_asr_spec(), rng);
  Tensor<double> feats = random_features(21, rng);
  AsrForward<double> fw = asr_forward_with_taps(net, feats);

  // Rebuild the conv front-end + first layer only, via the tensor-side API.
  Tape<double> t;
  AsrNetVars vars = bind_asr_frozen(t, net);
  Var x = t.constant(reshaped(Tensor<double>(feats), Shape{1, 21, kSpectrogramBins}));
  for (std::size_t i = 0; i < net.spec.conv.size(); ++i) {
    const auto& c = net.spec.conv[i];
    x = relu(t, conv2d(t, x, vars.conv[i].first, ConvStride{c.stride_t, c.stride_f},
                       vars.conv[i].second));
  }
  Var seq = channels_to_time_rows(t, x);
  Var h1 = bigru_item(t, vars.layers[0], seq, net.spec.hidden);
  const auto& h1v = t.value(h1);
  REQUIRE(h1v.shape() == fw.taps[0].shape());
  for (Index i = 0; i < h1v.size(); ++i) CHECK(h1v[i] == fw.taps[0][i]);
}

TEST_CASE("asr forward is bit-identical across repeated eval passes") {
  Rng rng(19);
  AsrNet<float> net = build_asr<float>(tiny_asr_spec(), rng);
  Tensor<float> feats = Tensor<float>::random_uniform(Shape{23, kSpectrogramBins}, -1, 1, rng);
  AsrForward<float> a = asr_forward_with_taps(net, feats);
  AsrForward<float> b = asr_forward_with_taps(net, feats);
  for (Index i = 0; i < a.log_probs.size(); ++i) CHECK(a.log_probs[i] == b.log_probs[i]);
  for (std::size_t l = 0; l < 5; ++l) {
    for (Index i = 0; i < a.taps[l].size(); ++i) CHECK(a.taps[l][i] == b.taps[l][i]);
  }
}

TEST_CASE("baseline: pooled width, distribution output, parameter count") {
  Rng rng(23);
  SerBaselineSpec spec;
  spec.hidden = 96;
  SerBaseline<double> net = build_baseline<double>(spec, rng);
  CHECK(net.layer2.output_width() == 192);

  Index live = 0;
  for (Tensor<double>* p : net.params()) live += p->size();
  CHECK(live == baseline_param_count(spec));

  SerBaselineSpec small;
  small.hidden = 5;
  SerBaseline<double> tiny = build_baseline<double>(small, rng);
  AudioClip clip;
  clip.samples.resize(16000 / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = static_cast<float>(0.4 * std::sin(0.05 * static_cast<double>(i)));
  }
  Tensor<double> dist = baseline_forward(tiny, clip);
  REQUIRE(dist.extent(0) == 4);
  double sum = 0.0;
  for (Index k = 0; k < 4; ++k) sum += dist[k];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ft-mp: trainable count is exactly the classifier") {
  Rng rng(29);
  AsrNet<double> asr = build_asr<double>(tiny_asr_spec(), rng);
  TransferSpec spec;
  spec.variant = TransferVariant::kFtMp;
  spec.tap_layer = 2;
  TransferNet<double> net = build_transfer<double>(spec, std::move(asr), rng);

  Index trainable = 0;
  for (Tensor<double>* p : net.trainable_params()) trainable += p->size();
  CHECK(trainable == (2 * net.asr.spec.hidden) * 4 + 4);
  CHECK(trainable == transfer_trainable_param_count(spec, net.asr.spec.hidden));
  for (Tensor<double>* p : net.asr.params()) CHECK_FALSE(p->requires_grad());

  CHECK_THROWS_AS([&] {
    TransferSpec bad = spec;
    bad.tap_layer = 6;
    bad.validate();
  }(), ContractError);
}

TEST_CASE("ft-rnn: wiring width and gradient flow boundaries") {
  Rng rng(31);
  AsrNet<double> asr = build_asr<double>(tiny_asr_spec(), rng);
  TransferSpec spec;
  spec.variant = TransferVariant::kFtRnn;
  spec.tap_layer = 1;
  spec.ser.hidden = 4;
  TransferNet<double> net = build_transfer<double>(spec, std::move(asr), rng);
  CHECK(net.rnn.input() == 2 * net.asr.spec.hidden);

  AudioClip clip;
  clip.samples.resize(16000);
  Rng crng(5);
  for (auto& s : clip.samples) s = static_cast<float>(crng.uniform(-0.5, 0.5));
  TransferInputs<double> inputs = transfer_inputs(net, clip);

  Tape<double> t;
  TransferVars vars = bind_transfer(t, net);
  Rng drop_rng(1);
  Var logits = transfer_logits(t, net, vars, inputs, Mode::kTrain, drop_rng);
  Var loss = cross_entropy_from_logits(t, logits, 2);
  t.backward(loss);
  t.accumulate_leaf_grads();

  for (Tensor<double>* p : net.trainable_params()) {
    REQUIRE(p->has_grad());
    double norm = 0.0;
    for (Index i = 0; i < p->grad().size(); ++i) norm += std::abs(p->grad()[i]);
    CHECK(norm > 0.0);
  }
  for (Tensor<double>* p : net.asr.params()) CHECK_FALSE(p->has_grad());
}

TEST_CASE("progressive: concat width and zeroed-tap linearity") {
  Rng rng(37);
  AsrNet<double> asr = build_asr<double>(tiny_asr_spec(), rng);
  TransferSpec spec;
  spec.variant = TransferVariant::kProgressive;
  spec.tap_layer = 2;
  spec.ser.hidden = 5;
  TransferNet<double> net = build_transfer<double>(spec, std::move(asr), rng);
  CHECK(net.head_input_width() == 2 * 5 + 2 * net.asr.spec.hidden);

  AudioClip clip;
  clip.samples.resize(12000);
  Rng crng(6);
  for (auto& s : clip.samples) s = static_cast<float>(0.6 * std::sin(0.08 * static_cast<double>(&s - clip.samples.data()))) ;
  for (auto& s : clip.samples) s += static_cast<float>(crng.uniform(-0.05, 0.05));
  TransferInputs<double> in = transfer_inputs(net, clip);

  // Zero the ASR tap: the classifier must reduce to its emotion-half weights.
  TransferInputs<double> zeroed = in;
  zeroed.tap_pooled = Tensor<double>(zeroed.tap_pooled.shape());

  Tape<double> t;
  TransferVars vars = bind_transfer_frozen(t, net);
  Rng drop_rng(1);
  Var logits = transfer_logits(t, net, vars, zeroed, Mode::kEval, drop_rng);

  // Manual: slice head weight columns for the emotion half.
  Tape<double> t2;
  TransferVars vars2 = bind_transfer_frozen(t2, net);
  Var feats = t2.frozen(in.ser_feats);
  Var h1 = bigru_item(t2, vars2.emo1, feats, 5);
  Var h2 = bigru_item(t2, vars2.emo2, h1, 5);
  Var pooled = mean_rows(t2, h2, t2.value(h2).extent(0));
  const auto& pv = t2.value(pooled);
  const Index emo_w = 2 * 5;
  for (Index k = 0; k < 4; ++k) {
    double acc = net.head.bias[k];
    for (Index j = 0; j < emo_w; ++j) acc += net.head.weight.at(k, j) * pv[j];
    CHECK(t.value(logits)[k] == doctest::Approx(acc).epsilon(1e-12));
  }

  // Missing feature stream is a contract error.
  TransferInputs<double> missing = in;
  missing.ser_feats = Tensor<double>();
  Tape<double> t3;
  TransferVars vars3 = bind_transfer_frozen(t3, net);
  CHECK_THROWS_AS(transfer_logits(t3, net, vars3, missing, Mode::kEval, drop_rng), ContractError);
}

TEST_CASE("progressive training reaches every emotion parameter, no asr parameter") {
  Rng rng(41);
  AsrNet<double> asr = build_asr<double>(tiny_asr_spec(), rng);
  TransferSpec spec;
  spec.variant = TransferVariant::kProgressive;
  spec.tap_layer = 3;
  spec.ser.hidden = 3;
  TransferNet<double> net = build_transfer<double>(spec, std::move(asr), rng);

  AudioClip clip;
  clip.samples.resize(14000);
  Rng crng(9);
  for (auto& s : clip.samples) s = static_cast<float>(crng.uniform(-0.6, 0.6));
  TransferInputs<double> in = transfer_inputs(net, clip);

  Tape<double> t;
  TransferVars vars = bind_transfer(t, net);
  Rng drop_rng(2);
  Var logits = transfer_logits(t, net, vars, in, Mode::kTrain, drop_rng);
  t.backward(cross_entropy_from_logits(t, logits, 0));
  t.accumulate_leaf_grads();

  for (Tensor<double>* p : net.trainable_params()) {
    REQUIRE(p->has_grad());
    double norm = 0.0;
    for (Index i = 0; i < p->grad().size(); ++i) norm += std::abs(p->grad()[i]);
    CHECK(norm > 0.0);
  }
  for (Tensor<double>* p : net.asr.params()) CHECK_FALSE(p->has_grad());
}

TEST_CASE("checkpoint: deterministic bytes, integrity, kind mismatch") {
  Rng rng(43);
  AsrNet<float> net = build_asr<float>(tiny_asr_spec(), rng);
  Checkpoint ckpt = make_asr_checkpoint(net, {{"epoch", 3}, {"val_loss", 1.25}, {"seed", 7}});

  const std::string path = "/tmp/ettk_ckpt_a.bin";
  save_checkpoint(path, ckpt);
  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.kind() == "asr");
  CHECK(loaded.metadata.at("epoch").get<int>() == 3);

  // save -> load -> save produces byte-identical files.
  const std::string path2 = "/tmp/ettk_ckpt_b.bin";
  save_checkpoint(path2, loaded);
  auto read_all = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  };
  CHECK(read_all(path) == read_all(path2));

  // Round trip restores parameters exactly.
  AsrNet<float> restored = asr_from_checkpoint<float>(loaded);
  auto an = net.named_params();
  auto bn = restored.named_params();
  for (std::size_t i = 0; i < an.size(); ++i) {
    for (Index j = 0; j < an[i].second->size(); ++j) {
      CHECK(an[i].second->flat()[j] == bn[i].second->flat()[j]);
    }
  }

  // A flipped byte fails the digest.
  auto bytes = read_all(path);
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
  std::ofstream(path, std::ios::binary | std::ios::trunc)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("CRC"), IoError);

  // Kind mismatch: an ASR checkpoint is not a SER model.
  CHECK_THROWS_AS(baseline_from_checkpoint<float>(loaded), IoError);
  CHECK_THROWS_AS(transfer_from_checkpoint<float>(loaded), ContractError);
}

TEST_CASE("transfer checkpoint round trip restores forward behavior") {
  Rng rng(47);
  AsrNet<float> asr = build_asr<float>(tiny_asr_spec(), rng);
  TransferSpec spec;
  spec.variant = TransferVariant::kFtMp;
  spec.tap_layer = 2;
  TransferNet<float> net = build_transfer<float>(spec, std::move(asr), rng);

  Checkpoint ckpt = make_transfer_checkpoint(net, {{"seed", 1}});
  const std::string path = "/tmp/ettk_ckpt_transfer.bin";
  save_checkpoint(path, ckpt);
  TransferNet<float> restored = transfer_from_checkpoint<float>(load_checkpoint(path));

  AudioClip clip;
  clip.samples.resize(16000);
  Rng crng(3);
  for (auto& s : clip.samples) s = static_cast<float>(crng.uniform(-0.4, 0.4));
  Tensor<float> da = transfer_forward(net, clip);
  Tensor<float> db = transfer_forward(restored, clip);
  for (Index k = 0; k < 4; ++k) CHECK(da[k] == db[k]);
}
