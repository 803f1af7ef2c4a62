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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kBin = ETTK_BIN;
const std::string kWork = "/tmp/ettk_cli_test";

int run(const std::string& args) {
  const std::string cmd = kBin + " " + args + " >" + kWork + "/stdout.txt 2>" + kWork + "/stderr.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool exists(const std::string& path) { return fs::exists(path); }

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

Workspace& workspace() {
  static Workspace ws;
  return ws;
}

}  // namespace

TEST_CASE("usage errors exit 2 with a synopsis") {
  workspace();
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("train-ser --manifest x.tsv --unknown-flag 1 --out " + kWork + "/x") == 2);
  const std::string err = slurp(kWork + "/stderr.txt");
  CHECK(err.find("Usage:") != std::string::npos);
  CHECK(run("--help") == 0);
}

TEST_CASE("synth-data + features produce corpus and dumps") {
  workspace();
  REQUIRE(run("synth-data --kind ser --count 4 --sessions 2 --out " + kWork + "/corpus") == 0);
  CHECK(exists(kWork + "/corpus/manifest.tsv"));
  CHECK(exists(kWork + "/corpus/utt_00000.wav"));
  CHECK(exists(kWork + "/corpus/effective-config.txt"));

  REQUIRE(run("features --manifest " + kWork + "/corpus/manifest.tsv --kind ser --format bin --out " +
              kWork + "/feats") == 0);
  CHECK(exists(kWork + "/feats/features.bin"));
  REQUIRE(run("features --manifest " + kWork + "/corpus/manifest.tsv --kind ser --format tsv --out " +
              kWork + "/feats_tsv") == 0);
  CHECK(exists(kWork + "/feats_tsv/feat_00000.tsv"));

  REQUIRE(run("synth-data --kind asr --count 6 --out " + kWork + "/asr_corpus") == 0);
  CHECK(exists(kWork + "/asr_corpus/manifest.tsv"));
}

TEST_CASE("train-ser is deterministic and eval consumes its checkpoint") {
  workspace();
  REQUIRE(exists(kWork + "/corpus/manifest.tsv"));
  const std::string common = "train-ser --manifest " + kWork +
                             "/corpus/manifest.tsv --model baseline --hidden 6 --fold 0 "
                             "--set max_epochs=2 --set batch_size=8 --set augment=false "
                             "--seed 42 --threads 1 --out ";
  REQUIRE(run(common + kWork + "/run_a") == 0);
  REQUIRE(run(common + kWork + "/run_b") == 0);
  CHECK(slurp(kWork + "/run_a/checkpoint.bin") == slurp(kWork + "/run_b/checkpoint.bin"));
  CHECK(slurp(kWork + "/run_a/history.csv") == slurp(kWork + "/run_b/history.csv"));
  CHECK(slurp(kWork + "/run_a/effective-config.txt") == slurp(kWork + "/run_b/effective-config.txt"));

  REQUIRE(run("eval --checkpoint " + kWork + "/run_a/checkpoint.bin --manifest " + kWork +
              "/corpus/manifest.tsv --fold 0 --out " + kWork + "/eval_a") == 0);
  CHECK(exists(kWork + "/eval_a/metrics.txt"));
  CHECK(exists(kWork + "/eval_a/metrics.jsonl"));
  CHECK(exists(kWork + "/eval_a/confusion.csv"));

  // Embedding export from the trained baseline.
  REQUIRE(run("export-embeddings --checkpoint " + kWork + "/run_a/checkpoint.bin --manifest " +
              kWork + "/corpus/manifest.tsv --stage pooled --out " + kWork + "/emb") == 0);
  CHECK(exists(kWork + "/emb/embeddings.tsv"));
}

TEST_CASE("train-asr, probe, and asr eval work end to end") {
  workspace();
  REQUIRE(exists(kWork + "/asr_corpus/manifest.tsv"));
  REQUIRE(run("train-asr --manifest " + kWork + "/asr_corpus/manifest.tsv --hidden 4 --channels 2 "
              "--set max_epochs=1 --set batch_size=8 --set augment=false --out " +
              kWork + "/asr_run") == 0);
  CHECK(exists(kWork + "/asr_run/checkpoint.bin"));
  CHECK(exists(kWork + "/asr_run/history.csv"));
  const std::string history = slurp(kWork + "/asr_run/history.csv");
  CHECK(history.find("epoch,train_loss,val_loss,lr,val_cer") == 0);

  REQUIRE(run("eval --checkpoint " + kWork + "/asr_run/checkpoint.bin --manifest " + kWork +
              "/asr_corpus/manifest.tsv --out " + kWork + "/asr_eval") == 0);
  CHECK(exists(kWork + "/asr_eval/cer.txt"));

  REQUIRE(run("probe --checkpoint " + kWork + "/asr_run/checkpoint.bin --manifest " + kWork +
              "/asr_corpus/manifest.tsv --layer 2 --unit 1 --out " + kWork + "/probe") == 0);
  CHECK(exists(kWork + "/probe/probe.tsv"));

  // Transfer training against the pretrained checkpoint.
  REQUIRE(run("train-ser --manifest " + kWork + "/corpus/manifest.tsv --model ft-mp --tap 2 "
              "--asr-checkpoint " + kWork + "/asr_run/checkpoint.bin --fold 0 "
              "--set max_epochs=1 --set batch_size=8 --set augment=false --out " +
              kWork + "/ftmp_run") == 0);
  CHECK(exists(kWork + "/ftmp_run/checkpoint.bin"));
}

TEST_CASE("contract and data errors exit 1 with messages") {
  workspace();
  // SER checkpoint against an ASR manifest: spec mismatch.
  CHECK(run("eval --checkpoint " + kWork + "/run_a/checkpoint.bin --manifest " + kWork +
            "/asr_corpus/manifest.tsv --fold 0 --out " + kWork + "/bad_eval") == 1);

  // Transfer training without an ASR checkpoint.
  CHECK(run("train-ser --manifest " + kWork + "/corpus/manifest.tsv --model ft-rnn --out " +
            kWork + "/bad_run") == 1);
  const std::string err = slurp(kWork + "/stderr.txt");
  CHECK(err.find("asr-checkpoint") != std::string::npos);

  // Config file errors carry the offending line.
  std::ofstream bad(kWork + "/bad.toml");
  bad << "clip_norm = -1\n";
  bad.close();
  CHECK(run("train-ser --manifest " + kWork + "/corpus/manifest.tsv --config " + kWork +
            "/bad.toml --out " + kWork + "/bad_cfg") == 1);
  const std::string cfg_err = slurp(kWork + "/stderr.txt");
  CHECK(cfg_err.find("bad.toml:1") != std::string::npos);

  std::ofstream bad2(kWork + "/bad2.toml");
  bad2 << "# comment\ntempo_max = 1.5\n";
  bad2.close();
  CHECK(run("train-ser --manifest " + kWork + "/corpus/manifest.tsv --config " + kWork +
            "/bad2.toml --out " + kWork + "/bad_cfg2") == 1);
  CHECK(slurp(kWork + "/stderr.txt").find("bad2.toml:2") != std::string::npos);

  std::ofstream bad3(kWork + "/bad3.toml");
  bad3 << "not_a_key = 3\n";
  bad3.close();
  CHECK(run("train-ser --manifest " + kWork + "/corpus/manifest.tsv --config " + kWork +
            "/bad3.toml --out " + kWork + "/bad_cfg3") == 1);
  CHECK(slurp(kWork + "/stderr.txt").find("unknown key") != std::string::npos);

  // Missing checkpoint file.
  CHECK(run("eval --checkpoint " + kWork + "/nope.bin --manifest " + kWork +
            "/corpus/manifest.tsv --out " + kWork + "/bad_eval2") == 1);
}
