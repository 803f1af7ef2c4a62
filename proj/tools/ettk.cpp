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

// Command-line front end: synthesize corpora, extract features, train the
// ASR/SER models, evaluate, probe neurons, export embeddings.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ettk/config.hpp"
#include "ettk/metrics.hpp"
#include "ettk/train.hpp"

namespace fs = std::filesystem;
using namespace ettk;

namespace {

struct CommonArgs {
  std::string out;
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = -1;        // -1: use ETTK_THREADS or config
  long long seed = -1;     // -1: use config
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out = true) {
  auto* out = cmd->add_option("--out", args.out, "output directory for all artifacts");
  if (needs_out) out->required();
  cmd->add_option("--config", args.config_path, "flat key=value config file");
  cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
  cmd->add_option("--threads", args.threads, "worker threads (default 1; env ETTK_THREADS)");
  cmd->add_option("--seed", args.seed, "run seed (overrides config)");
}

TrainConfig effective_config(const CommonArgs& args) {
  TrainConfig cfg = args.config_path.empty() ? TrainConfig{} : parse_config_file(args.config_path);
  cfg = apply_overrides(std::move(cfg), args.overrides);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads >= 0) {
    cfg.threads = args.threads;
  } else if (const char* env = std::getenv("ETTK_THREADS")) {
    cfg.threads = std::max(0, std::atoi(env));
  }
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
}

void echo_config(const std::string& out_dir, const TrainConfig& cfg,
                 const std::string& extra) {
  fs::create_directories(out_dir);
  write_text(out_dir + "/effective-config.txt", config_to_text(cfg) + extra);
}

/// Labeled SER samples with their audio, manifest-filtered.
struct SerCorpusOnDisk {
  std::vector<LabeledUtterance> samples;
  std::vector<AudioClip> clips;
};

SerCorpusOnDisk load_ser_corpus(const std::string& manifest_path) {
  SerCorpusOnDisk corpus;
  corpus.samples = filter_emotion_records(read_ser_manifest(manifest_path));
  for (const auto& s : corpus.samples) {
    corpus.clips.push_back(load_wav(resolve_audio_path(manifest_path, s.audio_path)));
  }
  return corpus;
}

AsrDataset load_asr_dataset(const std::string& manifest_path) {
  AsrDataset data;
  for (const auto& e : filter_long_utterances(read_asr_manifest(manifest_path))) {
    data.clips.push_back(load_wav(resolve_audio_path(manifest_path, e.audio_path)));
    data.transcripts.push_back(e.transcript);
    data.durations.push_back(e.duration_s);
  }
  return data;
}

SerDataset all_samples_dataset(const SerCorpusOnDisk& corpus) {
  SerDataset data;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    data.clips.push_back(corpus.clips[i]);
    data.labels.push_back(emotion_class_index(corpus.samples[i].label));
    data.durations.push_back(corpus.samples[i].duration_s);
  }
  return data;
}

int cmd_synth_data(const CommonArgs& args, const std::string& kind, Index count, Index sessions,
                   double snr) {
  TrainConfig cfg = effective_config(args);
  std::string extra = "command = synth-data\nkind = " + kind + "\n";
  if (kind == "asr") {
    SynthAsrSpec spec = SynthAsrSpec::defaults();
    spec.num_utterances = count;
    spec.snr_db = snr;
    write_asr_corpus(args.out, spec, cfg.seed);
  } else if (kind == "ser") {
    SynthSerSpec spec = SynthSerSpec::defaults();
    spec.clips_per_class = count;
    spec.num_sessions = sessions;
    spec.snr_db = snr;
    write_ser_corpus(args.out, spec, cfg.seed);
  } else {
    throw ContractError("synth-data: kind must be asr or ser, got '" + kind + "'");
  }
  echo_config(args.out, cfg, extra);
  std::printf("wrote %s corpus and manifest under %s\n", kind.c_str(), args.out.c_str());
  return 0;
}

int cmd_features(const CommonArgs& args, const std::string& manifest, const std::string& kind,
                 const std::string& format) {
  TrainConfig cfg = effective_config(args);
  fs::create_directories(args.out);
  std::vector<std::pair<std::string, Tensor<float>>> feats;
  if (kind == "asr") {
    for (const auto& e : read_asr_manifest(manifest)) {
      feats.emplace_back(e.audio_path,
                         asr_features<float>(load_wav(resolve_audio_path(manifest, e.audio_path))));
    }
  } else if (kind == "ser") {
    for (const auto& r : read_ser_manifest(manifest)) {
      feats.emplace_back(r.audio_path,
                         ser_features<float>(load_wav(resolve_audio_path(manifest, r.audio_path))));
    }
  } else {
    throw ContractError("features: kind must be asr or ser, got '" + kind + "'");
  }
  if (format == "bin") {
    Checkpoint dump;
    dump.metadata["kind"] = "feature-dump";
    dump.metadata["feature_kind"] = kind;
    dump.metadata["seed"] = cfg.seed;
    for (auto& [name, tensor] : feats) {
      std::vector<std::pair<std::string, Tensor<float>*>> one{{name, &tensor}};
      add_tensors(dump, one);
    }
    save_checkpoint(args.out + "/features.bin", dump);
  } else if (format == "tsv") {
    char buf[32];
    for (std::size_t i = 0; i < feats.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "feat_%05zu.tsv", i);
      std::string text = "# " + feats[i].first + "\n";
      const Tensor<float>& m = feats[i].second;
      char num[32];
      for (Index t = 0; t < m.extent(0); ++t) {
        for (Index d = 0; d < m.extent(1); ++d) {
          std::snprintf(num, sizeof(num), "%.9g", static_cast<double>(m.at(t, d)));
          text += num;
          text += d + 1 < m.extent(1) ? '\t' : '\n';
        }
      }
      write_text(args.out + "/" + buf, text);
    }
  } else {
    throw ContractError("features: format must be bin or tsv, got '" + format + "'");
  }
  echo_config(args.out, cfg, "command = features\nkind = " + kind + "\nformat = " + format + "\n");
  std::printf("extracted %zu feature sequences\n", feats.size());
  return 0;
}

int cmd_train_asr(const CommonArgs& args, const std::string& manifest,
                  const std::string& val_manifest, Index hidden, Index channels) {
  TrainConfig cfg = effective_config(args);
  AsrNetSpec spec = AsrNetSpec::defaults();
  if (hidden > 0) spec.hidden = hidden;
  if (channels > 0) {
    for (auto& c : spec.conv) c.channels = channels;
  }
  AsrDataset train = load_asr_dataset(manifest);
  AsrDataset val;
  if (!val_manifest.empty()) {
    val = load_asr_dataset(val_manifest);
  } else {
    // Deterministic 1-in-10 holdout (denser for tiny corpora).
    const Index stride = std::max<Index>(2, std::min<Index>(10, train.size()));
    AsrDataset rest;
    for (Index i = 0; i < train.size(); ++i) {
      AsrDataset& dst = (i % stride == stride - 1) ? val : rest;
      dst.clips.push_back(train.clips[static_cast<std::size_t>(i)]);
      dst.transcripts.push_back(train.transcripts[static_cast<std::size_t>(i)]);
      dst.durations.push_back(train.durations[static_cast<std::size_t>(i)]);
    }
    train = std::move(rest);
  }
  AsrTrainResult result = train_asr(spec, train, val, cfg);
  echo_config(args.out, cfg,
              "command = train-asr\nhidden = " + std::to_string(spec.hidden) + "\n");
  save_checkpoint(args.out + "/checkpoint.bin", result.best);
  write_text(args.out + "/history.csv", history_csv(result.history, true));
  std::printf("best val cer %.4f at epoch %lld; checkpoint + history written to %s\n",
              result.history.best_val, static_cast<long long>(result.history.best_epoch),
              args.out.c_str());
  return 0;
}

int cmd_train_ser(const CommonArgs& args, const std::string& manifest, const std::string& model,
                  Index tap, Index hidden, const std::string& asr_ckpt_path, Index fold_id) {
  TrainConfig cfg = effective_config(args);
  SerModelChoice choice;
  choice.kind = model;
  choice.tap_layer = tap;
  if (hidden > 0) choice.ser.hidden = hidden;

  AsrNet<float> asr;
  const bool is_transfer = model != "baseline";
  if (is_transfer) {
    if (asr_ckpt_path.empty()) {
      throw ContractError("train-ser: --asr-checkpoint is required for model '" + model + "'");
    }
    asr = asr_from_checkpoint<float>(load_checkpoint(asr_ckpt_path));
  }

  SerCorpusOnDisk corpus = load_ser_corpus(manifest);
  auto folds = loso_splits(corpus.samples);
  if (fold_id < 0 || fold_id >= static_cast<Index>(folds.size())) {
    throw ContractError("train-ser: fold " + std::to_string(fold_id) + " outside [0, " +
                        std::to_string(folds.size()) + ")");
  }
  FoldDatasets split = split_by_fold(corpus.samples, corpus.clips, folds[static_cast<std::size_t>(fold_id)]);

  SerTrainResult result = train_ser(choice, is_transfer ? &asr : nullptr, split.train, split.val, cfg);
  echo_config(args.out, cfg,
              "command = train-ser\nmodel = " + model + "\ntap = " + std::to_string(tap) +
                  "\nfold = " + std::to_string(fold_id) + "\nhidden = " +
                  std::to_string(choice.ser.hidden) + "\n");
  save_checkpoint(args.out + "/checkpoint.bin", result.best);
  write_text(args.out + "/history.csv", history_csv(result.history, false));
  std::printf("best val loss %.4f at epoch %lld; checkpoint + history written to %s\n",
              result.history.best_val, static_cast<long long>(result.history.best_epoch),
              args.out.c_str());
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& ckpt_path, const std::string& manifest,
             Index fold_id, bool eval_all) {
  TrainConfig cfg = effective_config(args);
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  fs::create_directories(args.out);
  if (ckpt.kind() == "asr") {
    AsrNet<float> net = asr_from_checkpoint<float>(ckpt);
    AsrDataset data = load_asr_dataset(manifest);
    const double cer = evaluate_asr_cer(net, data, cfg.threads);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "cer %.6f\n", cer);
    write_text(args.out + "/cer.txt", buf);
    echo_config(args.out, cfg, "command = eval\nmodel = asr\n");
    std::printf("%s", buf);
    return 0;
  }
  SerModel<float> model = ser_model_from_checkpoint<float>(ckpt);
  SerCorpusOnDisk corpus = load_ser_corpus(manifest);
  SerDataset test;
  if (eval_all) {
    test = all_samples_dataset(corpus);
  } else {
    auto folds = loso_splits(corpus.samples);
    if (fold_id < 0 || fold_id >= static_cast<Index>(folds.size())) {
      throw ContractError("eval: fold " + std::to_string(fold_id) + " outside [0, " +
                          std::to_string(folds.size()) + ")");
    }
    test = split_by_fold(corpus.samples, corpus.clips, folds[static_cast<std::size_t>(fold_id)]).test;
  }
  SerEvaluation eval = evaluate_ser(model, test, cfg.threads);
  eval.report.fold_id = eval_all ? -1 : static_cast<int>(fold_id);
  eval.report.seed = cfg.seed;
  write_text(args.out + "/metrics.txt", metrics_table(eval.report, emotion_classes()));
  write_text(args.out + "/metrics.jsonl", metrics_record(eval.report) + "\n");
  write_text(args.out + "/confusion.csv", confusion_csv(eval.confusion, emotion_classes()));
  echo_config(args.out, cfg,
              "command = eval\nmodel = " + ckpt.kind() + "\nfold = " +
                  (eval_all ? std::string("all") : std::to_string(fold_id)) + "\n");
  std::printf("%s", metrics_table(eval.report, emotion_classes()).c_str());
  return 0;
}

int cmd_probe(const CommonArgs& args, const std::string& ckpt_path, const std::string& manifest,
              const std::string& manifest_kind, Index layer, Index unit) {
  TrainConfig cfg = effective_config(args);
  AsrNet<float> net = asr_from_checkpoint<float>(load_checkpoint(ckpt_path));
  std::vector<AudioClip> clips;
  std::vector<std::string> ids;
  if (manifest_kind == "asr") {
    for (const auto& e : read_asr_manifest(manifest)) {
      clips.push_back(load_wav(resolve_audio_path(manifest, e.audio_path)));
      ids.push_back(e.audio_path);
    }
  } else if (manifest_kind == "ser") {
    for (const auto& r : read_ser_manifest(manifest)) {
      clips.push_back(load_wav(resolve_audio_path(manifest, r.audio_path)));
      ids.push_back(r.audio_path);
    }
  } else {
    throw ContractError("probe: manifest-kind must be asr or ser");
  }
  ProbeResult probe = neuron_probe(net, clips, layer, unit);
  std::string tsv = "clip\tpearson_r\n";
  char buf[64];
  for (std::size_t i = 0; i < probe.per_clip.size(); ++i) {
    tsv += ids[i];
    if (probe.per_clip[i]) {
      std::snprintf(buf, sizeof(buf), "\t%.6f\n", *probe.per_clip[i]);
    } else {
      std::snprintf(buf, sizeof(buf), "\tabsent\n");
    }
    tsv += buf;
  }
  if (probe.mean) {
    std::snprintf(buf, sizeof(buf), "mean\t%.6f\n", *probe.mean);
  } else {
    std::snprintf(buf, sizeof(buf), "mean\tabsent\n");
  }
  tsv += buf;
  fs::create_directories(args.out);
  write_text(args.out + "/probe.tsv", tsv);
  echo_config(args.out, cfg,
              "command = probe\nlayer = " + std::to_string(layer) + "\nunit = " +
                  std::to_string(unit) + "\n");
  std::printf("%s", buf);
  return 0;
}

int cmd_export_embeddings(const CommonArgs& args, const std::string& ckpt_path,
                          const std::string& manifest, const std::string& stage_name) {
  TrainConfig cfg = effective_config(args);
  SerModel<float> model = ser_model_from_checkpoint<float>(load_checkpoint(ckpt_path));
  SerCorpusOnDisk corpus = load_ser_corpus(manifest);

  EmbeddingStage stage;
  if (stage_name == "pooled") {
    stage.pooled = true;
  } else if (stage_name.rfind("tap-", 0) == 0) {
    stage.pooled = false;
    stage.tap_layer = std::atoll(stage_name.c_str() + 4);
  } else {
    throw ContractError("export-embeddings: stage must be pooled or tap-<n>");
  }

  std::vector<std::string> ids, labels;
  for (const auto& s : corpus.samples) {
    ids.push_back(s.audio_path);
    labels.push_back(s.label);
  }
  const std::string tsv = export_embeddings(model, corpus.clips, ids, labels, stage);
  fs::create_directories(args.out);
  write_text(args.out + "/embeddings.tsv", tsv);
  echo_config(args.out, cfg, "command = export-embeddings\nstage = " + stage_name + "\n");
  std::printf("wrote %zu embedding rows\n", corpus.samples.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech emotion transfer toolkit"};
  app.require_subcommand(1);

  CommonArgs synth_args, feat_args, tasr_args, tser_args, eval_args, probe_args, emb_args;

  auto* synth = app.add_subcommand("synth-data", "generate a synthetic corpus with manifest");
  std::string synth_kind = "ser";
  Index synth_count = 100, synth_sessions = 5;
  double synth_snr = 18.0;
  synth->add_option("--kind", synth_kind, "asr or ser")->required();
  synth->add_option("--count", synth_count, "utterances (asr) or clips per class (ser)");
  synth->add_option("--sessions", synth_sessions, "ser sessions (2 speakers each)");
  synth->add_option("--snr", synth_snr, "signal-to-noise ratio in dB");
  add_common(synth, synth_args);

  auto* features = app.add_subcommand("features", "extract features for a manifest");
  std::string feat_manifest, feat_kind = "ser", feat_format = "bin";
  features->add_option("--manifest", feat_manifest, "input manifest")->required();
  features->add_option("--kind", feat_kind, "asr (spectrogram) or ser (mfcc+deltas+pitch)");
  features->add_option("--format", feat_format, "bin or tsv");
  add_common(features, feat_args);

  auto* train_asr_cmd = app.add_subcommand("train-asr", "train the transcription network");
  std::string tasr_manifest, tasr_val;
  Index tasr_hidden = 0, tasr_channels = 0;
  train_asr_cmd->add_option("--manifest", tasr_manifest, "training manifest")->required();
  train_asr_cmd->add_option("--val-manifest", tasr_val, "validation manifest (default: 1-in-10 holdout)");
  train_asr_cmd->add_option("--hidden", tasr_hidden, "GRU width (default 256)");
  train_asr_cmd->add_option("--channels", tasr_channels, "conv channels (default 32)");
  add_common(train_asr_cmd, tasr_args);

  auto* train_ser_cmd = app.add_subcommand("train-ser", "train an emotion model on a LOSO fold");
  std::string tser_manifest, tser_model = "baseline", tser_asr;
  Index tser_tap = 2, tser_hidden = 0, tser_fold = 0;
  train_ser_cmd->add_option("--manifest", tser_manifest, "emotion manifest")->required();
  train_ser_cmd->add_option("--model", tser_model, "baseline | ft-mp | ft-rnn | progressive");
  train_ser_cmd->add_option("--tap", tser_tap, "ASR layer to tap (1-5)");
  train_ser_cmd->add_option("--hidden", tser_hidden, "emotion GRU width (default 96)");
  train_ser_cmd->add_option("--asr-checkpoint", tser_asr, "pretrained ASR checkpoint");
  train_ser_cmd->add_option("--fold", tser_fold, "LOSO fold id");
  add_common(train_ser_cmd, tser_args);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against a manifest");
  std::string eval_ckpt, eval_manifest;
  Index eval_fold = 0;
  bool eval_all = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "evaluation manifest")->required();
  eval_cmd->add_option("--fold", eval_fold, "LOSO fold whose test speaker to score");
  eval_cmd->add_flag("--all", eval_all, "score every sample instead of a fold");
  add_common(eval_cmd, eval_args);

  auto* probe_cmd = app.add_subcommand("probe", "correlate one GRU unit with loudness");
  std::string probe_ckpt, probe_manifest, probe_kind = "asr";
  Index probe_layer = 2, probe_unit = 0;
  probe_cmd->add_option("--checkpoint", probe_ckpt, "ASR checkpoint")->required();
  probe_cmd->add_option("--manifest", probe_manifest, "clips to probe")->required();
  probe_cmd->add_option("--manifest-kind", probe_kind, "asr or ser manifest format");
  probe_cmd->add_option("--layer", probe_layer, "recurrent layer (1-5)");
  probe_cmd->add_option("--unit", probe_unit, "activation column in [0, 2H)");
  add_common(probe_cmd, probe_args);

  auto* emb_cmd = app.add_subcommand("export-embeddings", "utterance embeddings as TSV");
  std::string emb_ckpt, emb_manifest, emb_stage = "pooled";
  emb_cmd->add_option("--checkpoint", emb_ckpt, "SER model checkpoint")->required();
  emb_cmd->add_option("--manifest", emb_manifest, "emotion manifest")->required();
  emb_cmd->add_option("--stage", emb_stage, "pooled or tap-<n>");
  add_common(emb_cmd, emb_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth_data(synth_args, synth_kind, synth_count, synth_sessions, synth_snr);
    }
    if (features->parsed()) {
      return cmd_features(feat_args, feat_manifest, feat_kind, feat_format);
    }
    if (train_asr_cmd->parsed()) {
      return cmd_train_asr(tasr_args, tasr_manifest, tasr_val, tasr_hidden, tasr_channels);
    }
    if (train_ser_cmd->parsed()) {
      return cmd_train_ser(tser_args, tser_manifest, tser_model, tser_tap, tser_hidden, tser_asr,
                           tser_fold);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_args, eval_ckpt, eval_manifest, eval_fold, eval_all);
    }
    if (probe_cmd->parsed()) {
      return cmd_probe(probe_args, probe_ckpt, probe_manifest, probe_kind, probe_layer, probe_unit);
    }
    if (emb_cmd->parsed()) {
      return cmd_export_embeddings(emb_args, emb_ckpt, emb_manifest, emb_stage);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
