// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssir/binary_io.hpp"
#include "ssir/checkpoint.hpp"
#include "ssir/container.hpp"
#include "ssir/dataset.hpp"
#include "ssir/errors.hpp"
#include "ssir/evaluation.hpp"
#include "ssir/runtime.hpp"
#include "ssir/trainer.hpp"

#ifndef SSIR_VERSION
#define SSIR_VERSION "0.0.0"
#endif

namespace ssir::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return SSIR_VERSION; }

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("SSIR_SEED");
  if (env == nullptr || *env == '\0') return flag;
  char* end = nullptr;
  errno = 0;
  const auto v = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0') throw InvalidParameter("SSIR_SEED is not an unsigned integer: " + std::string(env));
  return v;
}

// Collects what a run did and writes run_manifest.json at the end.
class Run {
 public:
  Run(std::string command, std::vector<std::string> argv, fs::path dir)
      : command_(std::move(command)), argv_(std::move(argv)), dir_(std::move(dir)), started_(utc_now()) {}

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_config(json config) { config_ = std::move(config); }
  void add_input(const std::string& name, const fs::path& p) { inputs_[name] = p.string(); }
  void add_artifact(const std::string& name, const fs::path& p) { artifacts_[name] = p.string(); }

  void finish() {
    json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["config"] = config_;
    m["seed"] = seed_;
    m["inputs"] = inputs_;
    m["artifacts"] = artifacts_;
    m["tool_version"] = version();
    m["started_at"] = started_;
    m["finished_at"] = utc_now();
    io::write_file(dir_ / "run_manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  fs::path dir_;
  std::string started_;
  std::uint64_t seed_ = 0;
  json config_ = json::object();
  json inputs_ = json::object();
  json artifacts_ = json::object();
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

struct Configs {
  train::TrainConfig train;
  model::ModelConfig model;
};

Configs load_configs(const std::string& path) {
  Configs c;
  if (path.empty()) return c;
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
    if (!j.is_object()) throw FormatError("config must be a JSON object", 0);
    if (j.contains("train")) c.train = j.at("train").get<train::TrainConfig>();
    if (j.contains("model")) c.model = j.at("model").get<model::ModelConfig>();
    for (const auto& [key, value] : j.items())
      if (key != "train" && key != "model") throw FormatError("unknown config section '" + key + "'", 0);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed config: ") + e.what(), 0);
  }
  return c;
}

json config_snapshot(const Configs& c) { return {{"train", c.train}, {"model", c.model}}; }

std::string join_tokens(const data::Vocabulary& vocab, std::span<const int> ids) {
  std::string out;
  for (int id : ids) out += (out.empty() ? "" : " ") + vocab.token(id);
  return out;
}

void write_csv(const fs::path& path, const std::vector<std::tuple<std::string, double, double>>& rows) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "group,mean,std\n";
  for (const auto& [group, mean, sd] : rows) os << group << ',' << mean << ',' << sd << '\n';
  io::write_file(path, os.str());
}

std::vector<data::LabeledSample> originals(const data::DatasetSplit& split) {
  std::vector<data::LabeledSample> out;
  for (const auto* part : {&split.train, &split.validation, &split.test})
    for (const auto& s : *part)
      if (s.kind != data::SampleKind::augmented) out.push_back(s);
  return out;
}

void check_same_vocabulary(const model::Checkpoint& ckpt, const data::DatasetSplit& split) {
  if (ckpt.vocabulary.hash() != split.vocabulary.hash())
    throw FormatError("model vocabulary " + ckpt.vocabulary.hash().substr(0, 12) +
                          " does not match dataset vocabulary " + split.vocabulary.hash().substr(0, 12),
                      0);
}

// ---- subcommands ----

struct GenArgs {
  std::string out;
  int participants = 4;
  int samples_per_word = 100;
  int repeats_per_phrase = 30;
  int augment_factor = data::kDefaultAugmentFactor;
  std::uint64_t seed = 0;
};

int cmd_gen(const GenArgs& a, const std::vector<std::string>& argv) {
  const fs::path dir(a.out);
  const auto seed = effective_seed(a.seed);
  if (a.participants < 1) throw InvalidParameter("--participants must be >= 1");
  if (a.samples_per_word < 1) throw InvalidParameter("--samples-per-word must be >= 1");
  ensure_dir(dir);
  Run run("gen", argv, dir);
  run.set_seed(seed);
  const auto vocab = data::Vocabulary::standard();
  auto spec = data::CorpusSpec::standard(vocab);
  spec.participants = a.participants;
  spec.samples_per_word = a.samples_per_word;
  spec.repeats_per_phrase = a.repeats_per_phrase;
  const data::SynthesisConfig synth;
  run.set_config({{"participants", spec.participants},
                  {"samples_per_word", spec.samples_per_word},
                  {"repeats_per_phrase", spec.repeats_per_phrase},
                  {"word_len", spec.word_len},
                  {"sentence_len", spec.sentence_len},
                  {"augment_factor", a.augment_factor},
                  {"synthesis",
                   {{"world_seed", synth.world_seed},
                    {"jitter_std", synth.jitter_std},
                    {"participant_shift", synth.participant_shift}}}});
  auto corpus = data::generate_corpus(vocab, spec, seed, synth);
  const auto split = data::build_splits(vocab, std::move(corpus), seed, a.augment_factor);
  const fs::path out = dir / "dataset.ssir";
  data::write_container(split, out);
  run.add_artifact("dataset", out);
  run.finish();
  std::cout << "wrote " << out.string() << ": " << split.train.size() << " train, " << split.validation.size()
            << " validation, " << split.test.size() << " test samples\n";
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<int> channels;
  std::vector<int> axes;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  auto cfg = load_configs(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.train.seed = effective_seed(cfg.train.seed);
  const fs::path dir(a.out);
  const auto split = data::read_container(a.data);
  auto inputs = signal::InputSelection::all();
  if (!a.channels.empty()) inputs.channels = a.channels;
  if (!a.axes.empty()) inputs.axes = a.axes;
  for (int c : inputs.channels)
    if (c < 0 || c > 5) throw InvalidParameter("channel index outside 0..5");
  for (int x : inputs.axes)
    if (x < 0 || x > 5) throw InvalidParameter("axis index outside 0..5");
  cfg.model.input_dim = inputs.feature_dim();
  cfg.model.vocab_size = static_cast<std::size_t>(split.vocabulary.size());
  cfg.train.validate();
  cfg.model.validate();
  ensure_dir(dir);

  Run run("train", argv, dir);
  run.set_seed(cfg.train.seed);
  auto snapshot = config_snapshot(cfg);
  snapshot["inputs"] = {{"channels", inputs.channels}, {"axes", inputs.axes}};
  run.set_config(snapshot);
  run.add_input("data", a.data);

  std::string log_text;
  train::TrainOptions opts;
  opts.inputs = inputs;
  opts.on_epoch = [&](const train::EpochRecord& r) {
    log_text += json(r).dump() + "\n";
    if (!a.quiet)
      std::cerr << "epoch " << r.epoch << " loss " << r.train_loss << " val_word_accuracy " << r.val_word_accuracy
                << " (" << std::fixed << std::setprecision(1) << r.wall_time_s << "s)" << std::defaultfloat << "\n";
  };
  auto result = train::train(split, cfg.train, cfg.model, opts);

  model::Checkpoint ckpt;
  ckpt.params = std::move(result.params);
  ckpt.vocabulary = split.vocabulary;
  ckpt.inputs = inputs;
  ckpt.seed = cfg.train.seed;
  ckpt.training = {{"train_config", cfg.train},
                   {"best_epoch", result.best_epoch},
                   {"best_val_word_accuracy", result.best_val_accuracy},
                   {"epochs_run", result.log.size()},
                   {"dataset_seed", split.seed},
                   {"validation_decoder", "greedy"}};
  const fs::path model_path = dir / "model.ssim";
  const fs::path log_path = dir / "train_log.jsonl";
  model::save_checkpoint(ckpt, model_path);
  io::write_file(log_path, log_text);
  run.add_artifact("model", model_path);
  run.add_artifact("train_log", log_path);
  run.finish();
  std::cout << "best epoch " << result.best_epoch << " validation word accuracy " << result.best_val_accuracy
            << "\nwrote " << model_path.string() << " (payload sha256 " << model::payload_hash(ckpt.params) << ")\n";
  return kOk;
}

struct EvalArgs {
  std::string data;
  std::string model;
  std::string report;
  std::string split = "test";
  int beam_width = 0;
};

const std::vector<data::LabeledSample>& pick_split(const data::DatasetSplit& split, const std::string& name) {
  if (name == "test") return split.test;
  if (name == "validation") return split.validation;
  throw InvalidParameter("--split must be 'test' or 'validation'");
}

int beam_from(const model::Checkpoint& ckpt, int flag) {
  if (flag > 0) return flag;
  if (ckpt.training.contains("train_config"))
    return ckpt.training.at("train_config").value("beam_width", train::TrainConfig{}.beam_width);
  return train::TrainConfig{}.beam_width;
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  const fs::path report_path(a.report);
  const fs::path dir = report_path.has_parent_path() ? report_path.parent_path() : fs::path(".");
  const auto split = data::read_container(a.data);
  auto ckpt = model::load_checkpoint(a.model);
  check_same_vocabulary(ckpt, split);
  const auto& samples = pick_split(split, a.split);
  if (samples.empty()) throw InsufficientData("the " + a.split + " split is empty");
  const int beam = beam_from(ckpt, a.beam_width);
  ensure_dir(dir);
  Run run("eval", argv, dir);
  run.set_seed(ckpt.seed);
  run.set_config({{"split", a.split}, {"beam_width", beam}});
  run.add_input("data", a.data);
  run.add_input("model", a.model);

  std::vector<std::vector<int>> refs;
  for (const auto& s : samples) refs.push_back(s.labels);
  const auto decoded = eval::decode_samples(ckpt.params, samples, ckpt.inputs, beam);
  std::vector<std::vector<int>> hyps;
  for (const auto& d : decoded) hyps.push_back(d.ids);

  eval::EvalReport report;
  report.samples = samples.size();
  report.decoder = beam <= 1 ? "greedy" : "beam(width=" + std::to_string(beam) + ")";
  report.word_accuracy = eval::word_accuracy(refs, hyps);
  report.insertion_rate = eval::insertion_rate(refs, hyps);
  report.per_length = eval::eval_by_length(refs, hyps);

  std::map<int, std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>>> by_participant;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_participant[samples[i].participant].first.push_back(refs[i]);
    by_participant[samples[i].participant].second.push_back(hyps[i]);
  }
  std::vector<std::tuple<std::string, double, double>> participant_rows;
  for (const auto& [p, rh] : by_participant) {
    const double acc = eval::word_accuracy(rh.first, rh.second);
    report.per_participant[p].standard = acc;
    participant_rows.emplace_back(std::to_string(p), acc, 0.0);
  }

  auto j = eval::to_json(report);
  j["split"] = a.split;
  j["checkpoint_selection"] = "best validation word accuracy (greedy)";
  io::write_file(report_path, j.dump(2) + "\n");
  std::vector<std::tuple<std::string, double, double>> length_rows;
  for (const auto& [len, g] : report.per_length) length_rows.emplace_back(std::to_string(len), g.mean, g.std);
  const fs::path length_csv = dir / "accuracy_by_length.csv";
  const fs::path participant_csv = dir / "accuracy_by_participant.csv";
  write_csv(length_csv, length_rows);
  write_csv(participant_csv, participant_rows);
  run.add_artifact("report", report_path);
  run.add_artifact("accuracy_by_length", length_csv);
  run.add_artifact("accuracy_by_participant", participant_csv);
  run.finish();
  std::cout << "word accuracy " << report.word_accuracy << " over " << report.samples << " samples ("
            << report.decoder << ")\n";
  for (const auto& [len, g] : report.per_length)
    std::cout << "  length " << len << ": mean " << g.mean << " std " << g.std << " n=" << g.count << "\n";
  return kOk;
}

struct DecodeArgs {
  std::string model;
  std::string input;
  std::optional<std::uint64_t> sample_id;
  int beam_width = 0;
};

int cmd_decode(const DecodeArgs& a) {
  auto ckpt = model::load_checkpoint(a.model);
  const auto split = data::read_container(a.input);
  check_same_vocabulary(ckpt, split);
  const data::LabeledSample* sample = nullptr;
  for (const auto* part : {&split.test, &split.validation, &split.train}) {
    for (const auto& s : *part) {
      if (!s.materialized()) continue;
      if (a.sample_id ? s.id == *a.sample_id : true) {
        sample = &s;
        break;
      }
    }
    if (sample) break;
  }
  if (sample == nullptr)
    throw InvalidParameter(a.sample_id ? "no recorded sample with id " + std::to_string(*a.sample_id)
                                       : std::string("input holds no recorded samples"));
  const int beam = beam_from(ckpt, a.beam_width);
  const auto result = eval::decode_samples(ckpt.params, std::span(sample, 1), ckpt.inputs, beam).front();
  std::cout << "sample: " << sample->id << "\n";
  std::cout << "reference: " << join_tokens(split.vocabulary, sample->labels) << "\n";
  std::cout << "transcription: " << join_tokens(ckpt.vocabulary, result.ids) << "\n";
  std::cout << "log_prob: " << std::setprecision(9) << result.log_prob << "\n";
  return kOk;
}

struct AblateArgs {
  std::string data;
  std::string out;
  std::string mode;
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_ablate(const AblateArgs& a, const std::vector<std::string>& argv) {
  const auto mode = eval::parse_ablation_mode(a.mode);
  auto cfg = load_configs(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.train.seed = effective_seed(cfg.train.seed);
  const auto split = data::read_container(a.data);
  cfg.model.vocab_size = static_cast<std::size_t>(split.vocabulary.size());
  const fs::path dir(a.out);
  ensure_dir(dir);
  Run run("ablate", argv, dir);
  run.set_seed(cfg.train.seed);
  auto snapshot = config_snapshot(cfg);
  snapshot["mode"] = a.mode;
  run.set_config(snapshot);
  run.add_input("data", a.data);

  const auto rows = eval::ablate_mode(split, cfg.train, cfg.model, mode);
  std::vector<std::tuple<std::string, double, double>> csv;
  json table = json::array();
  for (const auto& r : rows) {
    std::string idx;
    for (std::size_t i = 0; i < r.indices.size(); ++i) idx += (i ? " " : "") + std::to_string(r.indices[i]);
    csv.emplace_back(r.group + ":" + idx, r.accuracy, 0.0);
    table.push_back({{"key", r.key()}, {"group", r.group}, {"indices", r.indices}, {"accuracy", r.accuracy}});
    std::cout << r.group << " " << r.key() << " " << r.accuracy << "\n";
  }
  const fs::path csv_path = dir / ("ablation_" + a.mode + ".csv");
  const fs::path json_path = dir / ("ablation_" + a.mode + ".json");
  write_csv(csv_path, csv);
  io::write_file(json_path, table.dump(2) + "\n");
  run.add_artifact("table_csv", csv_path);
  run.add_artifact("table_json", json_path);
  run.finish();
  return kOk;
}

struct CrossArgs {
  std::string data;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t k = 5;
  int augment_factor = data::kDefaultAugmentFactor;
  std::vector<int> participants;
};

int cmd_cross(const CrossArgs& a, const std::vector<std::string>& argv) {
  auto cfg = load_configs(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.train.seed = effective_seed(cfg.train.seed);
  const auto split = data::read_container(a.data);
  cfg.model.vocab_size = static_cast<std::size_t>(split.vocabulary.size());
  cfg.model.input_dim = signal::InputSelection::all().feature_dim();
  const fs::path dir(a.out);
  ensure_dir(dir);
  Run run("cross", argv, dir);
  run.set_seed(cfg.train.seed);
  auto snapshot = config_snapshot(cfg);
  snapshot["few_shot_k"] = a.k;
  snapshot["augment_factor"] = a.augment_factor;
  run.set_config(snapshot);
  run.add_input("data", a.data);

  eval::CrossParticipantOptions opts;
  opts.few_shot_k = a.k;
  opts.augment_factor = a.augment_factor;
  opts.participants = a.participants;
  const auto corpus = originals(split);
  const auto results = eval::eval_cross_participant(split.vocabulary, corpus, cfg.train, cfg.model, opts);
  eval::EvalReport report;
  report.per_participant = results;
  std::vector<std::tuple<std::string, double, double>> csv;
  for (const auto& [p, r] : results) {
    csv.emplace_back(std::to_string(p) + ":standard", r.standard, 0.0);
    csv.emplace_back(std::to_string(p) + ":blind", r.blind, 0.0);
    csv.emplace_back(std::to_string(p) + ":few_shot", r.few_shot, 0.0);
    std::cout << "participant " << p << ": standard " << r.standard << " blind " << r.blind << " few_shot "
              << r.few_shot << "\n";
  }
  const fs::path csv_path = dir / "cross_participant.csv";
  const fs::path json_path = dir / "cross_participant.json";
  write_csv(csv_path, csv);
  io::write_file(json_path, eval::to_json(report).at("per_participant").dump(2) + "\n");
  run.add_artifact("table_csv", csv_path);
  run.add_artifact("table_json", json_path);
  run.finish();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  tune_allocator();
  CLI::App app{"Sentence recognition from facial inertial signals: data generation, training, evaluation"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "synthesize a dataset container");
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--participants", gen.participants, "number of synthetic participants")->capture_default_str();
  g->add_option("--samples-per-word", gen.samples_per_word, "recordings per word and participant")
      ->capture_default_str();
  g->add_option("--repeats-per-phrase", gen.repeats_per_phrase, "recordings per phrase or sentence and participant")
      ->capture_default_str();
  g->add_option("--augment-factor", gen.augment_factor, "training set multiplier")->capture_default_str();
  g->add_option("--seed", gen.seed, "seed (SSIR_SEED overrides)")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model on a dataset container");
  t->add_option("--data", tr.data, "dataset container")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--config", tr.config, "JSON with optional 'train' and 'model' sections");
  t->add_option("--seed", tr.seed, "seed (SSIR_SEED overrides)");
  t->add_option("--channels", tr.channels, "channel indices to use")->delimiter(',');
  t->add_option("--axes", tr.axes, "axis indices to use")->delimiter(',');
  t->add_flag("--quiet", tr.quiet, "no per-epoch progress");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a model on a dataset split");
  e->add_option("--data", ev.data, "dataset container")->required();
  e->add_option("--model", ev.model, "checkpoint")->required();
  e->add_option("--report", ev.report, "report JSON path; CSVs are written next to it")->required();
  e->add_option("--split", ev.split, "test or validation")->capture_default_str();
  e->add_option("--beam-width", ev.beam_width, "1 for greedy; default from the checkpoint");

  DecodeArgs de;
  auto* d = app.add_subcommand("decode", "transcribe one recording");
  d->add_option("--model", de.model, "checkpoint")->required();
  d->add_option("--input", de.input, "dataset container holding the recording")->required();
  d->add_option("--sample-id", de.sample_id, "recording id; default the first test recording");
  d->add_option("--beam-width", de.beam_width, "1 for greedy; default from the checkpoint");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "retrain on channel or axis subsets");
  a->add_option("--data", ab.data, "dataset container")->required();
  a->add_option("--mode", ab.mode, "channels or axes")->required()->check(CLI::IsMember({"channels", "axes"}));
  a->add_option("--out", ab.out, "output directory")->required();
  a->add_option("--config", ab.config, "JSON with optional 'train' and 'model' sections");
  a->add_option("--seed", ab.seed, "seed (SSIR_SEED overrides)");

  CrossArgs cr;
  auto* c = app.add_subcommand("cross", "standard, blind and few-shot accuracy per participant");
  c->add_option("--data", cr.data, "dataset container")->required();
  c->add_option("--out", cr.out, "output directory")->required();
  c->add_option("--config", cr.config, "JSON with optional 'train' and 'model' sections");
  c->add_option("--seed", cr.seed, "seed (SSIR_SEED overrides)");
  c->add_option("--k", cr.k, "few-shot recordings per class")->capture_default_str();
  c->add_option("--augment-factor", cr.augment_factor, "training set multiplier")->capture_default_str();
  c->add_option("--participants", cr.participants, "participants to hold out; default all")->delimiter(',');

  try {
    if (args.size() < 2) throw CLI::CallForHelp();
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 && args.size() >= 2 ? kOk : kInvalidFlags;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, args);
    if (t->parsed()) return cmd_train(tr, args);
    if (e->parsed()) return cmd_eval(ev, args);
    if (d->parsed()) return cmd_decode(de);
    if (a->parsed()) return cmd_ablate(ab, args);
    if (c->parsed()) return cmd_cross(cr, args);
  } catch (const InfeasibleTarget& err) {
    std::cerr << "error: infeasible target: " << err.what() << "\n";
    return kInfeasible;
  } catch (const FormatError& err) {
    std::cerr << "error: format: " << err.what() << "\n";
    return kFormatError;
  } catch (const IoError& err) {
    std::cerr << "error: io: " << err.what() << "\n";
    return kIoError;
  } catch (const InvalidParameter& err) {
    std::cerr << "error: invalid argument: " << err.what() << "\n";
    return kInvalidFlags;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kFailure;
  }
  return kInvalidFlags;
}

}  // namespace ssir::cli
