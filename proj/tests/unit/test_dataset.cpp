// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "ssir/container.hpp"
#include "ssir/dataset.hpp"
#include "ssir/errors.hpp"
#include "ssir/hashing.hpp"
#include "ssir/binary_io.hpp"

#include <json.hpp>

using namespace ssir;
using namespace ssir::data;

namespace {

CorpusSpec small_spec(const Vocabulary& vocab, int per_word = 20) {
  auto spec = CorpusSpec::standard(vocab);
  spec.participants = 2;
  spec.samples_per_word = per_word;
  spec.repeats_per_phrase = 10;
  return spec;
}

double stddev(const std::vector<double>& x) {
  double m = 0, ss = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

LabeledSample word_sample(std::uint64_t id, int label, std::size_t t, float base) {
  LabeledSample s;
  s.id = id;
  signal::RawWindow w(t, 6, 6);
  for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] = base + static_cast<float>(i % 7);
  s.data = std::move(w);
  s.labels = {label};
  s.kind = SampleKind::word;
  return s;
}

bool same_sample(const LabeledSample& a, const LabeledSample& b) {
  if (a.id != b.id || a.labels != b.labels || a.participant != b.participant || a.kind != b.kind ||
      a.recipe != b.recipe || a.materialized() != b.materialized())
    return false;
  if (!a.materialized()) return true;
  const auto& wa = a.raw();
  const auto& wb = b.raw();
  return wa.steps == wb.steps && wa.channels == wb.channels && wa.axes == wb.axes &&
         wa.sample_rate_hz == wb.sample_rate_hz &&
         std::memcmp(wa.values.data(), wb.values.data(), 4 * wa.values.size()) == 0;
}

bool same_split(const DatasetSplit& a, const DatasetSplit& b) {
  if (!(a.vocabulary == b.vocabulary) || a.seed != b.seed) return false;
  for (auto [pa, pb] : {std::pair{&a.train, &b.train}, {&a.validation, &b.validation}, {&a.test, &b.test}}) {
    if (pa->size() != pb->size()) return false;
    for (std::size_t i = 0; i < pa->size(); ++i)
      if (!same_sample((*pa)[i], (*pb)[i])) return false;
  }
  return true;
}

std::string with_manifest(const std::string& bytes, const std::function<void(nlohmann::json&)>& edit) {
  const auto len = io::get_u64(bytes, 8);
  auto manifest = nlohmann::json::parse(bytes.substr(16, len));
  edit(manifest);
  const auto text = manifest.dump();
  std::string out = bytes.substr(0, 8);
  io::put_u64(out, text.size());
  out += text;
  out += bytes.substr(16 + len);
  return out;
}

}  // namespace

TEST_CASE("standard vocabulary") {
  const auto v = Vocabulary::standard();
  CHECK(v.size() == 24);
  CHECK(v.blank_id() == 0);
  CHECK(Vocabulary::standard_words().size() == 16);
  CHECK(Vocabulary::standard_phrases().size() == 8);
  CHECK(v.id("afternoon") == 1);
  CHECK(v.token(16) == "wonderful");
  CHECK(v.id("tianqizhenhao") == 24);
  for (int id = 1; id <= v.size(); ++id) CHECK(v.id(v.token(id)) == id);
  const std::vector<std::string> s{"hello", "please", "wait"};
  CHECK(v.decode(v.encode(s)) == s);
  CHECK(!v.contains("<blank>"));
  CHECK(v.hash().size() == 64);
}

TEST_CASE("vocabulary invariants") {
  CHECK_THROWS_AS(Vocabulary({"a", "a"}), InvalidParameter);
  CHECK_THROWS_AS(Vocabulary({"a", ""}), InvalidParameter);
  CHECK_THROWS_AS(Vocabulary({"<blank>"}), InvalidParameter);
  const Vocabulary v({"x", "y"});
  CHECK_THROWS_AS(v.id("z"), InvalidParameter);
  CHECK_THROWS_AS(v.token(0), InvalidParameter);
  CHECK_THROWS_AS(v.token(3), InvalidParameter);
}

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("token signals are deterministic and shaped") {
  const auto vocab = Vocabulary::standard();
  const auto a = synthesize_token_signal(vocab, 5, 1, 80, 42);
  const auto b = synthesize_token_signal(vocab, 5, 1, 80, 42);
  CHECK(a.steps == 80);
  CHECK(a.channels == 6);
  CHECK(a.axes == 6);
  CHECK(a.values == b.values);
  const auto c = synthesize_token_signal(vocab, 5, 1, 80, 43);
  CHECK(a.values != c.values);
  CHECK_THROWS_AS(synthesize_token_signal(vocab, 0, 0, 80, 1), InvalidParameter);
  CHECK_THROWS_AS(synthesize_token_signal(vocab, 25, 0, 80, 1), InvalidParameter);
  CHECK_THROWS_AS(synthesize_token_signal(vocab, 1, 0, 15, 1), InvalidParameter);
}

TEST_CASE("distinct token templates stay below the correlation bound") {
  const SignalSynthesizer synth(24);
  for (int p = 0; p < 4; ++p)
    for (int a = 1; a <= 24; ++a)
      for (int b = a + 1; b <= 24; ++b) CHECK(synth.template_correlation(a, b, p, 80) < 0.9);
}

TEST_CASE("nearest-template classification separates tokens") {
  // The oracle the learning tests rely on: noisy recordings sit closest to their own template.
  const SignalSynthesizer synth(24);
  std::map<int, std::vector<double>> templates;
  for (int tok = 1; tok <= 24; ++tok) templates[tok] = synth.clean_template(tok, 0, 80);
  int correct = 0, total = 0;
  for (int tok = 1; tok <= 24; ++tok) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto w = synth.token_window(tok, 0, 80, 1000 + seed);
      int best = 0;
      double best_d = 1e300;
      for (const auto& [cand, tpl] : templates) {
        // Compare after removing each series' mean: recordings carry a DC level and drift.
        double d = 0;
        for (std::size_t s = 0; s < 36; ++s) {
          double mw = 0, mt = 0;
          for (std::size_t t = 0; t < 80; ++t) {
            mw += w.values[t * 36 + s];
            mt += tpl[t * 36 + s];
          }
          mw /= 80;
          mt /= 80;
          for (std::size_t t = 0; t < 80; ++t) d += std::pow((w.values[t * 36 + s] - mw) - (tpl[t * 36 + s] - mt), 2);
        }
        if (d < best_d) {
          best_d = d;
          best = cand;
        }
      }
      correct += best == tok;
      ++total;
    }
  }
  CHECK(correct == total);
}

TEST_CASE("concatenation augmentation") {
  std::vector<LabeledSample> words{word_sample(1, 7, 80, 0.0f), word_sample(2, 8, 80, 5.0f)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (int n = 2; n <= 6; ++n) {
      const auto out = concat_augment(words, n, seed);
      CHECK(out.labels.size() == static_cast<std::size_t>(n));
      CHECK(out.raw().steps == 80u * n);
      CHECK(out.kind == SampleKind::augmented);
      REQUIRE(out.recipe);
      for (std::size_t i = 0; i < out.labels.size(); ++i) {
        const auto src = out.recipe->sources[i];
        CHECK(out.labels[i] == (src == 1 ? 7 : 8));
        CHECK(out.raw().at(80 * i, 0, 0) == words[src - 1].raw().at(0, 0, 0));
      }
    }
  }
  CHECK_THROWS_AS(concat_augment(words, 1, 0), InvalidParameter);
  CHECK_THROWS_AS(concat_augment(words, 7, 0), InvalidParameter);
  auto mixed = words;
  signal::FeatureSequence f;
  f.steps = 80;
  f.dims = 36;
  f.values.assign(80 * 36, 0.0);
  mixed[1].data = f;
  CHECK_THROWS_AS(concat_augment(mixed, 2, 0), InvalidParameter);
}

TEST_CASE("concatenating two words yields their labels in order") {
  const auto vocab = Vocabulary::standard();
  LabeledSample drink = word_sample(1, vocab.id("drink"), 80, 0.0f);
  LabeledSample water = word_sample(2, vocab.id("water"), 80, 1.0f);
  // Find a seed that picks drink then water.
  bool found = false;
  for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
    const std::vector<LabeledSample> pool{drink, water};
    const auto out = concat_augment(pool, 2, seed);
    if (out.labels == std::vector<int>{vocab.id("drink"), vocab.id("water")}) {
      found = true;
      CHECK(out.raw().steps == 160);
    }
  }
  CHECK(found);
}

TEST_CASE("noise augmentation scales with each series' spread") {
  LabeledSample zero = word_sample(1, 1, 80, 0.0f);
  std::fill(std::get<signal::RawWindow>(zero.data).values.begin(), std::get<signal::RawWindow>(zero.data).values.end(), 0.0f);
  const auto z = noise_augment(zero, 3);
  for (float v : z.raw().values) CHECK(v == 0.0f);
  CHECK(z.labels == zero.labels);

  LabeledSample unit;
  unit.id = 2;
  unit.labels = {3, 4};
  signal::RawWindow w(10000, 1, 2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = 4.0 * g(rng);
  w.set_series(0, 0, a);
  w.set_series(0, 1, b);
  unit.data = w;
  const auto out = noise_augment(unit, 11);
  CHECK(out.labels == unit.labels);
  std::vector<double> da(10000), db(10000);
  const auto oa = out.raw().series(0, 0), ob = out.raw().series(0, 1);
  const auto ia = w.series(0, 0), ib = w.series(0, 1);
  for (std::size_t i = 0; i < 10000; ++i) {
    da[i] = oa[i] - ia[i];
    db[i] = ob[i] - ib[i];
  }
  CHECK(std::abs(stddev(da) / stddev(ia) - 1.0 / 3.0) < 0.02);
  CHECK(std::abs(stddev(db) / stddev(ib) - 1.0 / 3.0) < 0.02);
}

TEST_CASE("splits follow 70:15:15 per class and augment the training set") {
  const auto vocab = Vocabulary::standard();
  auto spec = CorpusSpec::standard(vocab);
  spec.participants = 1;
  spec.phrase_ids.clear();
  spec.sentences.clear();
  const auto corpus = generate_corpus(vocab, spec, 7);
  REQUIRE(corpus.size() == 1600);

  const auto plain = build_splits(vocab, corpus, 3, 1);
  CHECK(plain.train.size() == 1120);
  CHECK(plain.validation.size() == 240);
  CHECK(plain.test.size() == 240);
  for (const auto& s : plain.train) CHECK(s.kind == SampleKind::word);

  const auto split = build_splits(vocab, corpus, 3, 10);
  CHECK(split.train.size() == 11200);
  CHECK(split.validation.size() == 240);
  CHECK(split.test.size() == 240);
  std::map<int, int> per_class;
  for (const auto& s : split.train)
    if (s.kind != SampleKind::augmented) ++per_class[s.labels.front()];
  for (const auto& [label, n] : per_class) CHECK(std::abs(n / 100.0 - 0.70) <= 1.0 / 100.0);
  CHECK_NOTHROW(check_no_leakage(split));

  std::set<std::uint64_t> ids;
  for (const auto* part : {&split.train, &split.validation, &split.test})
    for (const auto& s : *part) CHECK(ids.insert(s.id).second);
  for (const auto* part : {&split.validation, &split.test})
    for (const auto& s : *part) CHECK(s.kind != SampleKind::augmented);

  std::set<std::uint64_t> train_originals;
  for (const auto& s : split.train)
    if (s.kind != SampleKind::augmented) train_originals.insert(s.id);
  std::size_t concat = 0, noise = 0;
  for (const auto& s : split.train) {
    if (!s.recipe) continue;
    (s.recipe->op == AugmentRecipe::Op::concat ? concat : noise)++;
    for (auto src : s.recipe->sources) CHECK(train_originals.contains(src));
  }
  CHECK(concat + noise == 10080);
  CHECK(std::abs(static_cast<double>(concat) / (concat + noise) - 0.5) < 0.05);

  const SampleResolver resolver(split);
  for (std::size_t i = 1120; i < 1140; ++i) {
    const auto m = resolver.materialize(split.train[i]);
    CHECK(m.materialized());
    CHECK(m.labels == split.train[i].labels);
    CHECK(m.raw().steps == 80 * m.labels.size());
    const auto again = resolver.materialize(split.train[i]);
    CHECK(again.raw().values == m.raw().values);
  }
}

TEST_CASE("splits reject classes with fewer than ten samples") {
  const auto vocab = Vocabulary::standard();
  auto spec = small_spec(vocab, 9);
  spec.participants = 1;
  CHECK_THROWS_AS(build_splits(vocab, generate_corpus(vocab, spec, 1), 1), InsufficientData);
}

TEST_CASE("leakage check catches augmented samples built from held-out recordings") {
  const auto vocab = Vocabulary::standard();
  auto split = build_splits(vocab, generate_corpus(vocab, small_spec(vocab), 2), 2, 2);
  CHECK_NOTHROW(check_no_leakage(split));
  auto bad = split;
  for (auto& s : bad.train)
    if (s.recipe) {
      s.recipe->sources.front() = split.test.front().id;
      break;
    }
  CHECK_THROWS_AS(check_no_leakage(bad), InvalidParameter);
  auto dup = split;
  dup.test.push_back(dup.train.front());
  CHECK_THROWS_AS(check_no_leakage(dup), InvalidParameter);
}

TEST_CASE("corpus generation is reproducible") {
  const auto vocab = Vocabulary::standard();
  const auto spec = small_spec(vocab, 10);
  const auto a = generate_corpus(vocab, spec, 5);
  const auto b = generate_corpus(vocab, spec, 5);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == 2u * (16 * 10 + 8 * 10 + 2 * 10));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_sample(a[i], b[i]));
  for (const auto& s : a) {
    if (s.kind == SampleKind::word) {
      CHECK(s.labels.size() == 1);
      CHECK(s.raw().steps == 80);
    } else {
      CHECK(s.raw().steps == 180);
    }
  }
}

TEST_CASE("container round trip is lossless") {
  const auto vocab = Vocabulary::standard();
  const auto split = build_splits(vocab, generate_corpus(vocab, small_spec(vocab, 10), 4), 4, 3);
  const auto bytes = encode_container(split);
  const auto back = decode_container(bytes);
  CHECK(same_split(split, back));
  CHECK(encode_container(back) == bytes);

  DatasetSplit tiny;
  tiny.vocabulary = vocab;
  tiny.seed = 9;
  tiny.train.push_back(word_sample(1, 2, 8, 0.25f));
  tiny.validation.push_back(word_sample(2, 3, 9, -1.5f));
  tiny.test.push_back(word_sample(3, 4, 10, 1e-7f));
  CHECK(same_split(tiny, decode_container(encode_container(tiny))));
}

TEST_CASE("corrupted containers raise format errors") {
  const auto vocab = Vocabulary::standard();
  DatasetSplit tiny;
  tiny.vocabulary = vocab;
  tiny.train.push_back(word_sample(1, 2, 8, 0.25f));
  tiny.test.push_back(word_sample(2, 3, 8, 0.5f));
  const auto bytes = encode_container(tiny);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_container(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_container(bad_version), FormatError);
  CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() - 4)), FormatError);
  CHECK_THROWS_AS(decode_container(bytes + "x"), FormatError);
  CHECK_THROWS_AS(decode_container(bytes.substr(0, 10)), FormatError);
  CHECK_THROWS_AS(decode_container(with_manifest(bytes, [](auto& m) { m["token_count"] = 2; })), FormatError);
  CHECK_THROWS_AS(decode_container(with_manifest(bytes, [](auto& m) { m["samples"][0]["labels"] = {25}; })),
                  FormatError);
  CHECK_THROWS_AS(decode_container(with_manifest(bytes, [](auto& m) { m["samples"][0]["offset"] = 1u << 20; })),
                  FormatError);
  CHECK_THROWS_AS(decode_container(with_manifest(bytes, [](auto& m) { m["samples"][0].erase("id"); })),
                  FormatError);
  try {
    decode_container(bytes.substr(0, bytes.size() - 4));
  } catch (const FormatError& e) {
    CHECK(e.offset() > 16);
  }

  // Random damage: either a clean decode or a FormatError, nothing else.
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    auto damaged = bytes;
    const int mode = trial % 3;
    if (mode == 0) {
      damaged[rng() % damaged.size()] ^= static_cast<char>(1 + rng() % 255);
    } else if (mode == 1) {
      damaged.resize(rng() % damaged.size());
    } else {
      for (int k = 0; k < 8; ++k) damaged[rng() % damaged.size()] = static_cast<char>(rng());
    }
    try {
      (void)decode_container(damaged);
    } catch (const FormatError&) {
    }
  }
}

TEST_CASE("container files") {
  const auto vocab = Vocabulary::standard();
  DatasetSplit tiny;
  tiny.vocabulary = vocab;
  tiny.train.push_back(word_sample(1, 2, 8, 0.25f));
  const auto path = std::filesystem::temp_directory_path() / "ssir_test_container.ssir";
  write_container(tiny, path);
  CHECK(same_split(tiny, read_container(path)));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_container(path), IoError);
}
