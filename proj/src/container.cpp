// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/container.hpp"

#include <fstream>
#include <iterator>
#include <json.hpp>

#include "ssir/binary_io.hpp"
#include "ssir/errors.hpp"

namespace ssir {

namespace io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace io

namespace data {

using nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 16;

const char* split_name(int part) {
  static const char* names[] = {"train", "validation", "test"};
  return names[part];
}

json recipe_to_json(const AugmentRecipe& r) {
  return {{"op", r.op == AugmentRecipe::Op::concat ? "concat" : "noise"}, {"sources", r.sources}, {"seed", r.seed}};
}

AugmentRecipe recipe_from_json(const json& j) {
  AugmentRecipe r;
  const auto op = j.at("op").get<std::string>();
  if (op == "concat") r.op = AugmentRecipe::Op::concat;
  else if (op == "noise") r.op = AugmentRecipe::Op::noise;
  else throw InvalidParameter("unknown recipe op " + op);
  r.sources = j.at("sources").get<std::vector<std::uint64_t>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

}  // namespace

std::string encode_container(const DatasetSplit& split) {
  if (split.vocabulary.empty()) throw InvalidParameter("cannot write a container without a vocabulary");
  json manifest;
  manifest["format"] = "ssir-dataset";
  manifest["schema_version"] = kContainerVersion;
  manifest["vocabulary"] = {{"blank", std::string(kBlankToken)},
                            {"tokens", split.vocabulary.tokens()},
                            {"hash", split.vocabulary.hash()}};
  manifest["token_count"] = split.vocabulary.size();
  manifest["seed"] = split.seed;
  manifest["layout"] = "float32-le time-major channel-major axis-minor";

  std::string payload;
  json records = json::array();
  const std::vector<LabeledSample>* parts[] = {&split.train, &split.validation, &split.test};
  for (int p = 0; p < 3; ++p) {
    for (const auto& s : *parts[p]) {
      if (!s.is_raw()) throw InvalidParameter("containers store raw windows only; sample " + s.provenance());
      for (int l : s.labels)
        if (l < 1 || l > split.vocabulary.size())
          throw InvalidParameter("sample " + s.provenance() + " has a label outside the vocabulary");
      json rec = {{"id", s.id},
                  {"split", split_name(p)},
                  {"kind", to_string(s.kind)},
                  {"participant", s.participant},
                  {"labels", s.labels}};
      if (s.recipe) rec["recipe"] = recipe_to_json(*s.recipe);
      if (s.materialized()) {
        const auto& w = s.raw();
        rec["shape"] = {w.steps, w.channels, w.axes};
        rec["sample_rate_hz"] = w.sample_rate_hz;
        rec["offset"] = payload.size();
        payload.reserve(payload.size() + 4 * w.values.size());
        for (float v : w.values) io::put_f32(payload, v);
      }
      records.push_back(std::move(rec));
    }
  }
  manifest["samples"] = std::move(records);
  manifest["payload_bytes"] = payload.size();

  const std::string text = manifest.dump();
  std::string out;
  out.reserve(kHeaderBytes + text.size() + payload.size());
  out.append(kContainerMagic);
  io::put_u32(out, kContainerVersion);
  io::put_u64(out, text.size());
  out.append(text);
  out.append(payload);
  return out;
}

DatasetSplit decode_container(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("container shorter than its fixed header", bytes.size());
  if (bytes.substr(0, 4) != kContainerMagic) throw FormatError("bad container magic", 0);
  const auto version = io::get_u32(bytes, 4);
  if (version != kContainerVersion)
    throw FormatError("unsupported container version " + std::to_string(version), 4);
  const auto manifest_len = io::get_u64(bytes, 8);
  if (manifest_len > bytes.size() - kHeaderBytes)
    throw FormatError("manifest length exceeds file size", 8);
  const std::size_t payload_start = kHeaderBytes + manifest_len;
  const std::string_view payload = bytes.substr(payload_start);

  json manifest;
  try {
    manifest = json::parse(bytes.substr(kHeaderBytes, manifest_len));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), kHeaderBytes + e.byte);
  }

  DatasetSplit split;
  std::size_t record_index = 0;
  try {
    if (manifest.at("schema_version").get<std::uint32_t>() != kContainerVersion)
      throw FormatError("manifest schema version mismatch", kHeaderBytes);
    const auto declared_payload = manifest.at("payload_bytes").get<std::uint64_t>();
    if (declared_payload > payload.size())
      throw FormatError("truncated payload: expected " + std::to_string(declared_payload) + " bytes, found " +
                            std::to_string(payload.size()),
                        payload_start + payload.size());
    if (declared_payload < payload.size())
      throw FormatError("trailing bytes after payload", payload_start + declared_payload);

    split.vocabulary = Vocabulary(manifest.at("vocabulary").at("tokens").get<std::vector<std::string>>());
    const int token_count = manifest.at("token_count").get<int>();
    if (token_count != split.vocabulary.size())
      throw FormatError("manifest token count " + std::to_string(token_count) + " disagrees with vocabulary size " +
                            std::to_string(split.vocabulary.size()),
                        kHeaderBytes);
    split.seed = manifest.at("seed").get<std::uint64_t>();

    for (const auto& rec : manifest.at("samples")) {
      LabeledSample s;
      s.id = rec.at("id").get<std::uint64_t>();
      s.kind = parse_sample_kind(rec.at("kind").get<std::string>());
      s.participant = rec.at("participant").get<int>();
      s.labels = rec.at("labels").get<std::vector<int>>();
      if (s.labels.empty()) throw FormatError("sample " + std::to_string(s.id) + " has no labels", kHeaderBytes);
      for (int l : s.labels)
        if (l < 1 || l > token_count)
          throw FormatError("sample " + std::to_string(s.id) + " label " + std::to_string(l) +
                                " exceeds manifest token count " + std::to_string(token_count),
                            kHeaderBytes);
      if (rec.contains("recipe")) s.recipe = recipe_from_json(rec.at("recipe"));
      if (rec.contains("shape")) {
        const auto shape = rec.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 3) throw FormatError("sample shape must have three dimensions", kHeaderBytes);
        if (shape[0] == 0 || shape[1] == 0 || shape[2] == 0 || shape[1] > payload.size() ||
            shape[2] > payload.size() || shape[0] > payload.size() / (shape[1] * shape[2]))
          throw FormatError("sample " + std::to_string(s.id) + " has an impossible shape", kHeaderBytes);
        const auto offset = rec.at("offset").get<std::uint64_t>();
        const std::uint64_t count = static_cast<std::uint64_t>(shape[0]) * shape[1] * shape[2];
        if (offset % 4 != 0 || offset > payload.size() || count > (payload.size() - offset) / 4)
          throw FormatError("sample " + std::to_string(s.id) + " payload runs past end of file",
                            payload_start + offset);
        signal::RawWindow w(shape[0], shape[1], shape[2], rec.value("sample_rate_hz", signal::kDefaultSampleRateHz));
        for (std::uint64_t i = 0; i < count; ++i) w.values[i] = io::get_f32(payload, offset + 4 * i);
        s.data = std::move(w);
      } else if (!s.recipe) {
        throw FormatError("sample " + std::to_string(s.id) + " has neither payload nor recipe", kHeaderBytes);
      }
      const auto where = rec.at("split").get<std::string>();
      if (where == "train") split.train.push_back(std::move(s));
      else if (where == "validation") split.validation.push_back(std::move(s));
      else if (where == "test") split.test.push_back(std::move(s));
      else throw FormatError("unknown split name " + where, kHeaderBytes);
      ++record_index;
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest near sample record " + std::to_string(record_index) + ": " + e.what(),
                      kHeaderBytes);
  } catch (const InvalidParameter& e) {
    throw FormatError(std::string("inconsistent manifest: ") + e.what(), kHeaderBytes);
  }
  return split;
}

void write_container(const DatasetSplit& split, const std::filesystem::path& path) {
  io::write_file(path, encode_container(split));
}

DatasetSplit read_container(const std::filesystem::path& path) { return decode_container(io::read_file(path)); }

}  // namespace data
}  // namespace ssir
