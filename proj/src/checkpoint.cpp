// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/checkpoint.hpp"

#include "ssir/binary_io.hpp"
#include "ssir/errors.hpp"
#include "ssir/hashing.hpp"

namespace ssir::model {

using nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 16;

std::string encode_payload(const ModelParams& params) {
  std::string payload;
  for (const auto& e : params.entries())
    for (double v : e.tensor.values()) io::put_f32(payload, static_cast<float>(v));
  return payload;
}

}  // namespace

std::string payload_hash(const ModelParams& params) { return sha256_hex(encode_payload(params)); }

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = "ssir-model";
  header["version"] = kCheckpointVersion;
  header["model_config"] = ckpt.params.config;
  header["inputs"] = {{"channels", ckpt.inputs.channels}, {"axes", ckpt.inputs.axes}};
  header["vocabulary"] = {{"tokens", ckpt.vocabulary.tokens()}, {"hash", ckpt.vocabulary.hash()}};
  header["training"] = ckpt.training;
  header["seed"] = ckpt.seed;
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : ckpt.params.entries()) {
    tensors.push_back({{"name", e.name},
                       {"shape", e.tensor.shape()},
                       {"offset", offset},
                       {"trainable", e.trainable},
                       {"decay", e.decay}});
    offset += 4 * e.tensor.size();
  }
  header["tensors"] = std::move(tensors);
  header["payload_bytes"] = offset;
  const std::string text = header.dump();
  std::string out;
  out.append(kCheckpointMagic);
  io::put_u32(out, kCheckpointVersion);
  io::put_u64(out, text.size());
  out.append(text);
  out.append(encode_payload(ckpt.params));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("checkpoint shorter than its fixed header", bytes.size());
  if (bytes.substr(0, 4) != kCheckpointMagic) throw FormatError("bad checkpoint magic", 0);
  const auto version = io::get_u32(bytes, 4);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  const auto header_len = io::get_u64(bytes, 8);
  if (header_len > bytes.size() - kHeaderBytes) throw FormatError("header length exceeds file size", 8);
  const std::size_t payload_start = kHeaderBytes + header_len;
  const std::string_view payload = bytes.substr(payload_start);

  json header;
  try {
    header = json::parse(bytes.substr(kHeaderBytes, header_len));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what(), kHeaderBytes + e.byte);
  }
  Checkpoint ckpt;
  try {
    const auto declared = header.at("payload_bytes").get<std::uint64_t>();
    if (declared > payload.size())
      throw FormatError("truncated checkpoint payload", payload_start + payload.size());
    if (declared < payload.size()) throw FormatError("trailing bytes after checkpoint payload", payload_start + declared);
    ckpt.params.config = header.at("model_config").get<ModelConfig>();
    ckpt.params.config.validate();
    ckpt.inputs.channels = header.at("inputs").at("channels").get<std::vector<int>>();
    ckpt.inputs.axes = header.at("inputs").at("axes").get<std::vector<int>>();
    if (ckpt.inputs.feature_dim() != ckpt.params.config.input_dim)
      throw FormatError("input selection does not match model input_dim", kHeaderBytes);
    ckpt.vocabulary = data::Vocabulary(header.at("vocabulary").at("tokens").get<std::vector<std::string>>());
    if (header.at("vocabulary").contains("hash") &&
        header.at("vocabulary").at("hash").get<std::string>() != ckpt.vocabulary.hash())
      throw FormatError("vocabulary hash mismatch", kHeaderBytes);
    if (static_cast<std::size_t>(ckpt.vocabulary.size()) != ckpt.params.config.vocab_size)
      throw FormatError("vocabulary size does not match model vocab_size", kHeaderBytes);
    ckpt.training = header.value("training", json::object());
    ckpt.seed = header.at("seed").get<std::uint64_t>();

    // Layout must agree with a freshly initialized model of this config.
    const ModelParams reference = init_params(ckpt.params.config, 0);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != reference.entries().size())
      throw FormatError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model expects " +
                            std::to_string(reference.entries().size()),
                        kHeaderBytes);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& rec = tensors[i];
      const auto& ref = reference.entries()[i];
      const auto name = rec.at("name").get<std::string>();
      const auto shape = rec.at("shape").get<ad::Shape>();
      if (name != ref.name || shape != ref.tensor.shape())
        throw FormatError("tensor " + std::to_string(i) + " (" + name + ") does not match model layout", kHeaderBytes);
      const auto offset = rec.at("offset").get<std::uint64_t>();
      const std::size_t count = ad::element_count(shape);
      if (offset % 4 != 0 || offset > payload.size() || count > (payload.size() - offset) / 4)
        throw FormatError("tensor " + name + " runs past end of payload", payload_start + offset);
      std::vector<double> values(count);
      for (std::size_t k = 0; k < count; ++k) values[k] = io::get_f32(payload, offset + 4 * k);
      ckpt.params.add(name,
                      ref.trainable ? ad::Tensor::parameter(shape, std::move(values))
                                    : ad::Tensor::constant(shape, std::move(values)),
                      ref.trainable, ref.decay);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what(), kHeaderBytes);
  } catch (const InvalidParameter& e) {
    throw FormatError(std::string("inconsistent checkpoint header: ") + e.what(), kHeaderBytes);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace ssir::model
