// SPDX-License-Identifier: Apache-2.0
#include "hetstar/checkpoint.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hetstar/errors.hpp"
#include "json_io.hpp"

namespace hetstar {

using detail::json;

namespace {

constexpr const char* kFormat = "hetstar-checkpoint";

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> raw(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(raw.data() + 8 * i, &bits, 8);
  }
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), raw.data(), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<double> decode_doubles(const std::string& base64) {
  if (base64.size() % 4 != 0) throw DataError("base64 payload length is not a multiple of 4");
  std::vector<unsigned char> raw(base64.size() / 4 * 3);
  const int n = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(base64.data()),
                                static_cast<int>(base64.size()));
  if (n < 0) throw DataError("invalid base64 payload");
  // EVP_DecodeBlock keeps the bytes that padding stands for; drop them.
  std::size_t len = static_cast<std::size_t>(n);
  if (!base64.empty() && base64.back() == '=') --len;
  if (base64.size() >= 2 && base64[base64.size() - 2] == '=') --len;
  if (len % 8 != 0) throw DataError("payload is not a whole number of doubles");
  std::vector<double> out(len / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, raw.data() + 8 * i, 8);
    out[i] = std::bit_cast<double>(to_little_endian(bits));
  }
  return out;
}

std::string save_checkpoint(const Model& model) {
  json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = detail::config_to_json(model.config());
  j["vocabulary"] = {{"tokens", model.vocab().tokens()},
                     {"chars", model.vocab().chars()},
                     {"pos", model.vocab().pos_tags()}};
  json params = json::object();
  for (const auto& [name, p] : model.params()) {
    params[name] = {{"shape", p.value.shape()}, {"data", encode_doubles(p.value.data())}};
  }
  j["parameters"] = std::move(params);
  return j.dump();
}

Model load_checkpoint(const std::string& document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw DataError("not a checkpoint document");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    Config config = detail::config_from_json(j.at("config"));
    const json& v = j.at("vocabulary");
    Vocabulary vocab = Vocabulary::from_lists(v.at("tokens").get<std::vector<std::string>>(),
                                              v.at("chars").get<std::vector<std::string>>(),
                                              v.at("pos").get<std::vector<std::string>>());
    ParameterStore store;
    for (const auto& [name, entry] : j.at("parameters").items()) {
      Shape shape = entry.at("shape").get<Shape>();
      std::vector<double> data = decode_doubles(entry.at("data").get<std::string>());
      std::size_t expected = 1;
      for (std::size_t d : shape) expected *= d;
      if (expected != data.size()) {
        throw DataError("parameter '" + name + "' has " + std::to_string(data.size()) + " values for shape " +
                        to_string(shape));
      }
      store.add(name, Tensor(std::move(shape), std::move(data)));
    }
    return Model(std::move(config), std::move(vocab), std::move(store));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint does not match its config: ") + e.what());
  }
}

void save_checkpoint_file(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << save_checkpoint(model);
  if (!out) throw DataError("failed writing " + path);
}

Model load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_checkpoint(ss.str());
}

}  // namespace hetstar
