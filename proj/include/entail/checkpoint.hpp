#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "entail/errors.hpp"
#include "entail/model.hpp"

namespace entail {

inline std::string hex_u64(uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"variant", variant_name(c.variant)},
                        {"two_way", c.two_way},
                        {"k", c.k},
                        {"embed_dim", c.embed_dim},
                        {"classifier_hidden", c.classifier_hidden}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.two_way = j.at("two_way").get<bool>();
  c.k = j.at("k").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.classifier_hidden = j.at("classifier_hidden").get<int>();
  c.validate();
  return c;
}

// Versioned JSON container of the full model: config, vocabulary (hash-
// anchored), embedding table with tunability flags, and named parameters in
// sweep order. Values are written as doubles whatever the working precision.
template <typename T>
void save_checkpoint(const std::string& path, const ModelState<T>& state) {
  nlohmann::json j;
  j["format"] = "entail-checkpoint";
  j["version"] = 1;
  j["config"] = config_to_json(state.config);
  j["vocab"] = state.vocab.tokens();
  j["vocab_hash"] = hex_u64(state.vocab.hash());
  nlohmann::json emb;
  emb["dim"] = state.embeddings.dim;
  emb["init_seed"] = hex_u64(state.embeddings.init_seed);
  emb["tunable"] = state.embeddings.tunable;
  std::vector<double> table(state.embeddings.table.data.begin(),
                            state.embeddings.table.data.end());
  emb["table"] = std::move(table);
  j["embedding"] = std::move(emb);
  nlohmann::json params = nlohmann::json::array();
  for (const auto& e : state.params.entries) {
    std::vector<double> data(e.value.data.begin(), e.value.data.end());
    params.push_back(nlohmann::json{
        {"name", e.name}, {"rows", e.value.rows}, {"cols", e.value.cols}, {"data", data}});
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
  out << j.dump() << '\n';
}

template <typename T>
ModelState<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: malformed JSON in " + path + ": " + e.what());
  }
  if (j.value("format", "") != "entail-checkpoint")
    throw IntegrityError("checkpoint: " + path + " is not an entail checkpoint");
  if (j.value("version", 0) != 1)
    throw IntegrityError("checkpoint: unsupported version in " + path);

  ModelState<T> state;
  state.config = config_from_json(j.at("config"));
  Vocabulary vocab;
  const auto tokens = j.at("vocab").get<std::vector<std::string>>();
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (static_cast<int>(i) < vocab.size()) {
      if (vocab.token(static_cast<int>(i)) != tokens[i])
        throw IntegrityError("checkpoint: reserved token mismatch at index " +
                             std::to_string(i));
      continue;
    }
    vocab.add(tokens[i]);
  }
  state.vocab = std::move(vocab);
  const std::string stored_hash = j.at("vocab_hash").get<std::string>();
  if (hex_u64(state.vocab.hash()) != stored_hash)
    throw IntegrityError("checkpoint: vocabulary hash mismatch (stored " + stored_hash +
                         ", computed " + hex_u64(state.vocab.hash()) + ")");

  const auto& emb = j.at("embedding");
  state.embeddings.dim = emb.at("dim").get<int>();
  state.embeddings.init_seed =
      std::stoull(emb.at("init_seed").get<std::string>(), nullptr, 16);
  state.embeddings.tunable = emb.at("tunable").get<std::vector<uint8_t>>();
  const auto table = emb.at("table").get<std::vector<double>>();
  if (table.size() != static_cast<size_t>(state.vocab.size()) *
                          static_cast<size_t>(state.embeddings.dim))
    throw IntegrityError("checkpoint: embedding table size mismatch");
  state.embeddings.table = Mat<T>(state.vocab.size(), state.embeddings.dim);
  for (size_t i = 0; i < table.size(); ++i)
    state.embeddings.table.data[i] = static_cast<T>(table[i]);

  for (const auto& p : j.at("params")) {
    Mat<T> m(p.at("rows").get<int>(), p.at("cols").get<int>());
    const auto data = p.at("data").get<std::vector<double>>();
    if (data.size() != m.size())
      throw IntegrityError("checkpoint: parameter " + p.at("name").get<std::string>() +
                           " has inconsistent shape");
    for (size_t i = 0; i < data.size(); ++i) m.data[i] = static_cast<T>(data[i]);
    state.params.add(p.at("name").get<std::string>(), std::move(m));
  }
  return state;
}

}  // namespace entail
