#pragma once

// Model checkpoints: a MANN1 parameter file plus a JSON sidecar holding the
// configuration (and vocabulary where the model owns one), so a checkpoint
// reloads without external knowledge.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mann/models/annc.hpp"
#include "mann/models/annr.hpp"
#include "mann/models/autoencoder.hpp"
#include "mann/models/cnn_embedder.hpp"
#include "mann/nn/serialize.hpp"
#include "mann/vocab.hpp"

namespace mann {

inline nlohmann::json vocab_to_json(const Vocabulary& v) {
  std::vector<std::uint32_t> cps;
  cps.reserve(v.chars().size());
  for (char32_t c : v.chars()) cps.push_back(static_cast<std::uint32_t>(c));
  return nlohmann::json{{"chars", cps}};
}

inline Vocabulary vocab_from_json(const nlohmann::json& j) {
  std::set<char32_t> chars;
  for (std::uint32_t cp : j.at("chars").get<std::vector<std::uint32_t>>())
    chars.insert(static_cast<char32_t>(cp));
  return Vocabulary::from_chars(chars);
}

inline void to_json(nlohmann::json& j, const CnnEmbedderConfig& c) {
  j = {{"char_dim", c.char_dim},
       {"windows", c.windows},
       {"filters_per_window", c.filters_per_window},
       {"min_length", c.min_length}};
}

inline void from_json(const nlohmann::json& j, CnnEmbedderConfig& c) {
  j.at("char_dim").get_to(c.char_dim);
  j.at("windows").get_to(c.windows);
  j.at("filters_per_window").get_to(c.filters_per_window);
  j.at("min_length").get_to(c.min_length);
}

inline void to_json(nlohmann::json& j, const AnncConfig& c) {
  j = {{"embed_dim", c.embed_dim},
       {"stage1_filters", c.stage1_filters},
       {"stage2_filters", c.stage2_filters}};
}

inline void from_json(const nlohmann::json& j, AnncConfig& c) {
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("stage1_filters").get_to(c.stage1_filters);
  j.at("stage2_filters").get_to(c.stage2_filters);
}

inline void to_json(nlohmann::json& j, const AnnrConfig& c) {
  j = {{"embed_dim", c.embed_dim}, {"hidden", c.hidden}};
}

inline void from_json(const nlohmann::json& j, AnnrConfig& c) {
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("hidden").get_to(c.hidden);
}

inline void to_json(nlohmann::json& j, const AutoencoderConfig& c) {
  j = {{"hidden", c.hidden}, {"max_decode", c.max_decode}, {"decode_slack", c.decode_slack}};
}

inline void from_json(const nlohmann::json& j, AutoencoderConfig& c) {
  j.at("hidden").get_to(c.hidden);
  j.at("max_decode").get_to(c.max_decode);
  j.at("decode_slack").get_to(c.decode_slack);
}

namespace detail {

inline void write_sidecar(const std::string& base, const nlohmann::json& j) {
  std::ofstream out(base + ".json");
  if (!out) throw std::runtime_error("cannot write " + base + ".json");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_sidecar(const std::string& base, const std::string& expected_kind) {
  std::ifstream in(base + ".json");
  if (!in) throw std::runtime_error("cannot read " + base + ".json");
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("kind").get<std::string>() != expected_kind)
    throw std::runtime_error(base + ": expected a " + expected_kind + " checkpoint, got " +
                             j.at("kind").get<std::string>());
  return j;
}

}  // namespace detail

// checkpoint base path: writes <base>.mann and <base>.json

template <typename T>
void save_embedder(const std::string& base, CnnEmbedder<T>& model) {
  nn::save_parameters(base + ".mann", model.params());
  detail::write_sidecar(base, {{"kind", "cnn_embedder"},
                               {"config", model.cfg},
                               {"vocab", vocab_to_json(model.vocab)}});
}

template <typename T>
CnnEmbedder<T> load_embedder(const std::string& base) {
  nlohmann::json j = detail::read_sidecar(base, "cnn_embedder");
  Rng rng(0);
  CnnEmbedder<T> model = CnnEmbedder<T>::init(j.at("config").get<CnnEmbedderConfig>(),
                                              vocab_from_json(j.at("vocab")), rng);
  nn::load_parameters(base + ".mann", model.params());
  return model;
}

template <typename T>
void save_annc(const std::string& base, Annc<T>& model) {
  nn::save_parameters(base + ".mann", model.params());
  detail::write_sidecar(base, {{"kind", "annc"}, {"config", model.cfg}});
}

template <typename T>
Annc<T> load_annc(const std::string& base) {
  nlohmann::json j = detail::read_sidecar(base, "annc");
  Rng rng(0);
  Annc<T> model = Annc<T>::init(j.at("config").get<AnncConfig>(), rng);
  nn::load_parameters(base + ".mann", model.params());
  return model;
}

template <typename T>
void save_annr(const std::string& base, Annr<T>& model) {
  nn::save_parameters(base + ".mann", model.params());
  detail::write_sidecar(base, {{"kind", "annr"}, {"config", model.cfg}});
}

template <typename T>
Annr<T> load_annr(const std::string& base) {
  nlohmann::json j = detail::read_sidecar(base, "annr");
  Rng rng(0);
  Annr<T> model = Annr<T>::init(j.at("config").get<AnnrConfig>(), rng);
  nn::load_parameters(base + ".mann", model.params());
  return model;
}

template <typename T>
void save_autoencoder(const std::string& base, Autoencoder<T>& model) {
  nn::save_parameters(base + ".mann", model.params());
  detail::write_sidecar(base, {{"kind", "autoencoder"},
                               {"config", model.cfg},
                               {"vocab", vocab_to_json(model.vocab)}});
}

template <typename T>
Autoencoder<T> load_autoencoder(const std::string& base) {
  nlohmann::json j = detail::read_sidecar(base, "autoencoder");
  Rng rng(0);
  Autoencoder<T> model = Autoencoder<T>::init(j.at("config").get<AutoencoderConfig>(),
                                              vocab_from_json(j.at("vocab")), rng);
  nn::load_parameters(base + ".mann", model.params());
  return model;
}

}  // namespace mann
