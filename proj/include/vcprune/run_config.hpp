#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcprune/budget.hpp"
#include "vcprune/model_config.hpp"
#include "vcprune/prune_config.hpp"

namespace vcprune {

enum class Precision { kSingle, kDouble };

inline Precision precision_from_string(const std::string &s) {
  if (s == "single") return Precision::kSingle;
  if (s == "double") return Precision::kDouble;
  throw std::invalid_argument("precision must be \"single\" or \"double\", got \"" + s + "\"");
}

/// Everything one command run needs, parsed from a single JSON file; nested
/// sections mirror the structs. Unknown keys are rejected anywhere.
struct RunConfig {
  ModelConfig model;
  PruneConfig prune;
  std::uint64_t seed = 0;
  Precision precision = Precision::kDouble;
  std::string output_dir = "out";
  std::optional<BudgetSearchSpace> search;  // required by the solve command
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json &obj, const std::set<std::string> &allowed,
                                const std::string &where) {
  for (const auto &item : obj.items())
    if (!allowed.count(item.key()))
      throw std::invalid_argument("unknown key \"" + item.key() + "\" in " + where);
}

template <typename T>
T get_or(const json &obj, const std::string &key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception &e) {
    throw std::invalid_argument("bad value for \"" + key + "\": " + e.what());
  }
}

template <typename T>
T require(const json &obj, const std::string &key, const std::string &where) {
  if (!obj.contains(key))
    throw std::invalid_argument("missing required key \"" + key + "\" in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception &e) {
    throw std::invalid_argument("bad value for \"" + key + "\" in " + where + ": " + e.what());
  }
}

inline ModelConfig parse_model(const json &j) {
  reject_unknown_keys(j,
                      {"n_layers", "d_model", "n_heads", "d_ffn", "grid_width", "grid_height",
                       "n_text", "causal_text", "causal_visual", "outer_ffn_activation"},
                      "model");
  ModelConfig c;
  c.n_layers = require<int>(j, "n_layers", "model");
  c.d_model = require<int>(j, "d_model", "model");
  c.n_heads = require<int>(j, "n_heads", "model");
  c.d_ffn = require<int>(j, "d_ffn", "model");
  c.layout.grid_width = require<int>(j, "grid_width", "model");
  c.layout.grid_height = require<int>(j, "grid_height", "model");
  c.layout.n_text = require<int>(j, "n_text", "model");
  c.causal_text = get_or(j, "causal_text", true);
  c.causal_visual = get_or(j, "causal_visual", false);
  c.outer_ffn_activation = get_or(j, "outer_ffn_activation", true);
  c.validate();
  return c;
}

inline std::vector<std::vector<int>> parse_kept_heads(const json &v, const ModelConfig &mc) {
  if (v.is_string()) {
    if (v.get<std::string>() != "all")
      throw std::invalid_argument("prune.kept_heads: only \"all\" is accepted as a string");
    return std::vector<std::vector<int>>(mc.n_layers, all_heads(mc.n_heads));
  }
  if (v.is_number_integer()) {
    const int k = v.get<int>();
    if (k < 1 || k > mc.n_heads)
      throw std::invalid_argument("prune.kept_heads: count out of range [1, n_heads]");
    std::vector<int> first(k);
    for (int i = 0; i < k; ++i) first[i] = i;
    return std::vector<std::vector<int>>(mc.n_layers, first);
  }
  if (v.is_array()) {
    auto sets = v.get<std::vector<std::vector<int>>>();
    return sets;
  }
  throw std::invalid_argument(
      "prune.kept_heads must be \"all\", a per-layer count, or per-layer index arrays");
}

inline PruneConfig parse_prune(const json &j, const ModelConfig &mc) {
  reject_unknown_keys(j,
                      {"metric", "radius", "kept_heads", "ffn_keep_ratio", "ffn_neuron_seed",
                       "last_visual_layer", "dropped_block"},
                      "prune");
  PruneConfig p = no_prune(mc);
  if (j.contains("metric")) p.metric = metric_from_string(require<std::string>(j, "metric", "prune"));
  p.radius = get_or(j, "radius", p.radius);
  if (j.contains("kept_heads")) p.kept_heads = parse_kept_heads(j.at("kept_heads"), mc);
  p.ffn_keep_ratio = get_or(j, "ffn_keep_ratio", p.ffn_keep_ratio);
  p.ffn_neuron_seed = get_or<std::uint64_t>(j, "ffn_neuron_seed", p.ffn_neuron_seed);
  p.last_visual_layer = get_or(j, "last_visual_layer", p.last_visual_layer);
  if (j.contains("dropped_block") && !j.at("dropped_block").is_null()) {
    auto range = require<std::vector<int>>(j, "dropped_block", "prune");
    if (range.size() != 2)
      throw std::invalid_argument("prune.dropped_block must be [start, end]");
    p.dropped_block = std::make_pair(range[0], range[1]);
  }
  validate_prune(p, mc);
  return p;
}

inline BudgetSearchSpace parse_search(const json &j) {
  reject_unknown_keys(j, {"metric", "radii", "heads_per_layer", "ffn_keep_ratios", "suffix_drops"},
                      "search");
  BudgetSearchSpace s;
  if (j.contains("metric")) s.metric = metric_from_string(require<std::string>(j, "metric", "search"));
  s.radii = require<std::vector<double>>(j, "radii", "search");
  s.heads_per_layer = require<std::vector<int>>(j, "heads_per_layer", "search");
  s.ffn_keep_ratios = require<std::vector<double>>(j, "ffn_keep_ratios", "search");
  s.suffix_drops = require<std::vector<int>>(j, "suffix_drops", "search");
  return s;
}

inline int line_of_byte_offset(const std::string &text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string &text, const std::string &source_name) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw std::invalid_argument(source_name + ":" +
                                std::to_string(detail::line_of_byte_offset(text, e.byte)) + ": " +
                                e.what());
  }
  try {
    detail::reject_unknown_keys(j, {"model", "prune", "seed", "precision", "output_dir", "search"},
                                "top level");
    RunConfig rc;
    if (!j.contains("model"))
      throw std::invalid_argument("missing required section \"model\"");
    rc.model = detail::parse_model(j.at("model"));
    rc.prune = j.contains("prune") ? detail::parse_prune(j.at("prune"), rc.model)
                                   : no_prune(rc.model);
    rc.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    rc.precision = precision_from_string(detail::get_or<std::string>(j, "precision", "double"));
    rc.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
    if (j.contains("search")) rc.search = detail::parse_search(j.at("search"));
    return rc;
  } catch (const std::invalid_argument &e) {
    throw std::invalid_argument(source_name + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace vcprune
