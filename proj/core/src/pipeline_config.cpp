#include <algorithm>
#include <charconv>
#include <functional>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "epu/csv.hpp"
#include "epu/error.hpp"
#include "epu/pipeline.hpp"

namespace epu {
namespace {

namespace fs = std::filesystem;

struct RawValue {
  std::string text;
  fs::path base;  // directory relative paths resolve against
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split_csv_line(text)) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

fs::path resolve(const RawValue& v, const std::string& item) {
  fs::path p(item);
  return p.is_absolute() ? p : (v.base / p).lexically_normal();
}

std::vector<fs::path> as_paths(const RawValue& v) {
  std::vector<fs::path> out;
  for (const auto& item : split_list(v.text)) out.push_back(resolve(v, item));
  return out;
}

bool as_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("config key '{}': expected a boolean, got '{}'", key, text));
}

template <typename T>
T as_unsigned(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  T v{};
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError(fmt::format("config key '{}': expected a non-negative integer, got '{}'", key, text));
  }
  return v;
}

double as_double(const std::string& key, const std::string& text) {
  const auto v = parse_double(text);
  if (!v) throw ConfigError(fmt::format("config key '{}': expected a number, got '{}'", key, text));
  return *v;
}

}  // namespace

PipelineConfig load_config(const fs::path& config_path, const std::map<std::string, std::string>& overrides) {
  std::map<std::string, RawValue> raw;
  if (!config_path.empty()) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(config_path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(fmt::format("cannot read config: {}", e.what()));
    }
    const fs::path base = fs::absolute(config_path).parent_path();
    for (const auto& [key, node] : tree) {
      if (node.empty()) {
        raw[key] = {node.data(), base};
      } else {
        for (const auto& [sub, leaf] : node) raw[key + "." + sub] = {leaf.data(), base};
      }
    }
  }
  const fs::path cwd = fs::current_path();
  for (const auto& [key, value] : overrides) raw[key] = {value, cwd};

  PipelineConfig c;
  bool seed_set = false;
  bool removal_reset = false;

  using Setter = std::function<void(const std::string&, const RawValue&)>;
  const std::map<std::string, Setter> setters{
      {"corpus", [&](auto&, auto& v) { c.corpus = as_paths(v); }},
      {"gazetteer", [&](auto&, auto& v) { c.gazetteer = resolve(v, trim(v.text)); }},
      {"filter_us", [&](auto& k, auto& v) { c.filter_us = as_bool(k, v.text); }},
      {"dateline_text_fallback", [&](auto& k, auto& v) { c.dateline_text_fallback = as_bool(k, v.text); }},
      {"keywords", [&](auto&, auto& v) { c.keywords = resolve(v, trim(v.text)); }},
      {"embeddings", [&](auto&, auto& v) { c.embeddings = resolve(v, trim(v.text)); }},
      {"expansion_k", [&](auto& k, auto& v) { c.expansion_k = as_unsigned<std::size_t>(k, v.text); }},
      {"expand_banks", [&](auto&, auto& v) { c.expand_banks = split_list(v.text); }},
      {"labels", [&](auto&, auto& v) { c.labels = as_paths(v); }},
      {"split_date",
       [&](auto& k, auto& v) {
         const auto d = parse_date(trim(v.text));
         if (!d) throw ConfigError(fmt::format("config key '{}': invalid date '{}'", k, v.text));
         c.split_date = *d;
       }},
      {"min_df", [&](auto& k, auto& v) { c.min_df = as_unsigned<std::size_t>(k, v.text); }},
      {"c_grid",
       [&](auto& k, auto& v) {
         c.c_grid.clear();
         for (const auto& item : split_list(v.text)) c.c_grid.push_back(as_double(k, item));
       }},
      {"cv_folds", [&](auto& k, auto& v) { c.cv_folds = as_unsigned<std::size_t>(k, v.text); }},
      {"model", [&](auto&, auto& v) { c.model = resolve(v, trim(v.text)); }},
      {"train_prior", [&](auto& k, auto& v) { c.train_prior = as_double(k, v.text); }},
      {"implik_step", [&](auto& k, auto& v) { c.implik_step = as_double(k, v.text); }},
      {"measurements", [&](auto&, auto& v) { c.measurements = split_list(v.text); }},
      {"totals", [&](auto&, auto& v) { c.totals = resolve(v, trim(v.text)); }},
      {"outlet", [&](auto&, auto& v) { c.outlet = trim(v.text); }},
      {"annotations", [&](auto&, auto& v) { c.annotations = as_paths(v); }},
      {"pxa_docs", [&](auto&, auto& v) { c.pxa_docs = as_paths(v); }},
      {"series", [&](auto&, auto& v) { c.series = as_paths(v); }},
      {"external", [&](auto&, auto& v) { c.external = as_paths(v); }},
      {"out", [&](auto&, auto& v) { c.out = resolve(v, trim(v.text)); }},
      {"seed",
       [&](auto& k, auto& v) {
         c.seed = as_unsigned<std::uint64_t>(k, v.text);
         seed_set = true;
       }},
      {"threads", [&](auto& k, auto& v) { c.threads = std::max<std::size_t>(1, as_unsigned<std::size_t>(k, v.text)); }},
  };

  for (const auto& [key, value] : raw) {
    if (key.starts_with("removal.")) {
      if (!removal_reset) {
        c.expansion_removal.clear();
        removal_reset = true;
      }
      const auto words = split_list(value.text);
      c.expansion_removal[key.substr(8)] = {words.begin(), words.end()};
      continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
    it->second(key, value);
  }

  if (!seed_set) throw ConfigError("config must set 'seed' (the master seed)");
  if (!c.out.is_absolute()) c.out = fs::absolute(c.out);
  for (const auto& m : c.measurements) {
    const auto& known = known_measurements();
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw ConfigError(fmt::format("unknown measurement '{}'", m));
    }
  }
  if (c.cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
  if (c.min_df < 1) throw ConfigError("min_df must be at least 1");
  if (c.c_grid.empty()) throw ConfigError("c_grid must not be empty");
  for (double v : c.c_grid) {
    if (!(v > 0.0)) throw ConfigError("c_grid values must be positive");
  }
  return c;
}

}  // namespace epu
