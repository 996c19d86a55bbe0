#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rada/errors.hpp"

namespace rada::cli {

namespace {

constexpr std::string_view kMethods = "source_only, dann_single, multiclass_only, rada";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& field, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(field, "cannot parse '" + v + "'");
  return out;
}

template <typename T>
std::vector<T> parse_number_list(const std::string& field, const std::string& v) {
  std::vector<T> out;
  for (const auto& piece : split_list(v)) out.push_back(parse_number<T>(field, piece));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < values.size(); ++i) ss << (i ? "," : "") << values[i];
  return ss.str();
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string prefixed(std::string_view section, const ConfigError& e) {
  return std::string(section) + "." + e.field;
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::source_only: return "source_only";
    case Method::dann_single: return "dann_single";
    case Method::multiclass_only: return "multiclass_only";
    case Method::rada: return "rada";
  }
  return "rada";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::source_only, Method::dann_single, Method::multiclass_only, Method::rada})
    if (text == to_string(m)) return m;
  throw ConfigError("method", "unknown method '" + std::string(text) + "'; valid methods: " +
                                  std::string(kMethods));
}

void ExperimentConfig::validate() const {
  try {
    gen.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(prefixed("gen", e), e.what());
  }
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(prefixed("train", e), e.what());
  }
  if (model.feature_dim < 1) throw ConfigError("model.feature_dim", "must be at least 1");
  if (model.discriminator_hidden < 1) throw ConfigError("model.discriminator_hidden", "must be at least 1");
  for (auto w : model.feature_hidden)
    if (w < 1) throw ConfigError("model.feature_hidden", "widths must be at least 1");
  for (auto w : model.label_hidden)
    if (w < 1) throw ConfigError("model.label_hidden", "widths must be at least 1");
  if (out.empty()) throw ConfigError("experiment.out", "must not be empty");
  if (formats.empty()) throw ConfigError("experiment.formats", "list at least one format");
  for (const auto& f : formats)
    if (f != "csv" && f != "json")
      throw ConfigError("experiment.formats", "unknown format '" + f + "'; valid formats: csv, json");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream ss;
  ss << "[experiment]\n"
     << "method = " << to_string(method) << '\n'
     << "out = " << out.generic_string() << '\n'
     << "data = " << data.generic_string() << '\n'
     << "formats = " << join(formats) << "\n\n";
  ss << "[gen]\n"
     << "classes = " << gen.classes << '\n'
     << "features = " << gen.features << '\n'
     << "per_class = " << gen.per_class << '\n'
     << "seed = " << gen.seed << '\n'
     << "shift = " << rada::to_string(gen.shift) << '\n'
     << "shift_magnitude = " << shortest(gen.shift_magnitude) << '\n'
     << "class_scale = " << shortest(gen.class_scale) << '\n'
     << "noise = " << shortest(gen.noise) << '\n'
     << "edge_probability = " << shortest(gen.edge_probability) << '\n'
     << "target_classes = " << join(gen.target_classes) << "\n\n";
  ss << "[model]\n"
     << "feature_hidden = " << join(model.feature_hidden) << '\n'
     << "feature_dim = " << model.feature_dim << '\n'
     << "label_hidden = " << join(model.label_hidden) << '\n'
     << "discriminator_hidden = " << model.discriminator_hidden << "\n\n";
  ss << "[train]\n";
  for (const auto& [k, v] : train.to_key_values()) ss << k << " = " << v << '\n';
  return ss.str();
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> train_kv;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw.substr(0, raw.find_first_of("#;")));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "experiment" && section != "gen" && section != "model" && section != "train")
        throw ConfigError(section, "unknown section; valid sections: experiment, gen, model, train");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no), "key outside a section");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    const auto field = section + "." + key;
    if (!seen.insert(field).second) throw ConfigError(field, "set twice");

    if (section == "train") {
      train_kv[key] = value;
    } else if (section == "experiment") {
      if (key == "method") cfg.method = parse_method(value);
      else if (key == "out") cfg.out = value;
      else if (key == "data") cfg.data = value;
      else if (key == "formats") cfg.formats = split_list(value);
      else throw ConfigError(field, "unknown key");
    } else if (section == "gen") {
      if (key == "classes") cfg.gen.classes = parse_number<std::size_t>(field, value);
      else if (key == "features") cfg.gen.features = parse_number<std::size_t>(field, value);
      else if (key == "per_class") cfg.gen.per_class = parse_number<std::size_t>(field, value);
      else if (key == "seed") cfg.gen.seed = parse_number<std::uint64_t>(field, value);
      else if (key == "shift") {
        try {
          cfg.gen.shift = parse_shift_kind(value);
        } catch (const ConfigError& e) {
          throw ConfigError(field, e.what());
        }
      }
      else if (key == "shift_magnitude") cfg.gen.shift_magnitude = parse_number<double>(field, value);
      else if (key == "class_scale") cfg.gen.class_scale = parse_number<double>(field, value);
      else if (key == "noise") cfg.gen.noise = parse_number<double>(field, value);
      else if (key == "edge_probability") cfg.gen.edge_probability = parse_number<double>(field, value);
      else if (key == "target_classes") cfg.gen.target_classes = parse_number_list<int>(field, value);
      else throw ConfigError(field, "unknown key");
    } else {
      if (key == "feature_hidden") cfg.model.feature_hidden = parse_number_list<std::size_t>(field, value);
      else if (key == "feature_dim") cfg.model.feature_dim = parse_number<std::size_t>(field, value);
      else if (key == "label_hidden") cfg.model.label_hidden = parse_number_list<std::size_t>(field, value);
      else if (key == "discriminator_hidden") cfg.model.discriminator_hidden = parse_number<std::size_t>(field, value);
      else throw ConfigError(field, "unknown key");
    }
  }
  try {
    cfg.train = TrainConfig::from_key_values(train_kv);
  } catch (const ConfigError& e) {
    throw ConfigError(prefixed("train", e), e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

TrainConfig ExperimentConfig::effective_train() const {
  TrainConfig t = train;
  switch (method) {
    case Method::source_only:
      t.lambda_adv = 0.0;
      t.lambda_r = 0.0;
      break;
    case Method::dann_single:
    case Method::multiclass_only:
      t.lambda_r = 0.0;
      break;
    case Method::rada:
      break;
  }
  return t;
}

ModelShape ExperimentConfig::effective_shape() const {
  ModelShape s;
  s.input_dim = gen.features;
  s.feature_hidden = model.feature_hidden;
  s.feature_dim = model.feature_dim;
  s.label_hidden = model.label_hidden;
  s.discriminator_hidden = model.discriminator_hidden;
  s.classes = gen.classes;
  s.discriminator_branches = method == Method::dann_single ? 1 : gen.classes;
  return s;
}

bool ExperimentConfig::wants_format(std::string_view f) const {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

}  // namespace rada::cli
