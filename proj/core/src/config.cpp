#include "abc/config.hpp"

#include "abc/csv.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace abc {

using json = nlohmann::json;

ConfigError::ConfigError(const std::string& message, int line, std::string field)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line),
      field_(std::move(field)) {}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"preset", "rejection", "is", "mcmc", "semiauto", "sequential", "baseline"};
  return kinds;
}

namespace {

// ---------------------------------------------------------------------------
// TOML subset

using LineMap = std::map<std::string, int>;

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Drops a trailing comment, respecting strings.
std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (quote == '"' && c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

int bracket_balance(std::string_view text) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (quote == '"' && c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class ValueParser {
 public:
  ValueParser(std::string_view text, int line) : text_(text), line_(line) {}

  json parse_complete() {
    json value = parse_value();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected text after value: '" + std::string(text_.substr(pos_)) + "'");
    return value;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(message, line_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  json parse_value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  json parse_basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size()) break;
      const char e = text_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u':
        case 'U': {
          const std::size_t width = e == 'u' ? 4 : 8;
          if (pos_ + width > text_.size()) fail("truncated unicode escape");
          std::uint32_t cp = 0;
          const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + pos_ + width, cp, 16);
          if (ec != std::errc() || ptr != text_.data() + pos_ + width) fail("bad unicode escape");
          pos_ += width;
          append_utf8(out, cp);
          break;
        }
        default: fail(std::string("unknown escape \\") + e);
      }
    }
    fail("unterminated string");
  }

  json parse_literal_string() {
    const std::size_t end = text_.find('\'', pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  json parse_array() {
    ++pos_;
    json out = json::array();
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      out.push_back(parse_value());
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
      } else if (pos_ < text_.size() && text_[pos_] != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json parse_number() {
    std::size_t end = pos_;
    while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '+' ||
                                  text_[end] == '-' || text_[end] == '.' || text_[end] == '_'))
      ++end;
    std::string token;
    for (char c : text_.substr(pos_, end - pos_))
      if (c != '_') token += c;
    if (token.empty()) fail("expected a value");
    pos_ = end;
    const std::string unsigned_part = token.front() == '+' || token.front() == '-' ? token.substr(1) : token;
    const bool negative = token.front() == '-';
    if (unsigned_part == "inf") return negative ? -std::numeric_limits<double>::infinity()
                                                : std::numeric_limits<double>::infinity();
    if (unsigned_part == "nan") return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data() + (token.front() == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (!is_float) {
      if (!negative) {
        std::uint64_t u = 0;
        const auto [ptr, ec] = std::from_chars(first, last, u);
        if (ec == std::errc() && ptr == last) return u;
      } else {
        std::int64_t i = 0;
        const auto [ptr, ec] = std::from_chars(first, last, i);
        if (ec == std::errc() && ptr == last) return i;
      }
      fail("bad integer '" + token + "'");
    }
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec != std::errc() || ptr != last) fail("bad number '" + token + "'");
    return d;
  }

  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

json parse_toml(std::string_view text, LineMap& lines) {
  json root = json::object();
  std::string table;
  std::vector<std::string> raw;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t end = text.find('\n', start);
      raw.emplace_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const std::string_view line = trim(strip_comment(raw[i]));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError("malformed table header", line_no);
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name.empty() || !std::all_of(name.begin(), name.end(), is_bare_key_char))
        throw ConfigError("malformed table name '" + std::string(name) + "'", line_no);
      table = std::string(name);
      if (root.contains(table)) throw ConfigError("table [" + table + "] defined twice", line_no, table);
      root[table] = json::object();
      lines[table] = line_no;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    std::string_view key = trim(line.substr(0, eq));
    if (key.size() >= 2 && (key.front() == '"' || key.front() == '\'') && key.back() == key.front())
      key = key.substr(1, key.size() - 2);
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_bare_key_char))
      throw ConfigError("malformed key '" + std::string(key) + "'", line_no);
    if (table.empty()) throw ConfigError("key '" + std::string(key) + "' must be inside a table", line_no, std::string(key));
    std::string value(trim(line.substr(eq + 1)));
    // Arrays may span lines.
    while (bracket_balance(value) > 0 && i + 1 < raw.size()) value += " " + std::string(trim(strip_comment(raw[++i])));
    const std::string field = table + "." + std::string(key);
    if (root[table].contains(std::string(key))) throw ConfigError("key '" + field + "' given twice", line_no, field);
    root[table][std::string(key)] = ValueParser(value, line_no).parse_complete();
    lines[field] = line_no;
  }
  return root;
}

std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string toml_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  return format_double(d);
}

std::string toml_value(const json& v) {
  if (v.is_string()) return toml_string(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return toml_double(v.get<double>());
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += toml_value(v[i]);
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// Field registry

struct Field {
  const char* table;
  const char* key;
  std::function<void(ExperimentConfig&, const json&, const std::string&, int)> read;
  std::function<json(const ExperimentConfig&)> write;
};

[[noreturn]] void type_error(const std::string& field, int line, const char* expected) {
  throw ConfigError("field '" + field + "' must be " + expected, line, field);
}

void read_into(std::string& dst, const json& v, const std::string& field, int line) {
  if (!v.is_string()) type_error(field, line, "a string");
  dst = v.get<std::string>();
}

void read_into(std::uint64_t& dst, const json& v, const std::string& field, int line) {
  if (v.is_number_unsigned()) dst = v.get<std::uint64_t>();
  else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) dst = static_cast<std::uint64_t>(v.get<std::int64_t>());
  else type_error(field, line, "a non-negative integer");
}

void read_into(int& dst, const json& v, const std::string& field, int line) {
  if (!v.is_number_integer()) type_error(field, line, "an integer");
  const std::int64_t i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) type_error(field, line, "a 32-bit integer");
  dst = static_cast<int>(i);
}

void read_into(double& dst, const json& v, const std::string& field, int line) {
  if (!v.is_number()) type_error(field, line, "a number");
  dst = v.get<double>();
}

void read_into(bool& dst, const json& v, const std::string& field, int line) {
  if (!v.is_boolean()) type_error(field, line, "true or false");
  dst = v.get<bool>();
}

void read_into(std::vector<double>& dst, const json& v, const std::string& field, int line) {
  if (!v.is_array()) type_error(field, line, "an array of numbers");
  dst.clear();
  for (const json& e : v) {
    if (!e.is_number()) type_error(field, line, "an array of numbers");
    dst.push_back(e.get<double>());
  }
}

void read_into(std::vector<std::string>& dst, const json& v, const std::string& field, int line) {
  if (!v.is_array()) type_error(field, line, "an array of strings");
  dst.clear();
  for (const json& e : v) {
    if (!e.is_string()) type_error(field, line, "an array of strings");
    dst.push_back(e.get<std::string>());
  }
}

template <typename T>
Field field(const char* table, const char* key, T ExperimentConfig::*member) {
  return Field{table, key,
               [member](ExperimentConfig& c, const json& v, const std::string& name, int line) {
                 read_into(c.*member, v, name, line);
               },
               [member](const ExperimentConfig& c) { return json(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all{
      field("run", "kind", &ExperimentConfig::kind),
      field("run", "preset", &ExperimentConfig::preset),
      field("run", "profile", &ExperimentConfig::profile),
      field("run", "seed", &ExperimentConfig::seed),
      field("run", "threads", &ExperimentConfig::threads),
      field("run", "out", &ExperimentConfig::out),
      field("model", "id", &ExperimentConfig::model),
      field("model", "size", &ExperimentConfig::model_size),
      field("data", "theta", &ExperimentConfig::theta),
      field("data", "values", &ExperimentConfig::values),
      field("data", "file", &ExperimentConfig::data_file),
      field("summary", "spec", &ExperimentConfig::summary),
      field("summary", "features", &ExperimentConfig::features),
      field("summary", "pilot", &ExperimentConfig::pilot),
      field("engine", "kernel", &ExperimentConfig::kernel),
      field("engine", "bandwidth", &ExperimentConfig::bandwidth),
      field("engine", "accept_fraction", &ExperimentConfig::accept_fraction),
      field("engine", "proposals", &ExperimentConfig::proposals),
      field("engine", "length", &ExperimentConfig::length),
      field("engine", "noisy", &ExperimentConfig::noisy),
      field("engine", "proposal_sd", &ExperimentConfig::proposal_sd),
      field("engine", "theta0", &ExperimentConfig::theta0),
      field("engine", "budget", &ExperimentConfig::budget),
      field("engine", "particles", &ExperimentConfig::particles),
      field("engine", "shrinkage", &ExperimentConfig::shrinkage),
      field("engine", "replicates", &ExperimentConfig::replicates),
      field("engine", "method", &ExperimentConfig::method),
      field("engine", "mask", &ExperimentConfig::mask),
  };
  return all;
}

const std::array<const char*, 5> kTables{"run", "model", "data", "summary", "engine"};

int line_of(const LineMap& lines, const std::string& key) {
  const auto it = lines.find(key);
  return it == lines.end() ? 0 : it->second;
}

void check_choice(const std::string& value, const std::vector<std::string>& allowed, const std::string& name,
                  const LineMap& lines) {
  if (std::find(allowed.begin(), allowed.end(), value) != allowed.end()) return;
  std::string list;
  for (const std::string& a : allowed) list += (list.empty() ? "" : ", ") + (a.empty() ? "\"\"" : a);
  throw ConfigError("field '" + name + "' is '" + value + "'; expected one of " + list, line_of(lines, name), name);
}

void validate(const ExperimentConfig& c, const LineMap& lines) {
  check_choice(c.kind, experiment_kinds(), "run.kind", lines);
  check_choice(c.profile, {"smoke", "desk", "paper"}, "run.profile", lines);
  check_choice(c.kernel, {"uniform", "gaussian"}, "engine.kernel", lines);
  check_choice(c.method, {"", "beaumont", "synthlik", "indirect"}, "engine.method", lines);
  check_choice(c.mask, {"full", "prey-only"}, "engine.mask", lines);
  auto fail = [&](const std::string& name, const std::string& message) {
    throw ConfigError("field '" + name + "' " + message, line_of(lines, name), name);
  };
  if (c.kind == "preset" && c.preset.empty()) fail("run.preset", "is required when run.kind is preset");
  if (c.kind == "baseline" && c.method.empty()) fail("engine.method", "is required when run.kind is baseline");
  if (c.threads < 0) fail("run.threads", "must be non-negative");
  if (c.out.empty()) fail("run.out", "must not be empty");
  if (!(c.bandwidth >= 0.0) || !std::isfinite(c.bandwidth)) fail("engine.bandwidth", "must be finite and non-negative");
  if (!(c.accept_fraction >= 0.0 && c.accept_fraction <= 1.0)) fail("engine.accept_fraction", "must lie in [0, 1]");
  if (!(c.shrinkage > 0.0 && c.shrinkage < 1.0)) fail("engine.shrinkage", "must lie in (0, 1)");
  const int sources = !c.theta.empty() + !c.values.empty() + !c.data_file.empty();
  if (sources > 1) fail("data", "must give at most one of theta, values and file");
}

ExperimentConfig from_json(const json& root, const LineMap& lines) {
  if (!root.is_object()) throw ConfigError("configuration must be a table of tables");
  for (const auto& [table, content] : root.items()) {
    if (std::find_if(kTables.begin(), kTables.end(), [&](const char* t) { return table == t; }) == kTables.end())
      throw ConfigError("unknown table [" + table + "]", line_of(lines, table), table);
    if (!content.is_object()) throw ConfigError("[" + table + "] must be a table", line_of(lines, table), table);
    for (const auto& [key, value] : content.items()) {
      const std::string name = table + "." + key;
      const bool known = std::any_of(fields().begin(), fields().end(),
                                     [&](const Field& f) { return table == f.table && key == f.key; });
      if (!known) throw ConfigError("unknown key '" + name + "'", line_of(lines, name), name);
    }
  }
  ExperimentConfig config;
  for (const Field& f : fields()) {
    if (!root.contains(f.table) || !root[f.table].contains(f.key)) continue;
    const std::string name = std::string(f.table) + "." + f.key;
    f.read(config, root[f.table][f.key], name, line_of(lines, name));
  }
  validate(config, lines);
  return config;
}

json to_json(const ExperimentConfig& config) {
  json root = json::object();
  for (const Field& f : fields()) root[f.table][f.key] = f.write(config);
  return root;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  LineMap lines;
  if (first != std::string_view::npos && text[first] == '{') {
    json root;
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
      const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
      throw ConfigError(std::string("invalid JSON: ") + e.what(), line);
    }
    return from_json(root, lines);
  }
  const json root = parse_toml(text, lines);
  return from_json(root, lines);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), 0, e.field());
  }
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

std::string config_to_toml(const ExperimentConfig& config) {
  const json root = to_json(config);
  std::string out;
  for (const char* table : kTables) {
    if (!out.empty()) out += "\n";
    out += "[" + std::string(table) + "]\n";
    for (const Field& f : fields())
      if (std::string(f.table) == table) out += std::string(f.key) + " = " + toml_value(root[table][f.key]) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(config_to_json(config)); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

}  // namespace abc
