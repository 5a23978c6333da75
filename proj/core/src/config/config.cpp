#include "mosanet/config/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"

namespace mosanet::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string scalar_to_toml(const Value::Scalar& s) {
  if (std::holds_alternative<bool>(s)) return std::get<bool>(s) ? "true" : "false";
  if (std::holds_alternative<double>(s)) return format_double(std::get<double>(s));
  std::string out = "\"";
  for (char c : std::get<std::string>(s)) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

class ValueParser {
 public:
  ValueParser(const std::string& text, bool allow_bare) : s_(text), bare_(allow_bare) {}

  Value parse() {
    skip_ws();
    Value v;
    if (peek() == '[') {
      ++i_;
      std::vector<Value::Scalar> items;
      skip_ws();
      if (peek() == ']') {
        ++i_;
      } else {
        while (true) {
          items.push_back(scalar());
          skip_ws();
          if (peek() == ',') {
            ++i_;
            skip_ws();
            if (peek() == ']') {
              ++i_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++i_;
            break;
          }
          throw UsageError("expected ',' or ']' in array");
        }
      }
      v.data = std::move(items);
    } else {
      const std::size_t start = i_;
      auto sc = scalar();
      std::visit([&](auto&& x) { v.data = x; }, sc);
      skip_ws();
      // Command-line overrides: "I,D" is one bare string.
      if (bare_ && s_[start] != '"' && i_ < s_.size() && s_[i_] != '#') {
        std::size_t end = s_.find_last_not_of(" \t");
        v.data = s_.substr(start, end + 1 - start);
        i_ = s_.size();
      }
    }
    skip_ws();
    if (i_ < s_.size() && s_[i_] != '#') throw UsageError("trailing characters after value: '" + s_.substr(i_) + "'");
    return v;
  }

 private:
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }

  Value::Scalar scalar() {
    skip_ws();
    if (peek() == '"') {
      ++i_;
      std::string out;
      while (i_ < s_.size() && s_[i_] != '"') {
        if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
          ++i_;
          out += s_[i_] == 'n' ? '\n' : (s_[i_] == 't' ? '\t' : s_[i_]);
        } else {
          out += s_[i_];
        }
        ++i_;
      }
      if (peek() != '"') throw UsageError("unterminated string");
      ++i_;
      return out;
    }
    std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && s_[i_] != '#' && s_[i_] != ' ' && s_[i_] != '\t') ++i_;
    const std::string tok = s_.substr(start, i_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    double d;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    const char* num_begin = (!tok.empty() && tok[0] == '+') ? b + 1 : b;
    auto res = std::from_chars(num_begin, e, d);
    if (!tok.empty() && res.ec == std::errc() && res.ptr == e) return d;
    if (bare_ && !tok.empty()) return tok;
    throw UsageError("cannot parse value '" + tok + "'");
  }

  const std::string& s_;
  std::size_t i_ = 0;
  bool bare_;
};

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

const Value& lookup(const std::map<std::string, Value>& m, const std::string& key) { return m.at(key); }

std::string type_error(const std::string& key, const char* want) {
  return "config key '" + key + "' must be " + want;
}

}  // namespace

std::string Value::to_toml() const {
  if (std::holds_alternative<std::vector<Scalar>>(data)) {
    const auto& items = std::get<std::vector<Scalar>>(data);
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += scalar_to_toml(items[i]);
    }
    return out + "]";
  }
  Scalar s;
  std::visit(
      [&](auto&& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (!std::is_same_v<T, std::vector<Scalar>>) s = x;
      },
      data);
  return scalar_to_toml(s);
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      if (t[0] == '[') {
        const auto close = t.find(']');
        if (close == std::string::npos) throw UsageError("unterminated section header");
        section = trim(t.substr(1, close - 1));
        if (!valid_key(section)) throw UsageError("invalid section name '" + section + "'");
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw UsageError("expected key = value");
      const std::string key = trim(t.substr(0, eq));
      if (!valid_key(key)) throw UsageError("invalid key '" + key + "'");
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.values_.count(full)) throw UsageError("duplicate key '" + full + "'");
      const std::string raw = t.substr(eq + 1);
      cfg.values_[full] = ValueParser(raw, false).parse();
    } catch (const UsageError& ex) {
      throw UsageError(where + ex.what());
    }
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path.string());
  return parse(read_text_file(path), path.string());
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (!valid_key(key) || key.find('.') == std::string::npos) {
    throw UsageError("override key '" + key + "' must look like section.key");
  }
  values_[key] = ValueParser(assignment.substr(eq + 1), true).parse();
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> Config::find_string(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_string(key, "");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  if (!contains(key)) return fallback;
  const auto& v = lookup(values_, key).data;
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  if (std::holds_alternative<double>(v)) return format_double(std::get<double>(v));
  throw UsageError(type_error(key, "a string"));
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!contains(key)) return fallback;
  const auto& v = lookup(values_, key).data;
  if (!std::holds_alternative<double>(v)) throw UsageError(type_error(key, "a number"));
  return std::get<double>(v);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  if (!contains(key)) return fallback;
  const double d = get_double(key, 0.0);
  if (std::floor(d) != d) throw UsageError(type_error(key, "an integer"));
  return static_cast<std::int64_t>(d);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!contains(key)) return fallback;
  const auto& v = lookup(values_, key).data;
  if (!std::holds_alternative<bool>(v)) throw UsageError(type_error(key, "true or false"));
  return std::get<bool>(v);
}

std::vector<std::string> Config::get_string_list(const std::string& key,
                                                 const std::vector<std::string>& fallback) const {
  if (!contains(key)) return fallback;
  const auto& v = lookup(values_, key).data;
  if (std::holds_alternative<std::string>(v)) {
    // Comma-separated convenience form, used by --set overrides.
    std::vector<std::string> out;
    std::stringstream ss(std::get<std::string>(v));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  if (!std::holds_alternative<std::vector<Value::Scalar>>(v)) throw UsageError(type_error(key, "a list of strings"));
  std::vector<std::string> out;
  for (const auto& s : std::get<std::vector<Value::Scalar>>(v)) {
    if (!std::holds_alternative<std::string>(s)) throw UsageError(type_error(key, "a list of strings"));
    out.push_back(std::get<std::string>(s));
  }
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key, const std::vector<double>& fallback) const {
  if (!contains(key)) return fallback;
  const auto& v = lookup(values_, key).data;
  if (std::holds_alternative<double>(v)) return {std::get<double>(v)};
  if (!std::holds_alternative<std::vector<Value::Scalar>>(v)) throw UsageError(type_error(key, "a list of numbers"));
  std::vector<double> out;
  for (const auto& s : std::get<std::vector<Value::Scalar>>(v)) {
    if (!std::holds_alternative<double>(s)) throw UsageError(type_error(key, "a list of numbers"));
    out.push_back(std::get<double>(s));
  }
  return out;
}

void Config::check_known(const std::set<std::string>& declared) const {
  for (const auto& [k, v] : values_) {
    if (!declared.count(k)) throw UsageError("unknown config key '" + k + "'");
  }
}

Config Config::section(const std::string& name) const {
  Config out;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0) out.values_[k] = v;
  }
  return out;
}

std::string Config::to_toml() const {
  std::map<std::string, std::vector<std::pair<std::string, const Value*>>> sections;
  for (const auto& [k, v] : values_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      sections[""].emplace_back(k, &v);
    } else {
      sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), &v);
    }
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [sec, items] : sections) {
    if (!sec.empty()) {
      if (!first) os << '\n';
      os << '[' << sec << "]\n";
    }
    first = false;
    for (const auto& [k, v] : items) os << k << " = " << v->to_toml() << '\n';
  }
  return os.str();
}

}  // namespace mosanet::config
