#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncflab/error.hpp"

namespace ncflab::config {

/// Scalar or list value from a config file.
struct Value {
  enum class Kind { number, string, boolean, list };
  Kind kind = Kind::number;
  double num = 0.0;
  std::string str;
  bool flag = false;
  std::vector<Value> items;

  std::string describe() const {
    switch (kind) {
      case Kind::number: {
        std::ostringstream os;
        os << num;
        return os.str();
      }
      case Kind::string: return '"' + str + '"';
      case Kind::boolean: return flag ? "true" : "false";
      case Kind::list: {
        std::string s = "[";
        for (size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i].describe();
        return s + "]";
      }
    }
    return {};
  }
};

/// Key/value pairs of one [section]. Accessors fall back to the given default when a key is absent.
class Section {
 public:
  std::string name;
  std::map<std::string, Value> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  double num(const std::string& key, double def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    if (it->second.kind != Value::Kind::number) throw invalid_input(where(key) + " must be a number");
    return it->second.num;
  }

  long integer(const std::string& key, long def) const {
    const double v = num(key, static_cast<double>(def));
    if (v != static_cast<double>(static_cast<long>(v))) throw invalid_input(where(key) + " must be an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& key, bool def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    if (it->second.kind != Value::Kind::boolean) throw invalid_input(where(key) + " must be true or false");
    return it->second.flag;
  }

  std::string string(const std::string& key, const std::string& def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    if (it->second.kind != Value::Kind::string) throw invalid_input(where(key) + " must be a string");
    return it->second.str;
  }

  std::vector<double> nums(const std::string& key, std::vector<double> def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    if (it->second.kind != Value::Kind::list) throw invalid_input(where(key) + " must be a list");
    std::vector<double> out;
    for (const auto& v : it->second.items) {
      if (v.kind != Value::Kind::number) throw invalid_input(where(key) + " must hold numbers");
      out.push_back(v.num);
    }
    return out;
  }

  std::vector<long> integers(const std::string& key, std::vector<long> def) const {
    std::vector<double> d(def.begin(), def.end());
    std::vector<long> out;
    for (double v : nums(key, d)) {
      if (v != static_cast<double>(static_cast<long>(v))) throw invalid_input(where(key) + " must hold integers");
      out.push_back(static_cast<long>(v));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    if (it->second.kind != Value::Kind::list) throw invalid_input(where(key) + " must be a list");
    std::vector<std::string> out;
    for (const auto& v : it->second.items) {
      if (v.kind != Value::Kind::string) throw invalid_input(where(key) + " must hold strings");
      out.push_back(v.str);
    }
    return out;
  }

 private:
  std::string where(const std::string& key) const { return "[" + name + "] " + key; }
};

struct Document {
  std::map<std::string, Section> sections;
  std::vector<std::string> order;  // section names in file order

  const Section& section(const std::string& name) const {
    static const Section empty;
    auto it = sections.find(name);
    return it == sections.end() ? empty : it->second;
  }
};

namespace detail {

class Parser {
 public:
  Parser(const std::string& text, std::string origin) : s_(text), origin_(std::move(origin)) {}

  Document parse() {
    Document doc;
    Section* cur = &open(doc, "");
    while (pos_ < s_.size()) {
      skip_blank();
      if (pos_ >= s_.size()) break;
      const char c = s_[pos_];
      if (c == '\n') {
        ++pos_;
        ++line_;
      } else if (c == '#') {
        skip_comment();
      } else if (c == '[') {
        ++pos_;
        const std::string name = ident();
        skip_blank();
        expect(']');
        cur = &open(doc, name);
        end_of_line();
      } else {
        const std::string key = ident();
        skip_blank();
        expect('=');
        skip_blank();
        if (cur->values.count(key)) fail("duplicate key '" + key + "'");
        cur->values[key] = value();
        end_of_line();
      }
    }
    if (doc.sections[""].values.empty()) {
      doc.sections.erase("");
      doc.order.erase(doc.order.begin());
    }
    return doc;
  }

 private:
  Section& open(Document& doc, const std::string& name) {
    if (doc.sections.count(name) && !name.empty()) fail("duplicate section [" + name + "]");
    Section& s = doc.sections[name];
    s.name = name;
    doc.order.push_back(name);
    return s;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw invalid_input(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  void skip_blank() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  void skip_comment() {
    while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void end_of_line() {
    skip_blank();
    if (pos_ < s_.size() && s_[pos_] == '#') skip_comment();
    if (pos_ < s_.size() && s_[pos_] != '\n') fail("unexpected trailing characters");
  }

  std::string ident() {
    const size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-' || s_[pos_] == '.'))
      ++pos_;
    if (pos_ == start) fail("expected a name");
    return s_.substr(start, pos_ - start);
  }

  Value value() {
    if (pos_ >= s_.size()) fail("missing value");
    Value v;
    const char c = s_[pos_];
    if (c == '"') {
      ++pos_;
      v.kind = Value::Kind::string;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\n') fail("unterminated string");
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        v.str += s_[pos_++];
      }
      expect('"');
    } else if (c == '[') {
      ++pos_;
      v.kind = Value::Kind::list;
      for (;;) {
        skip_ws_nl();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          break;
        }
        v.items.push_back(value());
        skip_ws_nl();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        skip_ws_nl();
        expect(']');
        break;
      }
    } else if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      v.kind = Value::Kind::boolean;
      v.flag = true;
    } else if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      v.kind = Value::Kind::boolean;
    } else {
      const size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                  s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == '_'))
        ++pos_;
      std::string tok = s_.substr(start, pos_ - start);
      tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
      try {
        size_t used = 0;
        v.num = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail("cannot parse value '" + tok + "'");
      }
    }
    return v;
  }

  void skip_ws_nl() {
    for (;;) {
      skip_blank();
      if (pos_ < s_.size() && s_[pos_] == '#') skip_comment();
      if (pos_ < s_.size() && s_[pos_] == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      break;
    }
  }

  const std::string& s_;
  std::string origin_;
  size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

/// Parses the TOML subset used by experiment files: [sections], key = value with numbers,
/// quoted strings, booleans and (possibly multi-line) lists, and # comments.
inline Document parse(const std::string& text, const std::string& origin = "<config>") {
  return detail::Parser(text, origin).parse();
}

inline Document load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw invalid_input("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

}  // namespace ncflab::config
