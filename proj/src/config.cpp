#include "delaysynth/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "delaysynth/core.hpp"

namespace delaysynth {
namespace {

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("config line " + std::to_string(line_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_space();
    return pos_ == s_.size() || s_[pos_] == '#';
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string key() {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == '"') return quoted();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-' || s_[pos_] == '.'))
      ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  nlohmann::json value() {
    skip_space();
    if (pos_ == s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return quoted();
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      if (consume(']')) return arr;
      while (true) {
        arr.push_back(value());
        if (consume(']')) break;
        if (!consume(',')) fail("expected ',' or ']' in array");
        if (consume(']')) break;  // trailing comma
      }
      return arr;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string token(s_.substr(start, pos_ - start));
    if (token == "true") return true;
    if (token == "false") return false;
    std::erase(token, '_');
    if (token.empty()) fail("missing value");
    const char* b = token.data();
    const char* e = b + token.size();
    if (token.find_first_of(".eE") == std::string::npos) {
      std::int64_t i = 0;
      const auto r = std::from_chars(b + (token[0] == '+'), e, i);
      if (r.ec == std::errc{} && r.ptr == e) return i;
      std::uint64_t u = 0;
      const auto ru = std::from_chars(b + (token[0] == '+'), e, u);
      if (ru.ec == std::errc{} && ru.ptr == e) return u;
    }
    double d = 0.0;
    const auto r = std::from_chars(b + (token[0] == '+'), e, d);
    if (r.ec != std::errc{} || r.ptr != e) fail("cannot parse value '" + token + "'");
    return d;
  }

 private:
  std::string quoted() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ == s_.size()) fail("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ == s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

nlohmann::json::json_pointer pointer_for(const std::string& dotted) {
  std::string ptr;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    ptr += "/" + dotted.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return nlohmann::json::json_pointer(ptr);
}

}  // namespace

nlohmann::json parse_config(std::string_view text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* section = &root;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    LineParser p(line, line_no);
    if (!p.at_end_or_comment()) {
      if (p.consume('[')) {
        const std::string name = p.key();
        if (!p.consume(']')) p.fail("expected ']' after section name");
        if (!p.at_end_or_comment()) p.fail("trailing characters after section header");
        auto& target = root[pointer_for(name)];
        if (target.is_null()) target = nlohmann::json::object();
        if (!target.is_object()) p.fail("section '" + name + "' clashes with a key");
        section = &target;
      } else {
        const std::string key = p.key();
        if (!p.consume('=')) p.fail("expected '=' after key '" + key + "'");
        nlohmann::json v = p.value();
        if (!p.at_end_or_comment()) p.fail("trailing characters after value");
        if (section->contains(key)) p.fail("duplicate key '" + key + "'");
        (*section)[key] = std::move(v);
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return root;
}

nlohmann::json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace delaysynth
