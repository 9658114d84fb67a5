#pragma once
// Line-oriented input files: '#' starts a comment, blank lines are skipped,
// the first significant line is the schema tag.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jss/errors.hpp"
#include "jss/expr.hpp"

namespace jss::io {

struct Token {
  std::string text;
  int column = 1;
};

struct Line {
  int number = 0;
  std::string text;  // comment stripped
  std::vector<Token> tokens;

  // Everything after token i, with its starting column.
  std::string rest(size_t i, int* column = nullptr) const {
    if (i >= tokens.size()) {
      if (column) *column = static_cast<int>(text.size()) + 1;
      return "";
    }
    if (column) *column = tokens[i].column;
    return text.substr(tokens[i].column - 1);
  }
  [[noreturn]] void fail(const std::string& msg, size_t token) const {
    int col = token < tokens.size() ? tokens[token].column : static_cast<int>(text.size()) + 1;
    throw ParseError(msg, number, col);
  }
  void expect_size(size_t lo, size_t hi) const {
    if (tokens.size() < lo) fail("expected more fields after '" + tokens[0].text + "'", tokens.size());
    if (tokens.size() > hi) fail("unexpected field '" + tokens[hi].text + "'", hi);
  }
};

inline std::vector<Line> split_lines(const std::string& content) {
  std::vector<Line> out;
  std::istringstream in(content);
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    Line l;
    l.number = n;
    l.text = raw;
    for (size_t i = 0; i < raw.size();) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      if (i >= raw.size()) break;
      size_t j = i;
      while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
      l.tokens.push_back({raw.substr(i, j - i), static_cast<int>(i) + 1});
      i = j;
    }
    if (!l.tokens.empty()) out.push_back(std::move(l));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "'", 0, 0);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Splits off the schema line and checks it.
inline std::vector<Line> body(const std::string& content, std::string_view schema) {
  auto lines = split_lines(content);
  if (lines.empty()) throw ParseError("empty file, expected '" + std::string(schema) + "'", 1, 1);
  const Line& h = lines.front();
  if (h.tokens.size() != 1 || h.tokens[0].text != schema)
    throw ParseError("expected schema tag '" + std::string(schema) + "', found '" + h.tokens[0].text + "'", h.number,
                     h.tokens[0].column);
  lines.erase(lines.begin());
  return lines;
}

inline Expr parse_expr(const Line& l, const std::string& text, int column) {
  auto first = text.find_first_not_of(" \t");
  if (first == std::string::npos) throw ParseError("missing expression", l.number, column);
  return Expr::parse(text, l.number, column);
}

// A number written as a constant expression, e.g. "pi/2".
inline double parse_number(const Line& l, size_t token) {
  if (token >= l.tokens.size()) l.fail("missing number", token);
  Expr e = Expr::parse(l.tokens[token].text, l.number, l.tokens[token].column);
  if (!e.is_constant()) l.fail("expected a constant, found '" + l.tokens[token].text + "'", token);
  double v = e.eval({0, 0, 0, 0});
  if (!std::isfinite(v)) l.fail("non-finite number", token);
  return v;
}

inline int parse_int(const Line& l, size_t token) {
  if (token >= l.tokens.size()) l.fail("missing integer", token);
  const std::string& s = l.tokens[token].text;
  size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) l.fail("expected an integer, found '" + s + "'", token);
  return v;
}

// ---------------------------------------------------------------------------------------------
// Output

// 17 significant digits: every double round-trips.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : f_(path, std::ios::binary), path_(path) {
    if (!f_) throw ParseError("cannot write '" + path + "'", 0, 0);
    row_strings(header);
  }
  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((f_ << (first ? "" : ",") << cell(v), first = false), ...);
    f_ << '\n';
  }
  void row_strings(const std::vector<std::string>& v) {
    for (size_t i = 0; i < v.size(); ++i) f_ << (i ? "," : "") << v[i];
    f_ << '\n';
  }
  void row_values(const std::vector<double>& v) {
    for (size_t i = 0; i < v.size(); ++i) f_ << (i ? "," : "") << fmt(v[i]);
    f_ << '\n';
  }

 private:
  std::ofstream f_;
  std::string path_;
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(const std::string& v) { return v; }
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ParseError("missing column '" + name + "'", 1, 1);
  }
  std::vector<double> numbers(const std::string& name) const {
    int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      const std::string& s = rows[i].at(c);
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') throw ParseError("bad number '" + s + "'", static_cast<int>(i) + 2, c + 1);
      out.push_back(v);
    }
    return out;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> v;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) v.push_back(cur);
    return v;
  };
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size()) throw ParseError(path + ": wrong number of cells", n, 1);
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError(path + ": empty table", 1, 1);
  return t;
}

// FNV-1a, enough to tell inputs apart in a manifest.
inline std::string content_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace jss::io
