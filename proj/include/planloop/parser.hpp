#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "planloop/util.hpp"

namespace planloop {

struct ParseError {
  enum class Kind { MissingTags, Syntax, KeyMismatch };
  Kind kind = Kind::Syntax;
  std::string message;
};

template <typename T>
struct ParseResult {
  std::optional<T> value;
  std::optional<ParseError> error;

  bool ok() const { return value.has_value(); }
  const T& operator*() const { return *value; }
  const T* operator->() const { return &*value; }

  static ParseResult success(T v) {
    ParseResult r;
    r.value = std::move(v);
    return r;
  }
  static ParseResult failure(ParseError::Kind kind, std::string message) {
    ParseResult r;
    r.error = ParseError{kind, std::move(message)};
    return r;
  }
};

struct PrimitiveCall {
  std::string name;
  std::vector<std::string> args;  // literal contents, quotes stripped

  bool operator==(const PrimitiveCall&) const = default;
};

struct SnippetProgram {
  std::vector<PrimitiveCall> calls;

  bool operator==(const SnippetProgram&) const = default;
};

// --- code tag extraction ------------------------------------------------------

// Text between the first <code> and the next </code>. Prose and fenced
// blocks around the tags are fine; the first tag pair wins.
inline ParseResult<std::string> extract_code(const std::string& raw) {
  const std::string open = "<code>";
  const std::string close = "</code>";
  std::size_t begin = raw.find(open);
  if (begin == std::string::npos)
    return ParseResult<std::string>::failure(
        ParseError::Kind::MissingTags,
        "no <code> tag found; enclose the code between <code> and </code>");
  begin += open.size();
  std::size_t end = raw.find(close, begin);
  if (end == std::string::npos)
    return ParseResult<std::string>::failure(
        ParseError::Kind::MissingTags,
        "no closing </code> tag found; enclose the code between <code> and "
        "</code>");
  return ParseResult<std::string>::success(raw.substr(begin, end - begin));
}

// --- lexing helpers -----------------------------------------------------------

namespace lex {

inline void skip_ws(const std::string& s, std::size_t& pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
}

inline void skip_ws_and_newlines(const std::string& s, std::size_t& pos) {
  while (pos < s.size() &&
         (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r'))
    ++pos;
}

inline bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

inline std::string read_ident(const std::string& s, std::size_t& pos) {
  std::size_t start = pos;
  while (pos < s.size() && ident_char(s[pos])) ++pos;
  return s.substr(start, pos - start);
}

// Quoted string literal with escapes resolved. Returns nullopt when `pos`
// is not at a quote or the literal is unterminated (pos is left unchanged
// in the former case).
inline std::optional<std::string> read_string(const std::string& s,
                                              std::size_t& pos, bool* bad) {
  *bad = false;
  if (pos >= s.size() || (s[pos] != '\'' && s[pos] != '"')) return std::nullopt;
  char quote = s[pos++];
  std::string out;
  while (pos < s.size()) {
    char c = s[pos++];
    if (c == quote) return out;
    if (c == '\n') break;  // literals do not span lines
    if (c == '\\' && pos < s.size()) {
      char e = s[pos++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '\'': out += '\''; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: out += e;
      }
      continue;
    }
    out += c;
  }
  *bad = true;
  return std::nullopt;
}

// One or more adjacent string literals, concatenated python-style.
inline std::optional<std::string> read_string_concat(const std::string& s,
                                                     std::size_t& pos,
                                                     bool* bad) {
  auto first = read_string(s, pos, bad);
  if (!first) return std::nullopt;
  std::string out = *first;
  while (true) {
    std::size_t mark = pos;
    skip_ws_and_newlines(s, pos);
    bool inner_bad = false;
    auto next = read_string(s, pos, &inner_bad);
    if (inner_bad) {
      *bad = true;
      return std::nullopt;
    }
    if (!next) {
      pos = mark;
      return out;
    }
    out += *next;
  }
}

}  // namespace lex

// --- snippet grammar -----------------------------------------------------------

namespace detail {

inline std::string line_err(const std::string& what, std::size_t line_no) {
  return what + " (line " + std::to_string(line_no) + ")";
}

inline bool ignorable_line(const std::string& trimmed) {
  return trimmed.empty() || trimmed[0] == '#' ||
         trimmed.rfind("```", 0) == 0;
}

// Parses `name(arg, ...)` starting at pos. On success appends to out.
inline std::optional<std::string> parse_call_line(const std::string& line,
                                                  std::size_t line_no,
                                                  PrimitiveCall* out) {
  std::size_t pos = 0;
  lex::skip_ws(line, pos);
  if (pos >= line.size() || !lex::ident_start(line[pos]))
    return detail::line_err("expected a primitive call", line_no);
  out->name = lex::read_ident(line, pos);
  lex::skip_ws(line, pos);
  if (pos >= line.size() || line[pos] != '(')
    return detail::line_err("expected '(' after '" + out->name + "'", line_no);
  ++pos;
  lex::skip_ws(line, pos);
  while (true) {
    if (pos < line.size() && line[pos] == ')') {
      ++pos;
      break;
    }
    if (pos >= line.size())
      return detail::line_err("unbalanced parentheses", line_no);
    bool bad = false;
    auto arg = lex::read_string_concat(line, pos, &bad);
    if (bad) return detail::line_err("unbalanced quotes", line_no);
    if (!arg)
      return detail::line_err("arguments must be quoted string literals",
                              line_no);
    out->args.push_back(*arg);
    lex::skip_ws(line, pos);
    if (pos < line.size() && line[pos] == ',') {
      ++pos;
      lex::skip_ws(line, pos);  // trailing comma tolerated
      continue;
    }
  }
  lex::skip_ws(line, pos);
  if (pos < line.size() && line[pos] != '#')
    return detail::line_err("unexpected text after call", line_no);
  return std::nullopt;
}

// Comment-stripping that respects string literals.
inline std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

inline bool has_top_level_assignment(const std::string& line) {
  char quote = 0;
  int depth = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '(' || c == '[') {
      ++depth;
    } else if (c == ')' || c == ']') {
      --depth;
    } else if (c == '=' && depth == 0) {
      bool dbl = (i + 1 < line.size() && line[i + 1] == '=') ||
                 (i > 0 && (line[i - 1] == '=' || line[i - 1] == '!' ||
                            line[i - 1] == '<' || line[i - 1] == '>'));
      if (!dbl) return true;
    }
  }
  return false;
}

}  // namespace detail

// Restricted grammar: an optional zero-argument wrapper definition followed
// by an indented block of primitive calls with string-literal arguments.
// Comments, blank lines and fence lines are ignored; a trailing invocation
// of the wrapper is ignored. Everything else is rejected with a line-tagged
// error (the text is fed back to the language model).
inline ParseResult<SnippetProgram> parse_snippet(const std::string& code) {
  using R = ParseResult<SnippetProgram>;
  SnippetProgram program;
  std::vector<std::string> lines = split_lines(code);
  std::string wrapper_name;
  bool saw_wrapper = false;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t line_no = i + 1;
    std::string stripped = detail::strip_comment(lines[i]);
    std::string trimmed = trim(stripped);
    if (detail::ignorable_line(trimmed)) continue;

    std::size_t pos = 0;
    lex::skip_ws(stripped, pos);
    std::size_t probe = pos;
    std::string head = lex::ident_start(stripped[probe])
                           ? lex::read_ident(stripped, probe)
                           : std::string();

    if (head == "for" || head == "while")
      return R::failure(ParseError::Kind::Syntax,
                        detail::line_err("loops are not supported", line_no));
    if (head == "if" || head == "elif" || head == "else")
      return R::failure(
          ParseError::Kind::Syntax,
          detail::line_err("conditionals are not supported", line_no));
    if (head == "def") {
      if (saw_wrapper)
        return R::failure(ParseError::Kind::Syntax,
                          detail::line_err(
                              "nested function definitions are not supported",
                              line_no));
      lex::skip_ws(stripped, probe);
      if (probe >= stripped.size() || !lex::ident_start(stripped[probe]))
        return R::failure(
            ParseError::Kind::Syntax,
            detail::line_err("malformed function definition", line_no));
      wrapper_name = lex::read_ident(stripped, probe);
      lex::skip_ws(stripped, probe);
      bool ok = probe + 1 < stripped.size() && stripped[probe] == '(';
      if (ok) {
        ++probe;
        lex::skip_ws(stripped, probe);
        ok = probe < stripped.size() && stripped[probe] == ')';
      }
      if (ok) {
        ++probe;
        lex::skip_ws(stripped, probe);
        ok = probe < stripped.size() && stripped[probe] == ':';
      }
      if (ok) {
        ++probe;
        lex::skip_ws(stripped, probe);
        ok = probe >= stripped.size();
      }
      if (!ok)
        return R::failure(
            ParseError::Kind::Syntax,
            detail::line_err("malformed function definition", line_no));
      saw_wrapper = true;
      continue;
    }

    if (detail::has_top_level_assignment(stripped))
      return R::failure(
          ParseError::Kind::Syntax,
          detail::line_err("assignments are not supported", line_no));

    PrimitiveCall call;
    if (auto err = detail::parse_call_line(stripped, line_no, &call))
      return R::failure(ParseError::Kind::Syntax, *err);

    // A bare invocation of the wrapper at top level is ignored.
    std::size_t indent = lines[i].find_first_not_of(" \t");
    bool wrapper_call =
        saw_wrapper && call.args.empty() && call.name == wrapper_name;
    if (indent == 0 && wrapper_call) continue;

    program.calls.push_back(std::move(call));
  }

  if (program.calls.empty())
    return R::failure(ParseError::Kind::Syntax, "no primitive calls found");
  return R::success(std::move(program));
}

inline ParseResult<SnippetProgram> parse_tagged_snippet(const std::string& raw) {
  auto code = extract_code(raw);
  if (!code.ok())
    return ParseResult<SnippetProgram>::failure(code.error->kind,
                                                code.error->message);
  return parse_snippet(*code);
}

// Canonical wrapper-form rendering; parse_snippet(print_snippet(p)) == p.
inline std::string print_snippet(const SnippetProgram& program) {
  std::string out = "def do():\n";
  for (const auto& call : program.calls) {
    out += "    " + call.name + "(";
    for (std::size_t i = 0; i < call.args.size(); ++i) {
      if (i > 0) out += ", ";
      out += py_quote(call.args[i]);
    }
    out += ")\n";
  }
  out += "do()\n";
  return out;
}

// --- plan literal ---------------------------------------------------------------

namespace detail {

inline std::string strip_enumeration(const std::string& s) {
  std::size_t pos = 0;
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
    ++pos;
  std::size_t digits = pos;
  while (digits < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[digits])))
    ++digits;
  if (digits > pos && digits < s.size() &&
      (s[digits] == '.' || s[digits] == ')')) {
    ++digits;
    while (digits < s.size() &&
           std::isspace(static_cast<unsigned char>(s[digits])))
      ++digits;
    return s.substr(digits);
  }
  return trim(s);
}

// Attempts a tuple/list of strings at `pos` (just past the opener).
inline std::optional<std::vector<std::string>> try_string_sequence(
    const std::string& s, std::size_t pos, char closer) {
  std::vector<std::string> items;
  lex::skip_ws_and_newlines(s, pos);
  if (pos < s.size() && s[pos] == closer) return items;  // empty literal
  while (true) {
    bool bad = false;
    auto item = lex::read_string_concat(s, pos, &bad);
    if (bad || !item) return std::nullopt;
    items.push_back(strip_enumeration(*item));
    lex::skip_ws_and_newlines(s, pos);
    if (pos < s.size() && s[pos] == ',') {
      ++pos;
      lex::skip_ws_and_newlines(s, pos);
      if (pos < s.size() && s[pos] == closer) return items;  // trailing comma
      continue;
    }
    if (pos < s.size() && s[pos] == closer) return items;
    return std::nullopt;
  }
}

}  // namespace detail

// Finds the first tuple-or-list literal of quoted strings in the raw
// completion. Fenced blocks, trailing commas and line-broken entries are
// tolerated; leading enumeration ("1.") inside entries is stripped.
inline ParseResult<std::vector<std::string>> parse_plan(const std::string& raw) {
  using R = ParseResult<std::vector<std::string>>;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '(' && raw[i] != '[') continue;
    char closer = raw[i] == '(' ? ')' : ']';
    if (auto items = detail::try_string_sequence(raw, i + 1, closer))
      return R::success(std::move(*items));
  }
  return R::failure(ParseError::Kind::Syntax,
                    "no plan literal found; output the plan as a tuple of "
                    "strings");
}

// --- expected-outcomes dictionary -------------------------------------------------

// Ordered key/value entries of the first string->string map literal.
inline ParseResult<std::vector<std::pair<std::string, std::string>>>
parse_dict_literal(const std::string& raw) {
  using R = ParseResult<std::vector<std::pair<std::string, std::string>>>;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '{') continue;
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t pos = i + 1;
    lex::skip_ws_and_newlines(raw, pos);
    bool good = true;
    if (pos < raw.size() && raw[pos] == '}') return R::success(entries);
    while (good) {
      bool bad = false;
      auto key = lex::read_string_concat(raw, pos, &bad);
      if (bad || !key) {
        good = false;
        break;
      }
      lex::skip_ws_and_newlines(raw, pos);
      if (pos >= raw.size() || raw[pos] != ':') {
        good = false;
        break;
      }
      ++pos;
      lex::skip_ws_and_newlines(raw, pos);
      auto value = lex::read_string_concat(raw, pos, &bad);
      if (bad || !value) {
        good = false;
        break;
      }
      entries.emplace_back(*key, *value);
      lex::skip_ws_and_newlines(raw, pos);
      if (pos < raw.size() && raw[pos] == ',') {
        ++pos;
        lex::skip_ws_and_newlines(raw, pos);
        if (pos < raw.size() && raw[pos] == '}')
          return R::success(std::move(entries));
        continue;
      }
      if (pos < raw.size() && raw[pos] == '}')
        return R::success(std::move(entries));
      good = false;
    }
  }
  return R::failure(ParseError::Kind::Syntax,
                    "no dictionary literal found; output a python dictionary "
                    "of strings");
}

// Aligns the parsed map to the plan: exact key equality first, index order
// as a fallback when the counts match (models paraphrase keys).
inline ParseResult<std::vector<std::pair<std::string, std::string>>>
parse_eo_map(const std::string& raw, const std::vector<std::string>& plan) {
  using R = ParseResult<std::vector<std::pair<std::string, std::string>>>;
  auto parsed = parse_dict_literal(raw);
  if (!parsed.ok()) return parsed;
  const auto& entries = *parsed;

  bool all_found = true;
  std::vector<std::pair<std::string, std::string>> aligned;
  for (const auto& step : plan) {
    bool found = false;
    for (const auto& [k, v] : entries) {
      if (k == step) {
        aligned.emplace_back(step, v);
        found = true;
        break;
      }
    }
    if (!found) {
      all_found = false;
      break;
    }
  }
  if (all_found) return R::success(std::move(aligned));

  if (entries.size() == plan.size()) {
    aligned.clear();
    for (std::size_t i = 0; i < plan.size(); ++i)
      aligned.emplace_back(plan[i], entries[i].second);
    return R::success(std::move(aligned));
  }
  return R::failure(ParseError::Kind::KeyMismatch,
                    "expected-outcome keys match neither the plan steps nor "
                    "their count");
}

// --- literal rendering (prompt side) ---------------------------------------------

inline std::string render_plan_literal(const std::vector<std::string>& steps) {
  std::string out = "(";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) out += ", ";
    out += py_quote(steps[i]);
  }
  if (steps.size() == 1) out += ",";
  out += ")";
  return out;
}

inline std::string render_dict_literal(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out = "{";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) out += ", ";
    out += py_quote(entries[i].first);
    out += ": ";
    out += py_quote(entries[i].second);
  }
  out += "}";
  return out;
}

}  // namespace planloop
