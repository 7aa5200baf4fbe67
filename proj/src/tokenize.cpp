#include <cctype>

#include "hdcn/corpus.hpp"

namespace hdcn {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool joins_words(char c) {
  switch (c) {
    case '\'':
    case '-':
    case ':':
    case '.':
    case '/':
    case '&':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view gate_name(Gate g) {
  switch (g) {
    case Gate::ptr:
      return "ptr";
    case Gate::none:
      return "none";
    case Gate::dontcare:
      return "dontcare";
  }
  return "ptr";
}

Gate gate_for_value(std::string_view value) {
  if (value == kNoneToken) return Gate::none;
  if (value == kDontcareToken) return Gate::dontcare;
  return Gate::ptr;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
    } else if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (joins_words(text[i]) && !cur.empty() && i + 1 < text.size() &&
               is_word_char(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back(text[i]);
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string normalize_value(std::string_view raw) {
  const auto toks = tokenize(raw);
  if (toks.empty()) return std::string(kNoneToken);
  std::string v = detokenize(toks);
  if (v == "dont care" || v == "don't care" || v == "do n't care" || v == "do not care" ||
      v == "don 't care" || v == "dontcare") {
    return std::string(kDontcareToken);
  }
  return v;
}

}  // namespace hdcn
