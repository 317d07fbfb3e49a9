#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "umhi/graph.hpp"

namespace umhi {

namespace detail {

// Minimal UTF-8 decode; malformed sequences yield U+FFFD and advance one byte.
inline char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const unsigned char b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  auto cont = [&](std::size_t k) {
    return pos + k < s.size() &&
           (static_cast<unsigned char>(s[pos + k]) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    const char32_t cp = ((b0 & 0x1Fu) << 6) |
                        (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu);
    pos += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    const char32_t cp = ((b0 & 0x0Fu) << 12) |
                        ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 6) |
                        (static_cast<unsigned char>(s[pos + 2]) & 0x3Fu);
    pos += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    const char32_t cp = ((b0 & 0x07u) << 18) |
                        ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 12) |
                        ((static_cast<unsigned char>(s[pos + 2]) & 0x3Fu) << 6) |
                        (static_cast<unsigned char>(s[pos + 3]) & 0x3Fu);
    pos += 4;
    return cp;
  }
  ++pos;
  return 0xFFFD;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
         (cp >= 0x20000 && cp <= 0x2A6DF);    // extension B
}

inline bool is_token_char(char32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
      (cp >= '0' && cp <= '9'))
    return true;
  if (cp < 0x80) return false;  // remaining ASCII is punctuation/whitespace
  if (is_cjk(cp)) return false;
  // Common punctuation / symbol blocks seen in microblog text.
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK symbols
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;  // compat forms
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;  // fullwidth punct
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;
  if (cp >= 0xFF3B && cp <= 0xFF40) return false;
  if (cp >= 0xFF5B && cp <= 0xFF65) return false;
  if (cp == 0xFFFD) return false;
  return true;
}

}  // namespace detail

// Lowercases, keeps contiguous runs of non-CJK letters/digits as one token,
// emits every CJK codepoint as its own token, and discards punctuation and
// whitespace. Segmentation of CJK text beyond per-codepoint splitting is a
// pluggable external concern.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = detail::decode_utf8(text, pos);
    if (cp >= 'A' && cp <= 'Z') cp += 'a' - 'A';
    if (detail::is_cjk(cp)) {
      flush();
      std::string one;
      detail::append_utf8(one, cp);
      tokens.push_back(std::move(one));
    } else if (detail::is_token_char(cp)) {
      detail::append_utf8(current, cp);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

// Word id table; line number equals word id in the on-disk vocabulary file.
class Vocabulary {
 public:
  std::uint32_t intern(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const std::uint32_t id = static_cast<std::uint32_t>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(token);
    return id;
  }

  // -1 sentinel for out-of-vocabulary tokens.
  std::int64_t lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocabulary: " + path);
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing vocabulary: " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) v.intern(line);
    return v;
  }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> tokens_;
};

struct TokenizedPost {
  std::vector<std::uint32_t> tokens;  // word ids, non-empty
  std::int64_t time = 0;
};

}  // namespace umhi
