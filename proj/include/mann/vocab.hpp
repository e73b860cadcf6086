#pragma once

// Character vocabulary with four reserved symbols ahead of the data
// characters. Data characters are stored sorted by code point so the index
// assignment is independent of input order and stable under reload.

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mann/unicode.hpp"

namespace mann {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBow = 1;
  static constexpr int kEow = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  Vocabulary() = default;

  static Vocabulary from_chars(const std::set<char32_t>& chars) {
    Vocabulary v;
    v.chars_.assign(chars.begin(), chars.end());
    for (std::size_t i = 0; i < v.chars_.size(); ++i)
      v.index_[v.chars_[i]] = static_cast<int>(i) + kReserved;
    return v;
  }

  static Vocabulary from_words(const std::vector<Word>& words) {
    std::set<char32_t> chars;
    for (const Word& w : words) chars.insert(w.begin(), w.end());
    return from_chars(chars);
  }

  int size() const { return static_cast<int>(chars_.size()) + kReserved; }

  // unknown characters map to kUnk
  int encode(char32_t c) const {
    auto it = index_.find(c);
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<int> encode(const Word& w) const {
    std::vector<int> ids;
    ids.reserve(w.size());
    for (char32_t c : w) ids.push_back(encode(c));
    return ids;
  }

  bool contains(char32_t c) const { return index_.count(c) != 0; }

  char32_t decode(int index) const {
    if (index < kReserved || index >= size())
      throw std::out_of_range("vocabulary index out of range");
    return chars_[static_cast<std::size_t>(index - kReserved)];
  }

  // data characters in index order (index = position + kReserved)
  const std::vector<char32_t>& chars() const { return chars_; }

  bool operator==(const Vocabulary& o) const { return chars_ == o.chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> index_;
};

}  // namespace mann
