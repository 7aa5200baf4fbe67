#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hdcn/corpus.hpp"

namespace hdcn {

// Dense token <-> id bijection. Ids 0..5 are reserved.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNone = 4;
  static constexpr int kDontcare = 5;
  static constexpr int kNumReserved = 6;

  Vocab();
  // Restores a vocabulary from its id-ordered token list; the reserved
  // tokens must come first, in order.
  static Vocab from_tokens(std::vector<std::string> tokens);

  int add(const std::string& token);
  // UNK for unknown tokens.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Utterance tokens with frequency >= min_count, plus every slot-name word
// and every value token found in the training states. Tokens are added in
// lexicographic order for a stable id assignment.
Vocab build_vocab(const Corpus& corpus, int min_count);

}  // namespace hdcn
