#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace refind::lm {

// Character trigram model with add-one smoothing. The outcome alphabet is
// every scalar seen in training plus one unknown symbol; histories shorter
// than two characters are padded with a boundary symbol that never appears
// in training, so they fall back to the uniform distribution.
class ToyModel {
 public:
  // Requires at least 3 characters of training text.
  static ToyModel fit(std::string_view training_text);

  // P(next | h1 h2), histories and outcome mapped onto the alphabet.
  double prob(char32_t h1, char32_t h2, char32_t next) const;

  // Outcome alphabet size including the unknown symbol.
  std::size_t vocab_size() const noexcept { return alphabet_.size() + 1; }
  const std::vector<char32_t>& alphabet() const noexcept { return alphabet_; }

  static constexpr char32_t kBoundary = 0xFFFFFFFF;

 private:
  std::uint32_t symbol(char32_t c) const;
  static std::uint64_t key(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) | c;
  }

  std::vector<char32_t> alphabet_;  // sorted
  std::unordered_map<char32_t, std::uint32_t> ids_;
  std::unordered_map<std::uint64_t, std::uint32_t> trigram_counts_;
  std::unordered_map<std::uint64_t, std::uint32_t> history_counts_;
};

inline ToyModel toy_lm_fit(std::string_view training_text) { return ToyModel::fit(training_text); }

// Natural-log probability of each token given `prefix` and the preceding
// tokens: the sum of its characters' conditional log-probabilities.
std::vector<double> toy_lm_score(const ToyModel& model, std::string_view prefix,
                                 const std::vector<std::string>& tokens);

}  // namespace refind::lm
