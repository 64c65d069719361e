#include "refind/toy_lm.hpp"

#include <algorithm>
#include <cmath>

#include "refind/error.hpp"
#include "refind/text.hpp"

namespace refind::lm {

ToyModel ToyModel::fit(std::string_view training_text) {
  const auto chars = text::decode(training_text);
  if (chars.size() < 3) throw ValidationError("toy model needs at least 3 characters of training text");
  ToyModel m;
  m.alphabet_.assign(chars.begin(), chars.end());
  std::sort(m.alphabet_.begin(), m.alphabet_.end());
  m.alphabet_.erase(std::unique(m.alphabet_.begin(), m.alphabet_.end()), m.alphabet_.end());
  for (std::uint32_t i = 0; i < m.alphabet_.size(); ++i) m.ids_.emplace(m.alphabet_[i], i);
  for (std::size_t i = 2; i < chars.size(); ++i) {
    const auto a = m.symbol(chars[i - 2]);
    const auto b = m.symbol(chars[i - 1]);
    ++m.trigram_counts_[key(a, b, m.symbol(chars[i]))];
    ++m.history_counts_[key(a, b, 0)];
  }
  return m;
}

std::uint32_t ToyModel::symbol(char32_t c) const {
  if (c == kBoundary) return static_cast<std::uint32_t>(alphabet_.size() + 1);
  const auto it = ids_.find(c);
  return it == ids_.end() ? static_cast<std::uint32_t>(alphabet_.size()) : it->second;
}

double ToyModel::prob(char32_t h1, char32_t h2, char32_t next) const {
  const auto a = symbol(h1);
  const auto b = symbol(h2);
  const auto tri = trigram_counts_.find(key(a, b, symbol(next)));
  const auto hist = history_counts_.find(key(a, b, 0));
  const double num = (tri == trigram_counts_.end() ? 0.0 : tri->second) + 1.0;
  const double den = (hist == history_counts_.end() ? 0.0 : hist->second) + static_cast<double>(vocab_size());
  return num / den;
}

std::vector<double> toy_lm_score(const ToyModel& model, std::string_view prefix,
                                 const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw ValidationError("toy_lm_score needs at least one token");
  const auto p = text::decode(prefix);
  char32_t h1 = p.size() >= 2 ? p[p.size() - 2] : ToyModel::kBoundary;
  char32_t h2 = p.empty() ? ToyModel::kBoundary : p.back();
  std::vector<double> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    double lp = 0.0;
    for (char32_t c : text::decode(tok)) {
      lp += std::log(model.prob(h1, h2, c));
      h1 = h2;
      h2 = c;
    }
    out.push_back(lp);
  }
  return out;
}

}  // namespace refind::lm
