#pragma once

#include <cstddef>
#include <set>
#include <vector>

namespace refind {

// Half-open character interval [start, end) over an output string.
struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > start ? end - start : 0; }
  bool empty() const noexcept { return end <= start; }

  friend bool operator==(const CharRange&, const CharRange&) = default;
  friend auto operator<=>(const CharRange&, const CharRange&) = default;
};

// Sorted, pairwise-disjoint, non-empty spans over a text of `text_len`
// characters.
class CharSpanSet {
 public:
  CharSpanSet() = default;

  // Validates the invariants; throws ValidationError on violation.
  CharSpanSet(std::vector<CharRange> spans, std::size_t text_len);

  // Sorts, drops empty ranges, and unions overlapping or touching ranges.
  // Ranges must still lie within [0, text_len].
  static CharSpanSet normalized(std::vector<CharRange> spans, std::size_t text_len);

  const std::vector<CharRange>& spans() const noexcept { return spans_; }
  std::size_t text_len() const noexcept { return text_len_; }
  bool empty() const noexcept { return spans_.empty(); }

  // Number of characters covered.
  std::size_t covered() const noexcept;

  friend bool operator==(const CharSpanSet&, const CharSpanSet&) = default;

 private:
  std::vector<CharRange> spans_;
  std::size_t text_len_ = 0;
};

// Set of integer character indices covered by the spans.
std::set<std::size_t> char_set(const CharSpanSet& spans);

}  // namespace refind
