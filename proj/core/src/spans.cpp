#include "refind/spans.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "refind/error.hpp"

namespace refind {

CharSpanSet::CharSpanSet(std::vector<CharRange> spans, std::size_t text_len)
    : spans_(std::move(spans)), text_len_(text_len) {
  for (std::size_t i = 0; i < spans_.size(); ++i) {
    const auto& s = spans_[i];
    if (s.start >= s.end || s.end > text_len_) {
      throw ValidationError(fmt::format("span [{}, {}) invalid for text length {}", s.start, s.end, text_len_));
    }
    if (i > 0 && spans_[i - 1].end > s.start) {
      throw ValidationError(fmt::format("spans [{}, {}) and [{}, {}) overlap or are unsorted", spans_[i - 1].start,
                                        spans_[i - 1].end, s.start, s.end));
    }
  }
}

CharSpanSet CharSpanSet::normalized(std::vector<CharRange> spans, std::size_t text_len) {
  std::erase_if(spans, [](const CharRange& r) { return r.empty(); });
  std::sort(spans.begin(), spans.end());
  std::vector<CharRange> merged;
  for (const auto& r : spans) {
    if (r.end > text_len) {
      throw ValidationError(fmt::format("span [{}, {}) exceeds text length {}", r.start, r.end, text_len));
    }
    if (!merged.empty() && r.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, r.end);
    } else {
      merged.push_back(r);
    }
  }
  return CharSpanSet(std::move(merged), text_len);
}

std::size_t CharSpanSet::covered() const noexcept {
  std::size_t n = 0;
  for (const auto& s : spans_) n += s.size();
  return n;
}

std::set<std::size_t> char_set(const CharSpanSet& spans) {
  std::set<std::size_t> out;
  for (const auto& s : spans.spans()) {
    for (auto i = s.start; i < s.end; ++i) out.insert(i);
  }
  return out;
}

}  // namespace refind
