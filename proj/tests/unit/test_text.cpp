#include <gtest/gtest.h>

#include "refind/error.hpp"
#include "refind/spans.hpp"
#include "refind/text.hpp"

namespace refind {
namespace {

TEST(Text, DecodeEncodeRoundTrip) {
  const std::string s = "aé€𝄞 Город";
  const auto chars = text::decode(s);
  EXPECT_EQ(chars.size(), 10u);
  EXPECT_EQ(text::encode(chars), s);
  EXPECT_EQ(text::length(s), 10u);
}

TEST(Text, SliceCountsScalarValues) {
  EXPECT_EQ(text::slice("mètres tall", 1, 6), "ètres");
  EXPECT_EQ(text::slice("Город", 0, 2), "Го");
  EXPECT_THROW(text::slice("abc", 2, 4), ValidationError);
}

TEST(Text, RejectsMalformedUtf8) {
  EXPECT_THROW(text::decode("\xC3"), DataError);
  EXPECT_THROW(text::decode("\xFF"), DataError);
  EXPECT_THROW(text::decode("\xC0\xAF"), DataError);  // overlong '/'
  EXPECT_THROW(text::decode("\xED\xA0\x80"), DataError);  // surrogate
}

TEST(Text, LowercasesAcrossScripts) {
  EXPECT_EQ(text::to_lower(U'A'), U'a');
  EXPECT_EQ(text::to_lower(U'É'), U'é');
  EXPECT_EQ(text::to_lower(U'Г'), U'г');
  EXPECT_EQ(text::to_lower(U'Σ'), U'σ');
  EXPECT_EQ(text::to_lower(U'7'), U'7');
}

TEST(Text, AlnumExcludesPunctuation) {
  EXPECT_TRUE(text::is_alnum(U'ж'));
  EXPECT_TRUE(text::is_alnum(U'9'));
  EXPECT_FALSE(text::is_alnum(U'\u2014'));
  EXPECT_FALSE(text::is_alnum(U'«'));
  EXPECT_FALSE(text::is_alnum(U' '));
}

TEST(Spans, ValidatesInvariants) {
  EXPECT_NO_THROW(CharSpanSet({{0, 2}, {3, 5}}, 5));
  EXPECT_THROW(CharSpanSet({{3, 5}, {0, 2}}, 5), ValidationError);
  EXPECT_THROW(CharSpanSet({{0, 3}, {2, 5}}, 5), ValidationError);
  EXPECT_THROW(CharSpanSet({{0, 6}}, 5), ValidationError);
  EXPECT_THROW(CharSpanSet({{2, 2}}, 5), ValidationError);
}

TEST(Spans, NormalizedMergesTouchingAndOverlapping) {
  const auto s = CharSpanSet::normalized({{5, 7}, {0, 2}, {2, 3}, {6, 9}, {4, 4}}, 10);
  EXPECT_EQ(s.spans(), (std::vector<CharRange>{{0, 3}, {5, 9}}));
  EXPECT_EQ(s.covered(), 7u);
}

TEST(Spans, CharSetExamples) {
  EXPECT_EQ(char_set(CharSpanSet({{2, 5}}, 10)), (std::set<std::size_t>{2, 3, 4}));
  EXPECT_TRUE(char_set(CharSpanSet({}, 10)).empty());
  EXPECT_EQ(char_set(CharSpanSet({{0, 2}, {5, 6}}, 10)), (std::set<std::size_t>{0, 1, 5}));
}

}  // namespace
}  // namespace refind
