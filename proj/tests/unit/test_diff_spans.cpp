#include <random>

#include <gtest/gtest.h>

#include "refind/diff_spans.hpp"
#include "refind/error.hpp"
#include "refind/text.hpp"
#include "support/oracles.hpp"
#include "support/support.hpp"

namespace refind {
namespace {

using diff::EditKind;
using diff::EditOp;

std::vector<EditOp> changes(const diff::EditScript& s) {
  std::vector<EditOp> out;
  for (const auto& op : s) {
    if (op.kind != EditKind::kKeep) out.push_back(op);
  }
  return out;
}

TEST(Align, Identity) {
  const auto s = diff::align_texts("same text", "same text");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (EditOp{EditKind::kKeep, 0, "same text"}));
  EXPECT_TRUE(diff::extract_spans(s, 9).empty());
  EXPECT_TRUE(diff::align_texts("", "").empty());
}

TEST(Align, YearExample) {
  const auto s = diff::align_texts("debuted in 2011", "debuted in 2012");
  EXPECT_EQ(changes(s), (std::vector<EditOp>{{EditKind::kDelete, 14, "1"}, {EditKind::kInsert, 15, "2"}}));
  EXPECT_EQ(diff::extract_spans(s, 15, 0).spans(), (std::vector<CharRange>{{14, 15}}));
  EXPECT_EQ(diff::extract_spans(s, 15).spans(), (std::vector<CharRange>{{14, 15}}));
}

TEST(Align, VeryBestExample) {
  const auto s = diff::align_texts("the very best", "the best");
  EXPECT_EQ(changes(s), (std::vector<EditOp>{{EditKind::kDelete, 4, "very "}}));
  EXPECT_EQ(diff::extract_spans(s, 13).spans(), (std::vector<CharRange>{{4, 9}}));
}

TEST(Align, PureInsertionsAnchorToAnOriginalCharacter) {
  const auto mid = diff::align_texts("ab", "axb");
  EXPECT_EQ(diff::extract_spans(mid, 2).spans(), (std::vector<CharRange>{{0, 1}}));
  const auto front = diff::align_texts("ab", "xab");
  EXPECT_EQ(diff::extract_spans(front, 2).spans(), (std::vector<CharRange>{{0, 1}}));
  const auto back = diff::align_texts("ab", "abx");
  EXPECT_EQ(diff::extract_spans(back, 2).spans(), (std::vector<CharRange>{{1, 2}}));
  EXPECT_TRUE(diff::extract_spans(diff::align_texts("", "x"), 0).empty());
}

TEST(Align, CountsScalarValues) {
  const auto s = diff::align_texts("Город 1124", "Город 1129");
  EXPECT_EQ(diff::extract_spans(s, 10).spans(), (std::vector<CharRange>{{9, 10}}));
}

TEST(Extract, MergeGap) {
  const diff::EditScript s = {{EditKind::kKeep, 0, "abcd"},  {EditKind::kDelete, 4, "efghi"},
                              {EditKind::kKeep, 9, "j"},     {EditKind::kDelete, 10, "kl"},
                              {EditKind::kKeep, 12, "mnop"}};
  EXPECT_EQ(diff::extract_spans(s, 16, 2).spans(), (std::vector<CharRange>{{4, 12}}));
  EXPECT_EQ(diff::extract_spans(s, 16, 1).spans(), (std::vector<CharRange>{{4, 9}, {10, 12}}));
  EXPECT_EQ(diff::extract_spans(s, 16, 0).spans(), (std::vector<CharRange>{{4, 9}, {10, 12}}));
}

TEST(Apply, RejectsScriptsThatDoNotFit) {
  const diff::EditScript s = {{EditKind::kKeep, 0, "abc"}};
  EXPECT_EQ(diff::apply_script(s, "abc"), "abc");
  EXPECT_THROW(diff::apply_script(s, "abd"), ValidationError);
  EXPECT_THROW(diff::apply_script(s, "ab"), ValidationError);
}

TEST(EditorPrompt, Rendering) {
  const auto empty = diff::build_editor_prompt(std::vector<std::string>{}, "x");
  EXPECT_EQ(empty,
            "Read the following references:\n\nPlease identify all the errors in the following text using the "
            "information in the references provided and suggest edits if necessary:\n[Text] x\n[Edited] ");
  const auto one = diff::build_editor_prompt(std::vector<std::string>{"Doc one."}, "x");
  EXPECT_NE(one.find("references:\n1. Doc one.\nPlease"), std::string::npos);
  EXPECT_NE(one.find("[Text] x"), std::string::npos);
  EXPECT_EQ(one, diff::build_editor_prompt(std::vector<std::string>{"Doc one."}, "x"));
}

TEST(EditorSettings, RecordsGenerationParameters) {
  const auto j = diff::editor_settings_json();
  EXPECT_EQ(j.at("temperature"), 0.0);
  EXPECT_EQ(j.at("top_p"), 1.0);
  EXPECT_EQ(j.at("max_tokens"), 1024);
}

std::string random_string(std::mt19937& rng, const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::string s;
  const auto n = rng() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

// Round trip, minimality against an independent DP, bounds and identity.
TEST(Align, FuzzedProperties) {
  std::mt19937 rng(99);
  const std::vector<std::string> alphabet = {"a", "b", "c", " ", "é", "д"};
  for (int iter = 0; iter < 2000; ++iter) {
    const auto a = random_string(rng, alphabet, 14);
    auto b = rng() % 4 == 0 ? a : random_string(rng, alphabet, 14);
    const auto s = diff::align_texts(a, b);
    ASSERT_EQ(diff::apply_script(s, a), b) << a << " -> " << b;
    const auto ua = text::decode(a), ub = text::decode(b);
    EXPECT_EQ(diff::edit_distance(s), oracle::indel_distance(ua, ub));
    const auto spans = diff::extract_spans(s, ua.size());
    std::size_t deleted = 0;
    for (const auto& op : s) deleted += op.kind == EditKind::kDelete ? op.length() : 0;
    EXPECT_LE(deleted, diff::edit_distance(s));
    for (const auto& r : spans.spans()) EXPECT_LE(r.end, ua.size());
    if (a == b) {
      EXPECT_TRUE(changes(s).empty());
      EXPECT_TRUE(spans.empty());
    }
  }
}

TEST(RecordedEditor, ReplaysById) {
  test::TempDir dir("ed");
  test::write_text(dir / "e.jsonl", "{\"id\":\"r1\",\"edited\":\"fixed\"}\n");
  auto ed = diff::RecordedEditor::from_file(dir / "e.jsonl");
  EXPECT_EQ(ed.edit("r1", "prompt"), "fixed");
  EXPECT_THROW(ed.edit("r2", "prompt"), DataError);
}

}  // namespace
}  // namespace refind
