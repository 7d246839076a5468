//------------------------------------------------------------------------------
//
//   Copyright 2026 The ids-embed Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "test_support.hpp"

using namespace ids_embed;
using ids_embed::testing::QuietWarnings;

namespace {

std::string const kHeader = std::string(kAttributeHeader) + "\n";

Vocabulary vocab_from(std::string const &sessions, std::string const &attributes)
{
  std::istringstream s(sessions);
  std::istringstream a(kHeader + attributes);
  return build_vocabulary(s, a);
}

SessionCorpus sessions_from(std::string const &text, Vocabulary const &vocab,
                            UnknownTokenPolicy policy = UnknownTokenPolicy::Strict)
{
  std::istringstream in(text);
  return load_sessions(in, vocab, policy);
}

AttributeTable attrs_from(std::string const &rows, Vocabulary const &vocab)
{
  std::istringstream in(kHeader + rows);
  return load_attributes(in, vocab);
}

// Vocabulary whose item order is exactly a, b, c.
Vocabulary abc_vocab()
{
  return vocab_from("a a a b b c\n", "");
}

}  // namespace

TEST(LoadSessions, MapsTokensToIndices)
{
  auto const corpus = sessions_from("a b\nb c\n", abc_vocab());
  std::vector<std::vector<Index>> const expected{{0, 1}, {1, 2}};
  EXPECT_EQ(corpus.sessions, expected);
  EXPECT_EQ(corpus.total_tokens(), 4u);
}

TEST(LoadSessions, SkipsEmptyLinesWithWarning)
{
  QuietWarnings quiet;
  auto const    corpus = sessions_from("a b\n\nc\n", abc_vocab());
  EXPECT_EQ(corpus.sessions.size(), 2u);
  EXPECT_EQ(corpus.skipped_empty, 1u);
  ASSERT_EQ(quiet.messages.size(), 1u);
}

TEST(LoadSessions, UnknownTokenStrictThrows)
{
  try
  {
    sessions_from("a zzz\n", abc_vocab());
    FAIL() << "expected UnknownToken";
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::UnknownToken);
  }
}

TEST(LoadSessions, UnknownTokenLenientDrops)
{
  QuietWarnings quiet;
  auto const    corpus = sessions_from("a zzz b\nzzz\n", abc_vocab(), UnknownTokenPolicy::Lenient);
  std::vector<std::vector<Index>> const expected{{0, 1}};
  EXPECT_EQ(corpus.sessions, expected);
  EXPECT_EQ(corpus.dropped_unknown, 2u);
  EXPECT_EQ(corpus.skipped_empty, 1u);
}

TEST(LoadSessions, EmptyFileThrows)
{
  try
  {
    sessions_from("", abc_vocab());
    FAIL();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(LoadSessions, CrLfAccepted)
{
  auto const corpus = sessions_from("a b\r\nc\r\n", abc_vocab());
  std::vector<std::vector<Index>> const expected{{0, 1}, {2}};
  EXPECT_EQ(corpus.sessions, expected);
}

TEST(LoadSessions, MissingFileIsIoError)
{
  try
  {
    load_sessions("/nonexistent/sessions.txt", abc_vocab());
    FAIL();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(BuildVocabulary, OrdersItemsByDescendingFrequency)
{
  auto const v = vocab_from("z x y\nx y x\nx y x\n", "");
  EXPECT_EQ(v.items().index_of("x"), 0u);
  EXPECT_EQ(v.items().index_of("y"), 1u);
  EXPECT_EQ(v.items().index_of("z"), 2u);
  EXPECT_EQ(v.items().frequency(0), 5u);
  EXPECT_EQ(v.items().frequency(1), 3u);
  EXPECT_EQ(v.items().frequency(2), 1u);
}

TEST(BuildVocabulary, TiesBrokenLexicographically)
{
  auto const v = vocab_from("y x\nx y\n", "");
  EXPECT_EQ(v.items().index_of("x"), 0u);
  EXPECT_EQ(v.items().index_of("y"), 1u);
}

TEST(BuildVocabulary, AttributeOnlyItemsGoLast)
{
  auto const v = vocab_from("z x y\nx y x\nx y x\n", "w\tp\t\t\t\t\t\nx\tp\t\t\t\t\t\n");
  EXPECT_EQ(v.items().index_of("w"), 3u);
  EXPECT_EQ(v.items().frequency(3), 0u);
  EXPECT_EQ(v.items().size(), 4u);
}

TEST(BuildVocabulary, AttributeValuesInFirstAppearanceOrder)
{
  auto const v = vocab_from("a b c\n", "c\tq\ts1\t\t\t\t\na\tp\ts1\t\t\t\t\nb\tq\ts2\t\t\t\t\n");
  EXPECT_EQ(v.type(1).index_of("q"), 0u);
  EXPECT_EQ(v.type(1).index_of("p"), 1u);
  EXPECT_EQ(v.type(2).index_of("s1"), 0u);
  EXPECT_EQ(v.type(2).index_of("s2"), 1u);
  EXPECT_EQ(v.type(1).frequency(0), 2u);
  EXPECT_EQ(v.type(3).size(), 0u);
}

TEST(BuildVocabulary, DuplicateItemRowThrows)
{
  try
  {
    vocab_from("a\n", "a\tp\t\t\t\t\t\na\tq\t\t\t\t\t\n");
    FAIL();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateItem);
  }
}

TEST(BuildVocabulary, WrongColumnCountThrows)
{
  try
  {
    vocab_from("a\n", "a\tp\ts\n");
    FAIL();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
  }
}

TEST(BuildVocabulary, WrongHeaderThrows)
{
  std::istringstream s("a\n");
  std::istringstream a("item\tproduct\n");
  EXPECT_THROW(build_vocabulary(s, a), Error);
}

TEST(LoadAttributes, ProductSharedByTenItems)
{
  std::string sessions, rows;
  for (int i = 0; i < 10; ++i)
  {
    sessions += "i" + std::to_string(i) + " ";
    rows += "i" + std::to_string(i) + "\tp\t\t\t\t\t\n";
  }
  auto const v     = vocab_from(sessions + "\n", rows);
  auto const attrs = attrs_from(rows, v);
  for (Index i = 0; i < 10; ++i)
  {
    EXPECT_DOUBLE_EQ(attrs.weight(i, 1), 0.1);
    EXPECT_DOUBLE_EQ(attrs.weight(i, 0), 1.0);
    EXPECT_EQ(attrs.id(i, 0), i);
    EXPECT_EQ(attrs.group_size(i, 1), 10u);
  }
}

TEST(LoadAttributes, StoreSharedByThreeItemsSumsToOne)
{
  std::string const rows = "a\t\ts\t\t\t\t\nb\t\ts\t\t\t\t\nc\t\ts\t\t\t\t\nd\t\tt\t\t\t\t\n";
  auto const        v     = vocab_from("a b c d\n", rows);
  auto const        attrs = attrs_from(rows, v);
  double            sum   = 0.0;
  for (char const *tok : {"a", "b", "c"})
  {
    double const w = attrs.weight(v.items().index_of(tok), kStoreType);
    EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
    sum += w;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(attrs.weight(v.items().index_of("d"), kStoreType), 1.0);
}

TEST(LoadAttributes, MissingFieldsExcludedFromCounts)
{
  std::string const rows = "a\tp\t\t\t\t\t\nb\t\t\t\t\t\t\nc\tp\t\t\t\t\t\n";
  auto const        v     = vocab_from("a b c\n", rows);
  auto const        attrs = attrs_from(rows, v);
  Index const       b     = v.items().index_of("b");
  EXPECT_FALSE(attrs.has(b, 1));
  EXPECT_EQ(attrs.weight(b, 1), 0.0);
  EXPECT_EQ(attrs.group_size(b, 1), 0u);
  EXPECT_DOUBLE_EQ(attrs.weight(v.items().index_of("a"), 1), 0.5);
}

TEST(LoadAttributes, ItemsWithoutRowAreAllMissing)
{
  auto const v     = vocab_from("a b\n", "a\tp\t\t\t\t\t\n");
  auto const attrs = attrs_from("a\tp\t\t\t\t\t\n", v);
  Index const b    = v.items().index_of("b");
  for (std::size_t k = 1; k < kNumIdTypes; ++k) EXPECT_FALSE(attrs.has(b, k));
  EXPECT_DOUBLE_EQ(attrs.weight(b, 0), 1.0);
}

TEST(LoadAttributes, UnknownItemThrows)
{
  auto const v = vocab_from("a\n", "a\tp\t\t\t\t\t\n");
  try
  {
    attrs_from("zz\tp\t\t\t\t\t\n", v);
    FAIL();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::UnknownToken);
  }
}

TEST(AttributeTable, OutOfRangeValueThrows)
{
  std::vector<std::int64_t> ids{0, 5};
  EXPECT_THROW(AttributeTable::from_ids(2, ids, {1, 2}), Error);
}

TEST(AttributeTable, FormatRoundTrips)
{
  std::string const rows = "a\tp\ts\tb\tc1\t\tc3\nb\tq\ts\t\tc1\tc2\t\n";
  auto const        v     = vocab_from("a b\n", rows);
  auto const        attrs = attrs_from(rows, v);
  std::istringstream again(format_attributes(attrs, v));
  EXPECT_EQ(load_attributes(again, v), attrs);
}

// Random corpora for the property checks.
class CorpusProperties : public ::testing::TestWithParam<int>
{
protected:
  void SetUp() override
  {
    Rng rng(static_cast<std::uint64_t>(GetParam()));
    std::size_t const items = 5 + uniform_below(rng, 30);
    for (std::size_t s = 0; s < 20; ++s)
    {
      std::size_t const len = 1 + uniform_below(rng, 8);
      for (std::size_t t = 0; t < len; ++t)
      {
        if (t) sessions_ += ' ';
        sessions_ += "it" + std::to_string(uniform_below(rng, items));
      }
      sessions_ += '\n';
    }
    for (std::size_t i = 0; i < items + 3; ++i)
    {
      rows_ += "it" + std::to_string(i);
      for (std::size_t k = 1; k < kNumIdTypes; ++k)
      {
        rows_ += '\t';
        if (uniform01(rng) < 0.8) rows_ += "v" + std::to_string(k) + "_" + std::to_string(uniform_below(rng, 4));
      }
      rows_ += '\n';
    }
  }

  std::string sessions_;
  std::string rows_;
};

TEST_P(CorpusProperties, TokenIndexRoundTrip)
{
  auto const v = vocab_from(sessions_, rows_);
  for (std::size_t k = 0; k < kNumIdTypes; ++k)
  {
    auto const &t = v.type(k);
    for (Index i = 0; i < t.size(); ++i) EXPECT_EQ(t.index_of(t.token(i)), i);
  }
}

TEST_P(CorpusProperties, ItemFrequencyNonIncreasing)
{
  auto const  v     = vocab_from(sessions_, rows_);
  auto const &items = v.items();
  for (Index i = 0; i + 1 < items.size(); ++i)
  {
    ASSERT_GE(items.frequency(i), items.frequency(i + 1));
    if (items.frequency(i) == items.frequency(i + 1))
    {
      EXPECT_LT(items.token(i), items.token(i + 1));
    }
  }
}

TEST_P(CorpusProperties, WeightsPartitionUnity)
{
  auto const                              v     = vocab_from(sessions_, rows_);
  auto const                              attrs = attrs_from(rows_, v);
  std::map<std::pair<std::size_t, Index>, double> sums;
  for (Index i = 0; i < attrs.num_items(); ++i)
  {
    EXPECT_EQ(attrs.weight(i, 0), 1.0);
    for (std::size_t k = 1; k < kNumIdTypes; ++k)
    {
      if (auto val = attrs.id(i, k))
      {
        EXPECT_GT(attrs.weight(i, k), 0.0);
        EXPECT_LE(attrs.weight(i, k), 1.0);
        sums[{k, *val}] += attrs.weight(i, k);
      }
    }
  }
  for (auto const &[key, sum] : sums) EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST_P(CorpusProperties, ParsingIsDeterministic)
{
  auto const v1 = vocab_from(sessions_, rows_);
  auto const v2 = vocab_from(sessions_, rows_);
  EXPECT_EQ(v1, v2);
  EXPECT_EQ(attrs_from(rows_, v1), attrs_from(rows_, v2));
  EXPECT_EQ(sessions_from(sessions_, v1).sessions, sessions_from(sessions_, v2).sessions);
}

TEST_P(CorpusProperties, SessionIndicesInRangeAndOrdered)
{
  auto const v      = vocab_from(sessions_, rows_);
  auto const corpus = sessions_from(sessions_, v);
  std::istringstream in(sessions_);
  std::string        line;
  std::size_t        s = 0;
  while (std::getline(in, line))
  {
    auto const &session = corpus.sessions.at(s++);
    std::istringstream toks(line);
    std::string        tok;
    std::size_t        t = 0;
    while (toks >> tok)
    {
      ASSERT_LT(session.at(t), v.items().size());
      EXPECT_EQ(v.items().token(session.at(t++)), tok);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, CorpusProperties, ::testing::Range(1, 11));
