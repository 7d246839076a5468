#pragma once
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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"

namespace ids_embed {

using UserItemSets = std::map<std::string, std::set<std::string>>;

/// Training interactions and next-day clicks. Each user's sessions are kept
/// in file order; `test_clicks` holds the items each user clicked afterwards.
struct EvalSplit
{
  std::map<std::string, std::vector<std::vector<std::string>>> train_sessions;
  UserItemSets                                                 test_clicks;
};

struct RecallCount
{
  std::size_t hits   = 0;
  std::size_t clicks = 0;

  double recall() const
  {
    return clicks == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(clicks);
  }
};

inline RecallCount recall_counts(UserItemSets const &candidates, UserItemSets const &clicks)
{
  RecallCount c;
  for (auto const &[user, clicked] : clicks)
  {
    c.clicks += clicked.size();
    auto it = candidates.find(user);
    if (it == candidates.end()) continue;
    for (auto const &item : clicked)
    {
      c.hits += it->second.count(item);
    }
  }
  return c;
}

/// sum_u |clicked(u) & candidates(u)| / sum_u |clicked(u)|.
inline double recall_at_n(UserItemSets const &candidates, UserItemSets const &clicks)
{
  auto const c = recall_counts(candidates, clicks);
  if (c.clicks == 0)
  {
    throw Error(ErrorCode::InvalidArgument, "recall needs at least one test click");
  }
  return c.recall();
}

/// sum |y - y_hat| / sum y.
inline double rmae(std::span<double const> truth, std::span<double const> pred)
{
  if (truth.size() != pred.size())
  {
    throw Error(ErrorCode::DimensionMismatch, "rmae of " + std::to_string(truth.size()) + " truths and " +
                                                  std::to_string(pred.size()) + " predictions");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
  {
    num += std::abs(truth[i] - pred[i]);
    den += truth[i];
  }
  if (!(den > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "rmae needs a positive total demand");
  }
  return num / den;
}

/// Item-based CF with sessions standing in for users: each item is a vector
/// of per-session occurrence counts and similarity is the cosine of two such
/// vectors. Items never sharing a session score 0.
class CfSimilarity
{
public:
  CfSimilarity(SessionCorpus const &corpus, std::size_t num_items)
    : norms_(num_items, 0.0)
    , dots_(num_items)
  {
    std::unordered_map<Index, double> counts;
    for (auto const &session : corpus.sessions)
    {
      counts.clear();
      for (Index i : session)
      {
        if (i >= num_items)
        {
          throw Error(ErrorCode::IndexOutOfRange, "session item " + std::to_string(i));
        }
        counts[i] += 1.0;
      }
      std::vector<std::pair<Index, double>> entries(counts.begin(), counts.end());
      std::sort(entries.begin(), entries.end());
      for (std::size_t a = 0; a < entries.size(); ++a)
      {
        norms_[entries[a].first] += entries[a].second * entries[a].second;
        for (std::size_t b = a + 1; b < entries.size(); ++b)
        {
          double const prod = entries[a].second * entries[b].second;
          dots_[entries[a].first][entries[b].first] += prod;
          dots_[entries[b].first][entries[a].first] += prod;
        }
      }
    }
    for (auto &n : norms_)
    {
      n = std::sqrt(n);
    }
  }

  std::size_t num_items() const noexcept
  {
    return norms_.size();
  }

  double score(Index i, Index j) const
  {
    if (i >= norms_.size() || j >= norms_.size())
    {
      throw Error(ErrorCode::IndexOutOfRange, "cf item index");
    }
    if (norms_[i] == 0.0 || norms_[j] == 0.0)
    {
      return 0.0;
    }
    if (i == j)
    {
      return 1.0;
    }
    auto it = dots_[i].find(j);
    return it == dots_[i].end() ? 0.0 : it->second / (norms_[i] * norms_[j]);
  }

  /// Up to n items with positive similarity to i, descending score, ties by
  /// ascending index.
  std::vector<std::pair<Index, double>> top_n(Index i, std::size_t n) const
  {
    std::vector<std::pair<Index, double>> out;
    for (auto const &[j, dot] : dots_.at(i))
    {
      (void)dot;
      double const s = score(i, j);
      if (s > 0.0) out.emplace_back(j, s);
    }
    std::sort(out.begin(), out.end(), [](auto const &a, auto const &b) {
      return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    if (out.size() > n) out.resize(n);
    return out;
  }

private:
  std::vector<double>                            norms_;
  std::vector<std::map<Index, double>>           dots_;
};

inline CfSimilarity cf_similarity(SessionCorpus const &corpus, std::size_t num_items)
{
  if (corpus.sessions.empty())
  {
    throw Error(ErrorCode::EmptyInput, "cf needs at least one session");
  }
  return CfSimilarity(corpus, num_items);
}

/// Level (1 = least popular) per item index. Items are ordered by ascending
/// frequency (ties: the later vocabulary index is less popular) and cut into
/// `levels` equal-count bins; the first `D mod levels` bins get one extra.
inline std::vector<std::size_t> popularity_levels(TypeVocab const &items, std::size_t levels = 10)
{
  std::size_t const n = items.size();
  if (levels == 0 || n < levels)
  {
    throw Error(ErrorCode::InvalidArgument, "need at least as many items as popularity levels");
  }
  std::vector<Index> order(n);
  for (Index i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    auto const fa = items.frequency(a);
    auto const fb = items.frequency(b);
    return fa < fb || (fa == fb && a > b);
  });
  std::size_t const base = n / levels;
  std::size_t const rem  = n % levels;
  std::vector<std::size_t> level(n, 0);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < levels; ++l)
  {
    std::size_t const size = base + (l < rem ? 1 : 0);
    for (std::size_t c = 0; c < size; ++c)
    {
      level[order[pos++]] = l + 1;
    }
  }
  return level;
}

/// Recall restricted to clicks on items of each level; index 0 is level 1.
/// Clicks on items outside the vocabulary belong to no level.
inline std::vector<RecallCount> recall_by_level(UserItemSets const &candidates, UserItemSets const &clicks,
                                                TypeVocab const &items, std::vector<std::size_t> const &levels,
                                                std::size_t num_levels)
{
  std::vector<RecallCount> out(num_levels);
  for (auto const &[user, clicked] : clicks)
  {
    auto it = candidates.find(user);
    for (auto const &item : clicked)
    {
      auto idx = items.find(item);
      if (!idx) continue;
      auto &c = out.at(levels.at(*idx) - 1);
      ++c.clicks;
      if (it != candidates.end() && it->second.count(item)) ++c.hits;
    }
  }
  return out;
}

}  // namespace ids_embed
