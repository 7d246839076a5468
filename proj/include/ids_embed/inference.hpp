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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/joint_model.hpp"
#include "ids_embed/model_io.hpp"

namespace ids_embed {

template <typename A, typename B>
double cosine_similarity(Eigen::MatrixBase<A> const &v, Eigen::MatrixBase<B> const &w)
{
  if (v.size() != w.size())
  {
    throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with sizes " + std::to_string(v.size()) +
                                                  " and " + std::to_string(w.size()));
  }
  double const nv = v.norm();
  double const nw = w.norm();
  if (nv == 0.0 || nw == 0.0)
  {
    throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  }
  double dot = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
  {
    dot += v.derived().coeff(i) * w.derived().coeff(i);
  }
  return std::clamp(dot / (nv * nw), -1.0, 1.0);
}

struct Neighbor
{
  Index  index;
  double score;
};

/// Exhaustive cosine ranking of every row of `table` against `query`,
/// descending by score with ties broken by ascending row index. Rows listed
/// in `exclude` and all-zero rows are left out.
template <typename Q>
std::vector<Neighbor> rank_by_cosine(Matrix const &table, Eigen::MatrixBase<Q> const &query,
                                     std::size_t n, std::span<Index const> exclude = {})
{
  double const qn = query.norm();
  if (qn == 0.0)
  {
    throw Error(ErrorCode::ZeroVector, "query vector is zero");
  }
  if (static_cast<Eigen::Index>(query.size()) != table.cols())
  {
    throw Error(ErrorCode::DimensionMismatch, "query dimension differs from table");
  }
  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(table.rows()));
  for (Eigen::Index r = 0; r < table.rows(); ++r)
  {
    Index const idx = static_cast<Index>(r);
    if (std::find(exclude.begin(), exclude.end(), idx) != exclude.end())
    {
      continue;
    }
    double const rn = table.row(r).norm();
    if (rn == 0.0)
    {
      continue;
    }
    double dot = 0.0;
    for (Eigen::Index c = 0; c < table.cols(); ++c)
    {
      dot += table(r, c) * query.derived().coeff(c);
    }
    all.push_back({idx, std::clamp(dot / (rn * qn), -1.0, 1.0)});
  }
  auto better = [](Neighbor const &a, Neighbor const &b) {
    return a.score > b.score || (a.score == b.score && a.index < b.index);
  };
  std::size_t const keep = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  return all;
}

/// The N items closest to `item` in the target item space.
inline std::vector<Neighbor> top_n_similar(EmbeddingSpace const &space, Index item, std::size_t n)
{
  auto const &table = space.target[kItemType];
  if (item >= table.rows())
  {
    throw Error(ErrorCode::IndexOutOfRange, "item index " + std::to_string(item));
  }
  if (n >= static_cast<std::size_t>(table.rows()))
  {
    throw Error(ErrorCode::InvalidArgument, "top-n must be smaller than the item count (" +
                                                std::to_string(table.rows()) + ")");
  }
  Index const exclude[] = {item};
  return rank_by_cosine(table, table.row(item).transpose(), n, exclude);
}

struct ScoredToken
{
  std::string token;
  double      score;
};

inline std::vector<ScoredToken> top_n_similar(Model const &model, std::string const &item, std::size_t n)
{
  Index const idx = model.vocab.items().index_of(item);
  std::vector<ScoredToken> out;
  for (auto const &nb : top_n_similar(model.space, idx, n))
  {
    out.push_back({model.vocab.items().token(nb.index), nb.score});
  }
  return out;
}

/// Union of every seed's top-N list, minus the seeds themselves.
inline std::set<std::string> candidate_set(Model const &model, std::vector<std::string> const &seeds,
                                           std::size_t n)
{
  if (seeds.empty())
  {
    throw Error(ErrorCode::InvalidArgument, "candidate set needs at least one seed");
  }
  std::set<std::string> const seed_set(seeds.begin(), seeds.end());
  std::set<std::string>       out;
  for (auto const &seed : seed_set)
  {
    for (auto const &nb : top_n_similar(model, seed, n))
    {
      if (!seed_set.count(nb.token))
      {
        out.insert(nb.token);
      }
    }
  }
  return out;
}

/// One attribute's contribution to a constructed item vector.
struct AttributeContribution
{
  std::size_t type;
  Index       value;
  double      weight;
};

/// sum_k weight_k * M_k e_k, mapped into the item space.
inline Vector construct_item_vector(EmbeddingSpace const &space,
                                    std::vector<AttributeContribution> const &parts)
{
  Vector out = Vector::Zero(static_cast<Eigen::Index>(space.dim(kItemType)));
  for (auto const &p : parts)
  {
    if (p.type == kItemType || p.type >= space.num_types())
    {
      throw Error(ErrorCode::InvalidArgument, "contribution type must be an attribute type");
    }
    out.noalias() += p.weight * (space.transform[p.type] * space.target[p.type].row(p.value).transpose());
  }
  return out;
}

/// Attribute tokens of a new item, indexed by ID type (slot 0 is unused; an
/// empty string means "not given").
using AttributeTokens = std::array<std::string, kNumIdTypes>;

/// Approximate item vector for an unseen item from its known attributes.
/// Each attribute weight is 1 / (V + 1), counting the new item as a member.
inline Vector coldstart_vector(Model const &model, AttributeTokens const &tokens)
{
  std::vector<AttributeContribution> parts;
  for (std::size_t k = 1; k < model.space.num_types(); ++k)
  {
    if (tokens[k].empty())
    {
      continue;
    }
    auto const v = model.vocab.type(k).find(tokens[k]);
    if (!v)
    {
      continue;
    }
    double const members = static_cast<double>(model.attrs.value_count(k, *v));
    parts.push_back({k, *v, 1.0 / (members + 1.0)});
  }
  if (parts.empty())
  {
    throw Error(ErrorCode::NoKnownAttributes, "none of the given attributes has historical records");
  }
  return construct_item_vector(model.space, parts);
}

struct UserVector
{
  std::string user;
  Vector      values;
};

/// Positive weight per interaction kind (click, purchase, ...).
struct InteractionWeights
{
  std::map<std::string, double> by_kind = {{"click", 1.0}, {"purchase", 4.0}};

  double weight(std::string const &kind) const
  {
    auto it = by_kind.find(kind);
    if (it == by_kind.end())
    {
      throw Error(ErrorCode::UnknownInteractionKind, "no weight configured for '" + kind + "'");
    }
    return it->second;
  }

  /// Parses "click=1,purchase=4".
  static InteractionWeights parse(std::string const &text)
  {
    InteractionWeights w;
    w.by_kind.clear();
    for (auto const &field : detail::split(text, ',', true))
    {
      auto const eq = field.find('=');
      if (eq == std::string::npos || eq == 0)
      {
        throw Error(ErrorCode::InvalidArgument, "weight spec '" + field + "' is not kind=value");
      }
      char        *end = nullptr;
      double const v   = std::strtod(field.c_str() + eq + 1, &end);
      if (end == field.c_str() + eq + 1 || *end != '\0' || !(v > 0.0) || !std::isfinite(v))
      {
        throw Error(ErrorCode::InvalidArgument, "weight for '" + field.substr(0, eq) + "' must be > 0");
      }
      w.by_kind[field.substr(0, eq)] = v;
    }
    if (w.by_kind.empty())
    {
      throw Error(ErrorCode::InvalidArgument, "empty interaction weight spec");
    }
    return w;
  }
};

struct Interaction
{
  std::string item;
  std::string kind = "click";
};

inline constexpr std::size_t kDefaultHistoryCap = 100;

namespace detail {

/// Weighted mean of item vectors over the most recent `cap` known entries.
inline Vector weighted_recent_mean(Model const &model, std::vector<std::pair<Index, double>> const &known,
                                   std::size_t cap)
{
  if (known.empty())
  {
    throw Error(ErrorCode::NoKnownItems, "history has no item known to the model");
  }
  if (cap == 0)
  {
    throw Error(ErrorCode::InvalidArgument, "history cap must be >= 1");
  }
  std::size_t const start = known.size() > cap ? known.size() - cap : 0;
  Vector      sum   = Vector::Zero(model.space.target[kItemType].cols());
  double      total = 0.0;
  for (std::size_t t = start; t < known.size(); ++t)
  {
    sum.noalias() += known[t].second * model.space.target[kItemType].row(known[t].first).transpose();
    total += known[t].second;
  }
  if (!(total > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "interaction weights sum to zero");
  }
  return sum / total;
}

}  // namespace detail

/// Mean of the target vectors of the most recent min(cap, n) known items.
/// `history` is chronological: most recent last.
inline UserVector user_vector(Model const &model, std::vector<std::string> const &history,
                              std::size_t cap = kDefaultHistoryCap, std::string user = {})
{
  std::vector<std::pair<Index, double>> known;
  for (auto const &tok : history)
  {
    if (auto idx = model.vocab.items().find(tok))
    {
      known.emplace_back(*idx, 1.0);
    }
  }
  return {std::move(user), detail::weighted_recent_mean(model, known, cap)};
}

/// Weighted mean sum w_t e_t / sum w_t with w_t looked up by interaction kind.
inline UserVector user_vector_weighted(Model const &model, std::vector<Interaction> const &history,
                                       InteractionWeights const &weights,
                                       std::size_t cap = kDefaultHistoryCap, std::string user = {})
{
  std::vector<std::pair<Index, double>> known;
  for (auto const &h : history)
  {
    if (auto idx = model.vocab.items().find(h.item))
    {
      known.emplace_back(*idx, weights.weight(h.kind));
    }
  }
  return {std::move(user), detail::weighted_recent_mean(model, known, cap)};
}

/// Per-item weights from target-domain activity: w_t is the sum, over the
/// users present in both domains, of the weight of each interaction they had
/// with item t.
inline std::map<std::string, double> transfer_item_weights(
    std::vector<std::vector<Interaction>> const &overlap_user_histories, InteractionWeights const &weights)
{
  std::map<std::string, double> out;
  for (auto const &history : overlap_user_histories)
  {
    for (auto const &h : history)
    {
      out[h.item] += weights.weight(h.kind);
    }
  }
  return out;
}

/// Weighted mean with per-item weights (see transfer_item_weights); items
/// without a weight contribute 0.
inline UserVector user_vector_item_weighted(Model const &model, std::vector<std::string> const &history,
                                            std::map<std::string, double> const &item_weights,
                                            std::size_t cap = kDefaultHistoryCap, std::string user = {})
{
  std::vector<std::pair<Index, double>> known;
  for (auto const &tok : history)
  {
    if (auto idx = model.vocab.items().find(tok))
    {
      auto it = item_weights.find(tok);
      known.emplace_back(*idx, it == item_weights.end() ? 0.0 : it->second);
    }
  }
  return {std::move(user), detail::weighted_recent_mean(model, known, cap)};
}

}  // namespace ids_embed
