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

#include <span>
#include <string>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"

namespace ids_embed {

struct Hyperparams
{
  std::size_t              window        = 4;
  std::size_t              negatives     = 2;
  std::vector<std::size_t> dims          = {100, 100, 10, 20, 10, 10, 20};
  double                   alpha         = 1.0;
  double                   beta          = 0.01;
  std::size_t              batch_size    = 128;
  std::size_t              epochs        = 5;
  double                   learning_rate = 1e-3;
  std::uint64_t            seed          = 1;
  std::size_t              threads       = 1;

  void validate(std::size_t num_types) const
  {
    auto fail = [](std::string const &what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (window < 1) fail("window must be >= 1");
    if (negatives < 1) fail("negatives must be >= 1");
    if (dims.size() != num_types)
    {
      fail("expected " + std::to_string(num_types) + " dims, got " + std::to_string(dims.size()));
    }
    for (auto d : dims)
    {
      if (d < 1) fail("all dims must be >= 1");
    }
    if (!(alpha >= 0.0)) fail("alpha must be >= 0");
    if (!(beta >= 0.0)) fail("beta must be >= 0");
    if (batch_size < 1) fail("batch size must be >= 1");
    if (!(learning_rate > 0.0)) fail("learning rate must be > 0");
    if (threads < 1) fail("threads must be >= 1");
  }
};

/// Target (E_k) and context (E'_k) tables per ID type, plus the transforms
/// M_k (m_1 x m_k) tying each attribute type back to the item space. The
/// transform slot for type 0 is an empty matrix.
struct EmbeddingSpace
{
  std::vector<Matrix> target;
  std::vector<Matrix> context;
  std::vector<Matrix> transform;

  static EmbeddingSpace zeros(std::vector<std::size_t> const &type_sizes,
                              std::vector<std::size_t> const &dims)
  {
    if (type_sizes.size() != dims.size() || dims.empty())
    {
      throw Error(ErrorCode::DimensionMismatch, "type sizes vs dims");
    }
    EmbeddingSpace s;
    for (std::size_t k = 0; k < dims.size(); ++k)
    {
      auto const rows = static_cast<Eigen::Index>(type_sizes[k]);
      auto const cols = static_cast<Eigen::Index>(dims[k]);
      s.target.push_back(Matrix::Zero(rows, cols));
      s.context.push_back(Matrix::Zero(rows, cols));
      s.transform.push_back(k == 0 ? Matrix() : Matrix::Zero(static_cast<Eigen::Index>(dims[0]), cols));
    }
    return s;
  }

  static EmbeddingSpace xavier(std::vector<std::size_t> const &type_sizes,
                               std::vector<std::size_t> const &dims, Rng &rng)
  {
    EmbeddingSpace s = zeros(type_sizes, dims);
    for (std::size_t k = 0; k < dims.size(); ++k)
    {
      xavier_uniform(s.target[k], type_sizes[k], dims[k], rng);
      xavier_uniform(s.context[k], type_sizes[k], dims[k], rng);
      if (k > 0)
      {
        xavier_uniform(s.transform[k], dims[0], dims[k], rng);
      }
    }
    return s;
  }

  std::size_t num_types() const noexcept
  {
    return target.size();
  }

  std::size_t dim(std::size_t k) const
  {
    return static_cast<std::size_t>(target.at(k).cols());
  }

  std::vector<std::size_t> dims() const
  {
    std::vector<std::size_t> out;
    for (auto const &m : target)
    {
      out.push_back(static_cast<std::size_t>(m.cols()));
    }
    return out;
  }

  std::vector<std::size_t> type_sizes() const
  {
    std::vector<std::size_t> out;
    for (auto const &m : target)
    {
      out.push_back(static_cast<std::size_t>(m.rows()));
    }
    return out;
  }

  bool all_finite() const
  {
    auto ok = [](std::vector<Matrix> const &ms) {
      for (auto const &m : ms)
      {
        if (!m.allFinite()) return false;
      }
      return true;
    };
    return ok(target) && ok(context) && ok(transform);
  }

  bool operator==(EmbeddingSpace const &other) const
  {
    auto same = [](std::vector<Matrix> const &a, std::vector<Matrix> const &b) {
      if (a.size() != b.size()) return false;
      for (std::size_t k = 0; k < a.size(); ++k)
      {
        if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols() || a[k] != b[k]) return false;
      }
      return true;
    };
    return same(target, other.target) && same(context, other.context) &&
           same(transform, other.transform);
  }
};

/// One positive (target, context) pair with its sampled negative items.
struct TrainingExample
{
  Index              target;
  Index              context;
  std::vector<Index> negatives;
};

struct ObjectiveWeights
{
  double alpha = 1.0;
  double beta  = 0.01;
};

/// Sum over ID types of (w_jk e'_jk)^T (w_ik e_ik); types missing on either
/// side contribute nothing.
inline double pair_score(EmbeddingSpace const &space, AttributeTable const &attrs, Index target,
                         Index context)
{
  double score = 0.0;
  for (std::size_t k = 0; k < space.num_types(); ++k)
  {
    auto const ti = attrs.id(target, k);
    auto const cj = attrs.id(context, k);
    if (!ti || !cj)
    {
      continue;
    }
    double const w = attrs.weight(target, k) * attrs.weight(context, k);
    score += w * space.context[k].row(*cj).dot(space.target[k].row(*ti));
  }
  return score;
}

/// log of sigma(score(i, j)) * prod_s sigma(-score(i, s)).
inline double pair_log_prob(EmbeddingSpace const &space, AttributeTable const &attrs, Index target,
                            Index context, std::span<Index const> negatives)
{
  double lp = log_sigmoid(pair_score(space, attrs, target, context));
  for (Index s : negatives)
  {
    lp += log_sigmoid(-pair_score(space, attrs, target, s));
  }
  return lp;
}

/// Sum over attribute types of w_ik e_i1^T M_k e_ik.
inline double constraint_score(EmbeddingSpace const &space, AttributeTable const &attrs, Index item)
{
  double score = 0.0;
  auto   e1    = space.target[0].row(item);
  for (std::size_t k = 1; k < space.num_types(); ++k)
  {
    auto const v = attrs.id(item, k);
    if (!v)
    {
      continue;
    }
    score += attrs.weight(item, k) *
             e1.dot(space.transform[k] * space.target[k].row(*v).transpose());
  }
  return score;
}

inline double constraint_log_prob(EmbeddingSpace const &space, AttributeTable const &attrs, Index item)
{
  return log_sigmoid(constraint_score(space, attrs, item));
}

inline double transform_penalty(EmbeddingSpace const &space)
{
  double sum = 0.0;
  for (std::size_t k = 1; k < space.transform.size(); ++k)
  {
    sum += space.transform[k].squaredNorm();
  }
  return sum;
}

/// Mean over the batch of [pair log-prob + alpha * constraint log-prob of the
/// target], minus beta * sum_k ||M_k||_F^2 applied once.
inline double batch_objective(EmbeddingSpace const &space, AttributeTable const &attrs,
                              std::span<TrainingExample const> batch, ObjectiveWeights weights)
{
  if (batch.empty())
  {
    throw Error(ErrorCode::InvalidArgument, "empty batch");
  }
  double sum = 0.0;
  for (auto const &ex : batch)
  {
    sum += pair_log_prob(space, attrs, ex.target, ex.context, ex.negatives);
    if (weights.alpha != 0.0)
    {
      sum += weights.alpha * constraint_log_prob(space, attrs, ex.target);
    }
  }
  return sum / static_cast<double>(batch.size()) - weights.beta * transform_penalty(space);
}

/// Gradient tables shaped like an EmbeddingSpace. Rows written since the last
/// clear() are tracked so that clearing and sparse updates stay proportional
/// to the batch rather than to the vocabulary.
class Gradients
{
public:
  Gradients() = default;

  explicit Gradients(EmbeddingSpace const &like)
  {
    EmbeddingSpace z = EmbeddingSpace::zeros(like.type_sizes(), like.dims());
    target           = std::move(z.target);
    context          = std::move(z.context);
    transform        = std::move(z.transform);
    target_mark_.resize(target.size());
    context_mark_.resize(context.size());
    touched_target_.resize(target.size());
    touched_context_.resize(context.size());
    for (std::size_t k = 0; k < target.size(); ++k)
    {
      target_mark_[k].assign(static_cast<std::size_t>(target[k].rows()), false);
      context_mark_[k].assign(static_cast<std::size_t>(context[k].rows()), false);
    }
  }

  std::vector<Matrix> target;
  std::vector<Matrix> context;
  std::vector<Matrix> transform;

  template <typename Row>
  void add_target(std::size_t k, Index row, double scale, Row const &value)
  {
    mark(target_mark_[k], touched_target_[k], row);
    target[k].row(row) += scale * value;
  }

  template <typename Row>
  void add_context(std::size_t k, Index row, double scale, Row const &value)
  {
    mark(context_mark_[k], touched_context_[k], row);
    context[k].row(row) += scale * value;
  }

  std::vector<Index> const &touched_target(std::size_t k) const
  {
    return touched_target_[k];
  }

  std::vector<Index> const &touched_context(std::size_t k) const
  {
    return touched_context_[k];
  }

  void clear()
  {
    for (std::size_t k = 0; k < target.size(); ++k)
    {
      for (Index r : touched_target_[k])
      {
        target[k].row(r).setZero();
        target_mark_[k][r] = false;
      }
      for (Index r : touched_context_[k])
      {
        context[k].row(r).setZero();
        context_mark_[k][r] = false;
      }
      touched_target_[k].clear();
      touched_context_[k].clear();
      transform[k].setZero();
    }
  }

private:
  static void mark(std::vector<bool> &marks, std::vector<Index> &touched, Index row)
  {
    if (!marks[row])
    {
      marks[row] = true;
      touched.push_back(row);
    }
  }

  std::vector<std::vector<bool>>  target_mark_;
  std::vector<std::vector<bool>>  context_mark_;
  std::vector<std::vector<Index>> touched_target_;
  std::vector<std::vector<Index>> touched_context_;
};

namespace detail {

/// Accumulates d(coef * score(i, j)) into grads.
inline void accumulate_pair(EmbeddingSpace const &space, AttributeTable const &attrs, Index target,
                            Index context, double coef, Gradients &grads)
{
  for (std::size_t k = 0; k < space.num_types(); ++k)
  {
    auto const ti = attrs.id(target, k);
    auto const cj = attrs.id(context, k);
    if (!ti || !cj)
    {
      continue;
    }
    double const c = coef * attrs.weight(target, k) * attrs.weight(context, k);
    if (c == 0.0)
    {
      continue;
    }
    grads.add_context(k, *cj, c, space.target[k].row(*ti));
    grads.add_target(k, *ti, c, space.context[k].row(*cj));
  }
}

}  // namespace detail

/// Objective and its exact gradient in one pass. `grads` must be shaped like
/// `space` and is accumulated into (call clear() between batches).
inline double evaluate_batch(EmbeddingSpace const &space, AttributeTable const &attrs,
                             std::span<TrainingExample const> batch, ObjectiveWeights weights,
                             Gradients &grads)
{
  if (batch.empty())
  {
    throw Error(ErrorCode::InvalidArgument, "empty batch");
  }
  double const scale = 1.0 / static_cast<double>(batch.size());
  double       sum   = 0.0;
  Vector       mapped;
  for (auto const &ex : batch)
  {
    double const pos = pair_score(space, attrs, ex.target, ex.context);
    sum += log_sigmoid(pos);
    detail::accumulate_pair(space, attrs, ex.target, ex.context, scale * sigmoid(-pos), grads);
    for (Index s : ex.negatives)
    {
      double const neg = pair_score(space, attrs, ex.target, s);
      sum += log_sigmoid(-neg);
      detail::accumulate_pair(space, attrs, ex.target, s, -scale * sigmoid(neg), grads);
    }

    if (weights.alpha == 0.0)
    {
      continue;
    }
    double const c = constraint_score(space, attrs, ex.target);
    sum += weights.alpha * log_sigmoid(c);
    double const g = weights.alpha * scale * sigmoid(-c);
    auto         e1 = space.target[0].row(ex.target);
    for (std::size_t k = 1; k < space.num_types(); ++k)
    {
      auto const v = attrs.id(ex.target, k);
      if (!v)
      {
        continue;
      }
      double const gk = g * attrs.weight(ex.target, k);
      if (gk == 0.0)
      {
        continue;
      }
      auto ek = space.target[k].row(*v);
      mapped  = space.transform[k] * ek.transpose();
      grads.add_target(0, ex.target, gk, mapped.transpose());
      grads.add_target(k, *v, gk, e1 * space.transform[k]);
      grads.transform[k].noalias() += gk * e1.transpose() * ek;
    }
  }
  for (std::size_t k = 1; k < space.num_types(); ++k)
  {
    grads.transform[k] -= 2.0 * weights.beta * space.transform[k];
  }
  return sum * scale - weights.beta * transform_penalty(space);
}

inline Gradients batch_gradients(EmbeddingSpace const &space, AttributeTable const &attrs,
                                 std::span<TrainingExample const> batch, ObjectiveWeights weights)
{
  Gradients g(space);
  evaluate_batch(space, attrs, batch, weights, g);
  return g;
}

}  // namespace ids_embed
