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

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>
#include <utility>
#include <vector>

#include "ids_embed/adam.hpp"
#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/joint_model.hpp"
#include "ids_embed/zipf_sampler.hpp"

namespace ids_embed {

using ItemPair = std::pair<Index, Index>;

/// Every (item_n, item_{n+j}) with 0 < |j| <= window inside one session.
inline std::vector<ItemPair> generate_pairs(SessionCorpus const &corpus, std::size_t window)
{
  if (window < 1)
  {
    throw Error(ErrorCode::InvalidArgument, "window must be >= 1");
  }
  std::vector<ItemPair> pairs;
  for (auto const &session : corpus.sessions)
  {
    std::size_t const len = session.size();
    for (std::size_t n = 0; n < len; ++n)
    {
      std::size_t const lo = n >= window ? n - window : 0;
      std::size_t const hi = std::min(len - 1, n + window);
      for (std::size_t m = lo; m <= hi; ++m)
      {
        if (m != n)
        {
          pairs.emplace_back(session[n], session[m]);
        }
      }
    }
  }
  return pairs;
}

struct TrainReport
{
  std::vector<double> epoch_objective;
  std::vector<double> epoch_seconds;
  std::size_t         total_pairs = 0;
};

struct TrainResult
{
  EmbeddingSpace space;
  TrainReport    report;
};

using EpochCallback = std::function<void(std::size_t epoch, double objective, double seconds)>;

/// Adam ascent on the joint objective over shuffled mini-batches of
/// (target, context) pairs. With hp.threads == 1 the result depends only on
/// the inputs and hp.seed. With more threads, each round evaluates
/// hp.threads consecutive batches against the same parameter snapshot and
/// then applies their updates in order.
inline TrainResult train(SessionCorpus const &corpus, AttributeTable const &attrs,
                         Vocabulary const &vocab, Hyperparams const &hp,
                         EpochCallback on_epoch = {})
{
  hp.validate(attrs.num_types());
  if (vocab.items().size() != attrs.num_items())
  {
    throw Error(ErrorCode::DimensionMismatch, "vocabulary and attribute table disagree on item count");
  }
  if (vocab.num_types() != attrs.num_types())
  {
    throw Error(ErrorCode::DimensionMismatch, "vocabulary and attribute table disagree on type count");
  }
  auto pairs = generate_pairs(corpus, hp.window);
  if (pairs.empty())
  {
    throw Error(ErrorCode::EmptyInput, "corpus produced no training pairs");
  }

  Rng            init_rng(derive_seed(hp.seed, 0));
  Rng            shuffle_rng(derive_seed(hp.seed, 2));
  ZipfSampler    sampler(attrs.num_items(), derive_seed(hp.seed, 1));
  TrainResult    result{EmbeddingSpace::xavier(vocab.sizes(), hp.dims, init_rng), {}};
  EmbeddingSpace &space = result.space;
  std::size_t const K   = space.num_types();

  // Parameter slots: [target_0..K-1, context_0..K-1, transform_1..K-1].
  Adam                  adam(AdamConfig{hp.learning_rate});
  std::vector<Matrix *> params;
  for (auto &m : space.target) params.push_back(&m);
  for (auto &m : space.context) params.push_back(&m);
  for (std::size_t k = 1; k < K; ++k) params.push_back(&space.transform[k]);
  adam.attach(params);

  std::vector<std::vector<bool>>  active_mark(2 * K);
  std::vector<std::vector<Index>> active_rows(2 * K);
  for (std::size_t k = 0; k < K; ++k)
  {
    active_mark[k].assign(static_cast<std::size_t>(space.target[k].rows()), false);
    active_mark[K + k].assign(static_cast<std::size_t>(space.context[k].rows()), false);
  }
  auto activate = [&](std::size_t slot, std::vector<Index> const &rows) {
    for (Index r : rows)
    {
      if (!active_mark[slot][r])
      {
        active_mark[slot][r] = true;
        active_rows[slot].push_back(r);
      }
    }
  };
  auto apply = [&](Gradients const &g) {
    adam.begin_step();
    for (std::size_t k = 0; k < K; ++k)
    {
      activate(k, g.touched_target(k));
      activate(K + k, g.touched_context(k));
      adam.update_rows(k, g.target[k], active_rows[k], +1.0);
      adam.update_rows(K + k, g.context[k], active_rows[K + k], +1.0);
    }
    for (std::size_t k = 1; k < K; ++k)
    {
      adam.update_all(2 * K + k - 1, g.transform[k], +1.0);
    }
  };

  ObjectiveWeights const weights{hp.alpha, hp.beta};
  std::size_t const      workers = hp.threads;
  std::vector<Gradients> grads;
  for (std::size_t w = 0; w < workers; ++w)
  {
    grads.emplace_back(space);
  }
  std::vector<std::vector<TrainingExample>> batches(workers);
  std::vector<double>                       objectives(workers, 0.0);

  result.report.total_pairs = pairs.size();
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch)
  {
    auto const start = std::chrono::steady_clock::now();
    shuffle(pairs, shuffle_rng);
    double      objective_sum = 0.0;
    std::size_t num_batches   = 0;

    for (std::size_t pos = 0; pos < pairs.size();)
    {
      std::size_t used = 0;
      for (; used < workers && pos < pairs.size(); ++used)
      {
        auto &batch = batches[used];
        batch.clear();
        std::size_t const end = std::min(pairs.size(), pos + hp.batch_size);
        for (; pos < end; ++pos)
        {
          auto const [target, context] = pairs[pos];
          TrainingExample ex{target, context, {}};
          std::array<Index, 2> const exclude{target, context};
          sampler.draw_negatives_into(hp.negatives, exclude, ex.negatives);
          batch.push_back(std::move(ex));
        }
      }

      auto run = [&](std::size_t w) {
        grads[w].clear();
        objectives[w] = evaluate_batch(space, attrs, batches[w], weights, grads[w]);
      };
      if (used == 1)
      {
        run(0);
      }
      else
      {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < used; ++w)
        {
          pool.emplace_back(run, w);
        }
        for (auto &t : pool)
        {
          t.join();
        }
      }

      for (std::size_t w = 0; w < used; ++w)
      {
        if (!std::isfinite(objectives[w]))
        {
          throw Error(ErrorCode::NonFiniteObjective,
                      "objective became non-finite in epoch " + std::to_string(epoch + 1) +
                          " after " + std::to_string(adam.steps()) + " updates");
        }
        objective_sum += objectives[w];
        ++num_batches;
        apply(grads[w]);
      }
    }

    double const mean    = objective_sum / static_cast<double>(num_batches);
    double const seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report.epoch_objective.push_back(mean);
    result.report.epoch_seconds.push_back(seconds);
    if (on_epoch)
    {
      on_epoch(epoch + 1, mean, seconds);
    }
  }
  if (!space.all_finite())
  {
    throw Error(ErrorCode::NonFiniteObjective, "trained parameters contain non-finite values");
  }
  return result;
}

}  // namespace ids_embed
