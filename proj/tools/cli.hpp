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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ids_embed.hpp"

namespace ids_embed::cli {

inline constexpr int kExitOk    = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData  = 2;

namespace detail {

using ids_embed::detail::open_input;
using ids_embed::detail::split;
using ids_embed::detail::strip_cr;

inline std::vector<std::size_t> parse_size_list(std::string const &text)
{
  return ids_embed::detail::parse_sizes(text);
}

inline std::string format_vector(Vector const &v)
{
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i)
  {
    if (i) out += ' ';
    out += ids_embed::detail::format_double(v(i));
  }
  return out;
}

inline Vector parse_vector(std::vector<std::string> const &fields, std::size_t from)
{
  Vector v(static_cast<Eigen::Index>(fields.size() - from));
  for (std::size_t i = from; i < fields.size(); ++i)
  {
    v(static_cast<Eigen::Index>(i - from)) = ids_embed::detail::parse_double(fields[i]);
  }
  return v;
}

/// Lines of `user<TAB>v1 v2 ...`; a line without a tab is an anonymous vector.
inline std::vector<UserVector> read_user_vectors(std::string const &path)
{
  auto                    in = open_input(path);
  std::vector<UserVector> out;
  std::string             line;
  while (std::getline(in, line))
  {
    strip_cr(line);
    if (line.empty()) continue;
    auto const  tab  = line.find('\t');
    std::string user = tab == std::string::npos ? std::string() : line.substr(0, tab);
    auto fields      = split(tab == std::string::npos ? line : line.substr(tab + 1), ' ', true);
    if (fields.empty())
    {
      throw Error(ErrorCode::MalformedLine, "empty vector in '" + path + "'");
    }
    out.push_back({user, parse_vector(fields, 0)});
  }
  return out;
}

/// Lines of `user<TAB>item item ...`; users may repeat (one line per session).
inline std::vector<std::pair<std::string, std::vector<std::string>>> read_user_lines(std::string const &path)
{
  auto                                                          in = open_input(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string                                                   line;
  std::size_t                                                   line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto const tab = line.find('\t');
    if (tab == std::string::npos)
    {
      throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(line_no) + " lacks 'user<TAB>items'");
    }
    out.emplace_back(line.substr(0, tab), split(line.substr(tab + 1), ' ', true));
  }
  return out;
}

inline std::map<std::string, std::vector<double>> read_store_vectors(std::string const &path)
{
  std::map<std::string, std::vector<double>> out;
  for (auto const &v : read_user_vectors(path))
  {
    out[v.user] = std::vector<double>(v.values.data(), v.values.data() + v.values.size());
  }
  return out;
}

}  // namespace detail

/// Parses argv and runs one command. Results go to `out`, diagnostics to `err`.
inline int run(int argc, char const *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
{
  CLI::App app{"Joint embeddings for E-commerce IDs: train, query, transfer, forecast, evaluate.", "ids-embed"};
  app.require_subcommand(1);
  std::function<int()> action;

  // train -------------------------------------------------------------------
  auto       *train = app.add_subcommand("train", "Train a joint ID embedding model");
  Hyperparams hp;
  std::string sessions_path, attributes_path, out_dir, dims_text = "100,100,10,20,10,10,20";
  bool        lenient = false, quiet = false;
  train->add_option("--sessions", sessions_path, "Sessions file")->required();
  train->add_option("--attributes", attributes_path, "Attributes TSV")->required();
  train->add_option("--out", out_dir, "Output bundle directory")->required();
  train->add_option("--window", hp.window, "Context window C")->capture_default_str();
  train->add_option("--negatives", hp.negatives, "Negatives per positive S")->capture_default_str();
  train->add_option("--dims", dims_text, "Seven comma-separated embedding sizes")->capture_default_str();
  train->add_option("--alpha", hp.alpha, "Constraint strength")->capture_default_str();
  train->add_option("--beta", hp.beta, "L2 strength on transforms")->capture_default_str();
  train->add_option("--batch", hp.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--epochs", hp.epochs, "Epochs")->capture_default_str();
  train->add_option("--lr", hp.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--seed", hp.seed, "Random seed (u64)")->capture_default_str();
  train->add_option("--threads", hp.threads, "Worker threads; 1 is fully deterministic")->capture_default_str();
  train->add_flag("--lenient", lenient, "Drop unknown session tokens instead of failing");
  train->add_flag("--quiet", quiet, "No per-epoch progress");
  train->callback([&] {
    action = [&] {
      hp.dims    = detail::parse_size_list(dims_text);
      auto vocab = build_vocabulary(sessions_path, attributes_path);
      auto corpus =
          load_sessions(sessions_path, vocab, lenient ? UnknownTokenPolicy::Lenient : UnknownTokenPolicy::Strict);
      auto attrs  = load_attributes(attributes_path, vocab);
      auto result = ids_embed::train(corpus, attrs, vocab, hp, quiet ? EpochCallback{} : EpochCallback{[&](std::size_t e, double obj, double sec) {
                                  err << "epoch " << e << "  objective " << obj << "  (" << sec << " s)\n";
                                }});
      save_model(Model{std::move(result.space), std::move(vocab), std::move(attrs), hp}, out_dir);
      out << "pairs\t" << result.report.total_pairs << "\n";
      for (std::size_t e = 0; e < result.report.epoch_objective.size(); ++e)
      {
        out << "epoch\t" << e + 1 << "\t" << ids_embed::detail::format_double(result.report.epoch_objective[e]) << "\n";
      }
      return kExitOk;
    };
  });

  // similar -----------------------------------------------------------------
  auto       *similar = app.add_subcommand("similar", "Top-N most similar items");
  std::string model_dir, item;
  std::size_t top_n = 10;
  similar->add_option("--model", model_dir, "Model bundle directory")->required();
  similar->add_option("--item", item, "Query item token")->required();
  similar->add_option("--top-n", top_n, "Number of neighbours")->capture_default_str();
  similar->callback([&] {
    action = [&] {
      auto model = load_model(model_dir);
      for (auto const &nb : top_n_similar(model, item, top_n))
      {
        out << nb.token << "\t" << ids_embed::detail::format_double(nb.score) << "\n";
      }
      return kExitOk;
    };
  });

  // coldstart ---------------------------------------------------------------
  auto           *coldstart = app.add_subcommand("coldstart", "Vector for an unseen item from its attribute IDs");
  AttributeTokens attr_tokens;
  std::size_t     cold_top_n = 0;
  coldstart->add_option("--model", model_dir, "Model bundle directory")->required();
  for (std::size_t k = 1; k < kNumIdTypes; ++k)
  {
    coldstart->add_option("--" + std::string(kIdTypeNames[k]), attr_tokens[k], std::string(kIdTypeNames[k]) + " token");
  }
  coldstart->add_option("--top-n", cold_top_n, "Also list the N nearest known items");
  coldstart->callback([&] {
    action = [&] {
      auto   model = load_model(model_dir);
      Vector v     = coldstart_vector(model, attr_tokens);
      out << detail::format_vector(v) << "\n";
      if (cold_top_n > 0)
      {
        for (auto const &nb : rank_by_cosine(model.space.target[kItemType], v, cold_top_n))
        {
          out << model.vocab.items().token(nb.index) << "\t" << ids_embed::detail::format_double(nb.score) << "\n";
        }
      }
      return kExitOk;
    };
  });

  // user-embed --------------------------------------------------------------
  auto       *user_embed = app.add_subcommand("user-embed", "Aggregate a user's recent items into a vector");
  std::string history_path, weights_text = "click=1,purchase=4", user_id;
  bool        weighted = false;
  std::size_t cap      = kDefaultHistoryCap;
  user_embed->add_option("--model", model_dir, "Model bundle directory")->required();
  user_embed->add_option("--history", history_path, "One 'token[<TAB>kind]' per line, most recent last")->required();
  user_embed->add_flag("--weighted", weighted, "Weight items by interaction kind");
  user_embed->add_option("--weights", weights_text, "kind=weight list")->capture_default_str();
  user_embed->add_option("--t", cap, "Number of recent items to use")->capture_default_str();
  user_embed->add_option("--user-id", user_id, "Prefix the output with '<id><TAB>'");
  user_embed->callback([&] {
    action = [&] {
      auto                     model = load_model(model_dir);
      auto                     in    = detail::open_input(history_path);
      std::vector<Interaction> history;
      std::string              line;
      while (std::getline(in, line))
      {
        detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split(line, '\t', false);
        history.push_back({fields[0], fields.size() > 1 && !fields[1].empty() ? fields[1] : "click"});
      }
      UserVector v;
      if (weighted)
      {
        v = user_vector_weighted(model, history, InteractionWeights::parse(weights_text), cap, user_id);
      }
      else
      {
        std::vector<std::string> tokens;
        for (auto const &h : history) tokens.push_back(h.item);
        v = user_vector(model, tokens, cap, user_id);
      }
      if (!user_id.empty()) out << user_id << "\t";
      out << detail::format_vector(v.values) << "\n";
      return kExitOk;
    };
  });

  // cluster-users -----------------------------------------------------------
  auto         *cluster = app.add_subcommand("cluster-users", "k-means over overlap users plus per-group candidates");
  std::string   vectors_path, interactions_path;
  std::size_t   k = 10, max_iters = 100, group_top_n = 100;
  std::uint64_t seed = 1;
  cluster->add_option("--vectors", vectors_path, "Lines of 'user<TAB>v1 v2 ...'")->required();
  cluster->add_option("--k", k, "Number of groups")->capture_default_str();
  cluster->add_option("--interactions", interactions_path, "Lines of 'user<TAB>item item ...'")->required();
  cluster->add_option("--top-n", group_top_n, "Candidates kept per group")->capture_default_str();
  cluster->add_option("--out", out_dir, "Output directory")->required();
  cluster->add_option("--max-iters", max_iters, "Lloyd iteration cap")->capture_default_str();
  cluster->add_option("--seed", seed, "Random seed (u64)")->capture_default_str();
  cluster->callback([&] {
    action = [&] {
      auto vectors = detail::read_user_vectors(vectors_path);
      auto groups  = cluster_users(vectors, k, max_iters, seed);
      std::map<std::string, std::vector<std::string>> interactions;
      for (auto &[user, items] : detail::read_user_lines(interactions_path))
      {
        auto &dst = interactions[user];
        dst.insert(dst.end(), items.begin(), items.end());
      }
      groups.candidates = group_candidates(groups, interactions, group_top_n);
      save_groups(groups, out_dir);
      std::vector<std::size_t> sizes(groups.size(), 0);
      for (auto g : groups.assignment) ++sizes[g];
      for (std::size_t g = 0; g < groups.size(); ++g)
      {
        out << "group\t" << g << "\t" << sizes[g] << "\n";
      }
      return kExitOk;
    };
  });

  // assign-user -------------------------------------------------------------
  auto       *assign = app.add_subcommand("assign-user", "Route new users to their most similar group");
  std::string groups_dir, vector_path;
  assign->add_option("--groups", groups_dir, "Directory written by cluster-users")->required();
  assign->add_option("--vector", vector_path, "Lines of '[user<TAB>]v1 v2 ...'")->required();
  assign->callback([&] {
    action = [&] {
      auto groups = load_groups(groups_dir);
      for (auto const &v : detail::read_user_vectors(vector_path))
      {
        auto const g = assign_user(v.values, groups);
        out << v.user << "\t" << g << "\t";
        auto const &c = groups.candidates[g];
        for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << c[i];
        out << "\n";
      }
      return kExitOk;
    };
  });

  // forecast ----------------------------------------------------------------
  auto *forecast = app.add_subcommand("forecast", "Store-level delivery demand forecasting");
  forecast->require_subcommand(1);
  auto               *ftrain = forecast->add_subcommand("train", "Train a forecast network");
  auto               *fpred  = forecast->add_subcommand("predict", "Predict with a trained network");
  std::string         data_path, variant_text = "history", store_vectors_path, net_dir;
  ForecastHyperparams fhp;
  ftrain->add_option("--data", data_path, "CSV store_id,date,slot,demand")->required();
  ftrain->add_option("--variant", variant_text, "history | onehot | vec")->capture_default_str();
  ftrain->add_option("--model", model_dir, "Embedding bundle (vec variant)");
  ftrain->add_option("--store-vectors", store_vectors_path, "Explicit 'store<TAB>v1 v2 ...' (vec variant)");
  ftrain->add_option("--out", out_dir, "Output directory")->required();
  ftrain->add_option("--epochs", fhp.epochs, "Epochs")->capture_default_str();
  ftrain->add_option("--batch", fhp.batch_size, "Mini-batch size")->capture_default_str();
  ftrain->add_option("--lr", fhp.learning_rate, "Adam learning rate")->capture_default_str();
  ftrain->add_option("--seed", fhp.seed, "Random seed (u64)")->capture_default_str();
  ftrain->callback([&] {
    action = [&] {
      auto const variant = parse_variant(variant_text);
      auto const rows    = build_forecast_rows(load_demand_csv(data_path));
      std::map<std::string, std::vector<double>> stores;
      if (variant == ForecastVariant::Vec)
      {
        if (!store_vectors_path.empty())
        {
          stores = detail::read_store_vectors(store_vectors_path);
        }
        else if (!model_dir.empty())
        {
          stores = store_vectors_from_model(load_model(model_dir));
        }
        else
        {
          throw Error(ErrorCode::InvalidArgument, "vec variant needs --model or --store-vectors");
        }
      }
      auto model = forecast_train(rows, variant, &stores, fhp);
      save_forecast_model(model, out_dir);
      std::vector<double> truth;
      for (auto const &r : rows) truth.push_back(r.demand);
      out << "rows\t" << rows.size() << "\n";
      out << "train_rmae\t" << ids_embed::detail::format_double(rmae(truth, model.predict(rows))) << "\n";
      return kExitOk;
    };
  });
  fpred->add_option("--net", net_dir, "Directory written by forecast train")->required();
  fpred->add_option("--data", data_path, "CSV store_id,date,slot,demand")->required();
  fpred->callback([&] {
    action = [&] {
      auto const model = load_forecast_model(net_dir);
      auto const rows  = build_forecast_rows(load_demand_csv(data_path));
      auto const pred  = model.predict(rows);
      std::vector<double> truth;
      out << "store_id,date,slot,demand,prediction\n";
      for (std::size_t i = 0; i < rows.size(); ++i)
      {
        out << rows[i].store << "," << rows[i].date << "," << rows[i].slot << ","
            << ids_embed::detail::format_short(rows[i].demand) << "," << ids_embed::detail::format_double(pred[i]) << "\n";
        truth.push_back(rows[i].demand);
      }
      if (!rows.empty())
      {
        double total = 0.0;
        for (double t : truth) total += t;
        if (total > 0.0) err << "rmae " << rmae(truth, pred) << "\n";
      }
      return kExitOk;
    };
  });

  // eval-recall -------------------------------------------------------------
  auto       *eval = app.add_subcommand("eval-recall", "Click recall@top-N of similarity-based candidate sets");
  std::string train_sessions_path, test_clicks_path, top_n_text = "10,20,30,40,50,60,70,80,90,100,1000", baseline;
  bool        by_popularity = false;
  std::size_t levels        = 10;
  eval->add_option("--model", model_dir, "Model bundle directory")->required();
  eval->add_option("--train-sessions", train_sessions_path, "Lines of 'user<TAB>items' (one session each)")->required();
  eval->add_option("--test-clicks", test_clicks_path, "Lines of 'user<TAB>items'")->required();
  eval->add_option("--top-n", top_n_text, "Comma-separated N values")->capture_default_str();
  eval->add_option("--baseline", baseline, "Also evaluate a baseline (cf)")->check(CLI::IsMember({"cf"}));
  eval->add_flag("--by-popularity", by_popularity, "Add per-popularity-level recall at the largest N");
  eval->add_option("--levels", levels, "Popularity levels")->capture_default_str();
  eval->callback([&] {
    action = [&] {
      auto const model = load_model(model_dir);
      auto const ns    = detail::parse_size_list(top_n_text);
      if (ns.empty()) throw Error(ErrorCode::InvalidArgument, "--top-n needs at least one value");
      std::size_t const max_n = model.vocab.items().size() - 1;

      SessionCorpus                                 cf_corpus;
      std::map<std::string, std::vector<Index>>     seeds;
      for (auto const &[user, items] : detail::read_user_lines(train_sessions_path))
      {
        std::vector<Index> session;
        for (auto const &tok : items)
        {
          if (auto idx = model.vocab.items().find(tok)) session.push_back(*idx);
        }
        auto &s = seeds[user];
        s.insert(s.end(), session.begin(), session.end());
        if (!session.empty()) cf_corpus.sessions.push_back(std::move(session));
      }
      UserItemSets clicks;
      for (auto const &[user, items] : detail::read_user_lines(test_clicks_path))
      {
        clicks[user].insert(items.begin(), items.end());
      }

      auto build = [&](std::size_t n, auto &&neighbors) {
        UserItemSets cand;
        for (auto const &[user, list] : seeds)
        {
          std::set<Index> const seed_set(list.begin(), list.end());
          auto                 &dst = cand[user];
          for (Index s : seed_set)
          {
            for (Index j : neighbors(s, n))
            {
              if (!seed_set.count(j)) dst.insert(model.vocab.items().token(j));
            }
          }
        }
        return cand;
      };
      auto embed_neighbors = [&](Index s, std::size_t n) {
        std::vector<Index> out_idx;
        for (auto const &nb : top_n_similar(model.space, s, std::min(n, max_n))) out_idx.push_back(nb.index);
        return out_idx;
      };
      std::optional<CfSimilarity> cf;
      if (baseline == "cf") cf.emplace(cf_similarity(cf_corpus, model.vocab.items().size()));
      auto cf_neighbors = [&](Index s, std::size_t n) {
        std::vector<Index> out_idx;
        for (auto const &[j, score] : cf->top_n(s, n)) out_idx.push_back(j);
        return out_idx;
      };

      out << "method";
      for (auto n : ns) out << "\t" << n;
      out << "\n";
      UserItemSets embed_last, cf_last;
      out << "embedding";
      for (auto n : ns)
      {
        embed_last = build(n, embed_neighbors);
        out << "\t" << ids_embed::detail::format_short(recall_at_n(embed_last, clicks));
      }
      out << "\n";
      if (cf)
      {
        out << "cf";
        for (auto n : ns)
        {
          cf_last = build(n, cf_neighbors);
          out << "\t" << ids_embed::detail::format_short(recall_at_n(cf_last, clicks));
        }
        out << "\n";
      }
      if (by_popularity)
      {
        auto const level_of = popularity_levels(model.vocab.items(), levels);
        auto const emb      = recall_by_level(embed_last, clicks, model.vocab.items(), level_of, levels);
        std::vector<RecallCount> cfl;
        if (cf) cfl = recall_by_level(cf_last, clicks, model.vocab.items(), level_of, levels);
        out << "\nlevel\tclicks\tembedding" << (cf ? "\tcf" : "") << "\n";
        for (std::size_t l = 0; l < levels; ++l)
        {
          out << l + 1 << "\t" << emb[l].clicks << "\t" << ids_embed::detail::format_short(emb[l].recall());
          if (cf) out << "\t" << ids_embed::detail::format_short(cfl[l].recall());
          out << "\n";
        }
      }
      return kExitOk;
    };
  });

  // sample-zipf -------------------------------------------------------------
  auto         *zipf = app.add_subcommand("sample-zipf", "Draw from the log-uniform sampler");
  std::uint64_t dict_size = 1000, count = 10;
  zipf->add_option("--d", dict_size, "Dictionary size D")->required();
  zipf->add_option("--n", count, "Number of draws")->required();
  zipf->add_option("--seed", seed, "Random seed (u64)")->capture_default_str();
  zipf->callback([&] {
    action = [&] {
      ZipfSampler                          sampler(dict_size, seed);
      std::map<std::uint64_t, std::size_t> hist;
      for (std::uint64_t i = 0; i < count; ++i)
      {
        auto const v = sampler.draw();
        ++hist[v];
        out << v << "\n";
      }
      out << "# index\tcount\tfraction\texpected\n";
      std::size_t shown = 0;
      for (auto const &[idx, c] : hist)
      {
        if (shown++ == 10) break;
        out << "# " << idx << "\t" << c << "\t" << ids_embed::detail::format_short(static_cast<double>(c) / static_cast<double>(count))
            << "\t" << ids_embed::detail::format_short(zipf_probability(idx, dict_size)) << "\n";
      }
      return kExitOk;
    };
  });

  // gen-synthetic -----------------------------------------------------------
  auto         *gen = app.add_subcommand("gen-synthetic", "Write a planted-structure synthetic dataset");
  SyntheticSpec spec;
  std::string   scales_text;
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--categories", spec.categories, "Number of categories")->capture_default_str();
  gen->add_option("--items-per-category", spec.items_per_category, "Items per category")->capture_default_str();
  gen->add_option("--sessions", spec.sessions, "Number of sessions")->capture_default_str();
  gen->add_option("--session-length", spec.session_length, "Items per session")->capture_default_str();
  gen->add_option("--p", spec.intra_probability, "Within-category draw probability")->capture_default_str();
  gen->add_option("--popularity-exponent", spec.popularity_exponent, "Zipf exponent of item popularity")->capture_default_str();
  gen->add_option("--subgroups", spec.subgroups, "Subgroups (cate2 values) per category")->capture_default_str();
  gen->add_option("--stickiness", spec.stickiness, "Probability a session stays in its current subgroup")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Random seed (u64)")->capture_default_str();
  gen->add_option("--users", spec.users, "Number of users")->capture_default_str();
  gen->add_option("--clicks-per-user", spec.clicks_per_user, "Next-day click draws per user")->capture_default_str();
  gen->add_option("--holdout-per-category", spec.holdout_per_category, "Items kept out of training per category")->capture_default_str();
  gen->add_option("--stores", spec.stores, "Stores")->capture_default_str();
  gen->add_option("--days", spec.days, "Days of demand history")->capture_default_str();
  gen->add_option("--scales", scales_text, "Comma-separated per-store demand scales");
  gen->callback([&] {
    action = [&] {
      if (!scales_text.empty())
      {
        spec.store_scales.clear();
        for (auto const &f : detail::split(scales_text, ',', true))
        {
          spec.store_scales.push_back(ids_embed::detail::parse_double(f));
        }
      }
      write_synthetic(generate_synthetic(spec), out_dir);
      out << "wrote\t" << out_dir << "\n";
      return kExitOk;
    };
  });

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::ParseError const &e)
  {
    int const code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try
  {
    return action ? action() : kExitUsage;
  }
  catch (Error const &e)
  {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitData;
  }
  catch (std::exception const &e)
  {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace ids_embed::cli
