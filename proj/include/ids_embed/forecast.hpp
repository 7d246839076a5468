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
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "ids_embed/adam.hpp"
#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/model_io.hpp"

namespace ids_embed {

inline constexpr std::size_t kHistoryDays = 7;
inline constexpr int         kSlotsPerDay = 48;

struct DemandRecord
{
  std::string store;
  std::string date;
  int         slot;
  double      demand;
};

/// Reads `store_id,date,slot,demand` CSV (header required).
inline std::vector<DemandRecord> parse_demand_csv(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line))
  {
    throw Error(ErrorCode::EmptyInput, "demand file is empty");
  }
  detail::strip_cr(line);
  if (line != "store_id,date,slot,demand")
  {
    throw Error(ErrorCode::MalformedLine, "demand header must be 'store_id,date,slot,demand'");
  }
  std::vector<DemandRecord> out;
  std::size_t               line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto f = detail::split(line, ',', false);
    if (f.size() != 4 || f[0].empty() || f[1].empty())
    {
      throw Error(ErrorCode::MalformedLine, "demand line " + std::to_string(line_no));
    }
    auto const slot = detail::parse_sizes(f[2]).at(0);
    if (slot >= static_cast<std::size_t>(kSlotsPerDay))
    {
      throw Error(ErrorCode::MalformedLine, "slot out of [0, 48) on line " + std::to_string(line_no));
    }
    out.push_back({f[0], f[1], static_cast<int>(slot), detail::parse_double(f[3])});
  }
  return out;
}

inline std::vector<DemandRecord> load_demand_csv(std::string const &path)
{
  auto in = detail::open_input(path);
  return parse_demand_csv(in);
}

/// One supervised example: the same slot's demand on the seven previous days
/// (oldest first) and the demand to predict.
struct ForecastRow
{
  std::string                        store;
  std::string                        date;
  int                                slot = 0;
  std::array<double, kHistoryDays>   history{};
  double                             demand = 0.0;
};

/// Builds every row whose full 7-day history exists. Dates are ordered
/// lexicographically (use ISO dates), and "previous day" means the previous
/// distinct date present in the file.
inline std::vector<ForecastRow> build_forecast_rows(std::vector<DemandRecord> const &records)
{
  std::set<std::string> date_set;
  for (auto const &r : records) date_set.insert(r.date);
  std::vector<std::string> const dates(date_set.begin(), date_set.end());
  std::map<std::string, std::size_t> date_index;
  for (std::size_t i = 0; i < dates.size(); ++i) date_index[dates[i]] = i;

  std::map<std::tuple<std::string, std::size_t, int>, double> cell;
  std::set<std::string>                                       stores;
  for (auto const &r : records)
  {
    cell[{r.store, date_index[r.date], r.slot}] = r.demand;
    stores.insert(r.store);
  }
  std::vector<ForecastRow> rows;
  for (auto const &store : stores)
  {
    for (std::size_t d = kHistoryDays; d < dates.size(); ++d)
    {
      for (int slot = 0; slot < kSlotsPerDay; ++slot)
      {
        auto target = cell.find({store, d, slot});
        if (target == cell.end()) continue;
        ForecastRow row{store, dates[d], slot, {}, target->second};
        bool        complete = true;
        for (std::size_t h = 0; h < kHistoryDays && complete; ++h)
        {
          auto it = cell.find({store, d - kHistoryDays + h, slot});
          if (it == cell.end())
          {
            complete = false;
          }
          else
          {
            row.history[h] = it->second;
          }
        }
        if (complete) rows.push_back(row);
      }
    }
  }
  return rows;
}

enum class ForecastVariant
{
  History,
  OneHot,
  Vec,
};

inline char const *to_string(ForecastVariant v)
{
  switch (v)
  {
  case ForecastVariant::History: return "history";
  case ForecastVariant::OneHot: return "onehot";
  case ForecastVariant::Vec: return "vec";
  }
  return "?";
}

inline ForecastVariant parse_variant(std::string const &s)
{
  if (s == "history") return ForecastVariant::History;
  if (s == "onehot") return ForecastVariant::OneHot;
  if (s == "vec") return ForecastVariant::Vec;
  throw Error(ErrorCode::InvalidArgument, "variant must be history, onehot or vec");
}

/// ReLU MLP regressor: h_i = max(0, W_i h_{i-1} + b_i), y = w^T h_L + b.
struct ForecastNet
{
  std::vector<Matrix> weights;  // out x in
  std::vector<Matrix> biases;   // out x 1
  Matrix              head;     // 1 x last
  Matrix              head_bias = Matrix::Zero(1, 1);

  static ForecastNet create(std::size_t input_width, std::vector<std::size_t> const &hidden, Rng &rng)
  {
    ForecastNet net;
    std::size_t in = input_width;
    for (auto width : hidden)
    {
      Matrix w(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(in));
      xavier_uniform(w, in, width, rng);
      net.weights.push_back(std::move(w));
      net.biases.push_back(Matrix::Zero(static_cast<Eigen::Index>(width), 1));
      in = width;
    }
    net.head.resize(1, static_cast<Eigen::Index>(in));
    xavier_uniform(net.head, in, 1, rng);
    return net;
  }

  std::size_t input_width() const
  {
    return static_cast<std::size_t>(weights.empty() ? head.cols() : weights.front().cols());
  }

  std::vector<Matrix *> parameters()
  {
    std::vector<Matrix *> out;
    for (std::size_t i = 0; i < weights.size(); ++i)
    {
      out.push_back(&weights[i]);
      out.push_back(&biases[i]);
    }
    out.push_back(&head);
    out.push_back(&head_bias);
    return out;
  }

  /// Hidden activations for a batch (one column per sample); element 0 is
  /// the input itself.
  std::vector<Matrix> activations(Matrix const &inputs) const
  {
    if (static_cast<std::size_t>(inputs.rows()) != input_width())
    {
      throw Error(ErrorCode::DimensionMismatch, "forecast input width " + std::to_string(inputs.rows()) +
                                                    ", network expects " + std::to_string(input_width()));
    }
    std::vector<Matrix> h{inputs};
    for (std::size_t i = 0; i < weights.size(); ++i)
    {
      Matrix z = weights[i] * h.back();
      z.colwise() += biases[i].col(0);
      h.push_back(z.cwiseMax(0.0));
    }
    return h;
  }

  Eigen::RowVectorXd forward_batch(Matrix const &inputs) const
  {
    auto const h   = activations(inputs);
    Matrix     out = head * h.back();
    out.array() += head_bias(0, 0);
    return out.row(0);
  }

  double forward(Vector const &input) const
  {
    Matrix x = input;
    return forward_batch(x)(0);
  }
};

/// Mean absolute error over the batch and its gradient (same layout as
/// ForecastNet::parameters()). The subgradient at a zero residual is 0.
inline double mae_loss_and_gradients(ForecastNet const &net, Matrix const &inputs, Eigen::RowVectorXd const &targets,
                                     std::vector<Matrix> *grads)
{
  auto const h = net.activations(inputs);
  Eigen::RowVectorXd pred = (net.head * h.back()).row(0);
  pred.array() += net.head_bias(0, 0);
  auto const         batch    = static_cast<double>(inputs.cols());
  Eigen::RowVectorXd residual = pred - targets;
  double const       loss     = residual.cwiseAbs().sum() / batch;
  if (!grads)
  {
    return loss;
  }
  Eigen::RowVectorXd dy = residual.unaryExpr([](double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }) / batch;

  std::size_t const L = net.weights.size();
  grads->assign(2 * L + 2, Matrix());
  (*grads)[2 * L]     = dy * h.back().transpose();
  (*grads)[2 * L + 1] = Matrix::Constant(1, 1, dy.sum());
  Matrix delta        = net.head.transpose() * dy;  // d loss / d h_L
  for (std::size_t i = L; i-- > 0;)
  {
    delta = delta.cwiseProduct((h[i + 1].array() > 0.0).cast<double>().matrix());
    (*grads)[2 * i]     = delta * h[i].transpose();
    (*grads)[2 * i + 1] = delta.rowwise().sum();
    if (i > 0)
    {
      delta = net.weights[i].transpose() * delta;
    }
  }
  return loss;
}

struct ForecastHyperparams
{
  std::vector<std::size_t> hidden        = {128, 128, 128, 128, 128};
  std::size_t              epochs        = 30;
  std::size_t              batch_size    = 128;
  double                   learning_rate = 1e-3;
  std::uint64_t            seed          = 1;
};

/// A trained network together with the recipe for building its inputs.
struct ForecastModel
{
  ForecastVariant                              variant = ForecastVariant::History;
  ForecastNet                                  net;
  double                                       scale = 1.0;
  std::vector<std::string>                     stores;         // one-hot order
  std::map<std::string, std::vector<double>>   store_vectors;  // vec variant

  std::size_t input_width() const
  {
    switch (variant)
    {
    case ForecastVariant::History: return kHistoryDays;
    case ForecastVariant::OneHot: return kHistoryDays + stores.size();
    case ForecastVariant::Vec:
      return kHistoryDays + (store_vectors.empty() ? 0 : store_vectors.begin()->second.size());
    }
    return kHistoryDays;
  }

  Vector features(ForecastRow const &row) const
  {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(input_width()));
    for (std::size_t h = 0; h < kHistoryDays; ++h)
    {
      x(static_cast<Eigen::Index>(h)) = row.history[h] / scale;
    }
    if (variant == ForecastVariant::OneHot)
    {
      auto it = std::lower_bound(stores.begin(), stores.end(), row.store);
      if (it == stores.end() || *it != row.store)
      {
        throw Error(ErrorCode::UnknownToken, "store '" + row.store + "' has no one-hot slot");
      }
      x(static_cast<Eigen::Index>(kHistoryDays + static_cast<std::size_t>(it - stores.begin()))) = 1.0;
    }
    else if (variant == ForecastVariant::Vec)
    {
      auto it = store_vectors.find(row.store);
      if (it == store_vectors.end())
      {
        throw Error(ErrorCode::UnknownToken, "store '" + row.store + "' has no embedding");
      }
      for (std::size_t j = 0; j < it->second.size(); ++j)
      {
        x(static_cast<Eigen::Index>(kHistoryDays + j)) = it->second[j];
      }
    }
    return x;
  }

  Matrix feature_matrix(std::vector<ForecastRow> const &rows) const
  {
    Matrix x(static_cast<Eigen::Index>(input_width()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
      x.col(static_cast<Eigen::Index>(r)) = features(rows[r]);
    }
    return x;
  }

  std::vector<double> predict(std::vector<ForecastRow> const &rows) const
  {
    if (rows.empty()) return {};
    auto const          y = net.forward_batch(feature_matrix(rows));
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
      out[r] = y(static_cast<Eigen::Index>(r)) * scale;
    }
    return out;
  }
};

/// Store-type target embeddings keyed by store token.
inline std::map<std::string, std::vector<double>> store_vectors_from_model(Model const &model)
{
  std::map<std::string, std::vector<double>> out;
  auto const &table = model.space.target[kStoreType];
  auto const &vocab = model.vocab.type(kStoreType);
  for (Index s = 0; s < vocab.size(); ++s)
  {
    auto row = table.row(s);
    out[vocab.token(s)] = std::vector<double>(row.data(), row.data() + row.size());
  }
  return out;
}

/// Mini-batch Adam on MAE. Demands are divided by the mean training demand
/// before entering the network; predict() undoes the scaling.
inline ForecastModel forecast_train(std::vector<ForecastRow> const &rows, ForecastVariant variant,
                                    std::map<std::string, std::vector<double>> const *store_vectors,
                                    ForecastHyperparams const &hp)
{
  if (rows.empty())
  {
    throw Error(ErrorCode::EmptyInput, "no forecast rows to train on");
  }
  ForecastModel model;
  model.variant = variant;
  double mean   = 0.0;
  for (auto const &r : rows) mean += r.demand;
  mean /= static_cast<double>(rows.size());
  model.scale = mean > 0.0 ? mean : 1.0;

  if (variant == ForecastVariant::OneHot)
  {
    std::set<std::string> s;
    for (auto const &r : rows) s.insert(r.store);
    model.stores.assign(s.begin(), s.end());
  }
  else if (variant == ForecastVariant::Vec)
  {
    if (!store_vectors || store_vectors->empty())
    {
      throw Error(ErrorCode::InvalidArgument, "vec variant needs store embeddings");
    }
    std::size_t const dim = store_vectors->begin()->second.size();
    for (auto const &r : rows)
    {
      auto it = store_vectors->find(r.store);
      if (it == store_vectors->end())
      {
        throw Error(ErrorCode::UnknownToken, "store '" + r.store + "' has no embedding");
      }
      if (it->second.size() != dim)
      {
        throw Error(ErrorCode::DimensionMismatch, "store embeddings differ in dimension");
      }
      model.store_vectors.emplace(it->first, it->second);
    }
  }

  Rng rng(derive_seed(hp.seed, 10));
  model.net = ForecastNet::create(model.input_width(), hp.hidden, rng);

  Matrix const       x_all = model.feature_matrix(rows);
  Eigen::RowVectorXd y_all(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) y_all(static_cast<Eigen::Index>(r)) = rows[r].demand / model.scale;

  Adam adam(AdamConfig{hp.learning_rate});
  auto params = model.net.parameters();
  adam.attach(params);
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng                 shuffle_rng(derive_seed(hp.seed, 11));
  std::vector<Matrix> grads;
  std::size_t const   batch = std::max<std::size_t>(1, hp.batch_size);
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch)
  {
    shuffle(order, shuffle_rng);
    for (std::size_t pos = 0; pos < order.size(); pos += batch)
    {
      std::size_t const  end = std::min(order.size(), pos + batch);
      Matrix             xb(x_all.rows(), static_cast<Eigen::Index>(end - pos));
      Eigen::RowVectorXd yb(static_cast<Eigen::Index>(end - pos));
      for (std::size_t i = pos; i < end; ++i)
      {
        xb.col(static_cast<Eigen::Index>(i - pos)) = x_all.col(static_cast<Eigen::Index>(order[i]));
        yb(static_cast<Eigen::Index>(i - pos))     = y_all(static_cast<Eigen::Index>(order[i]));
      }
      mae_loss_and_gradients(model.net, xb, yb, &grads);
      adam.begin_step();
      for (std::size_t p = 0; p < params.size(); ++p)
      {
        adam.update_all(p, grads[p], -1.0);
      }
    }
  }
  return model;
}

inline void save_forecast_model(ForecastModel const &model, std::filesystem::path const &dir)
{
  std::filesystem::create_directories(dir);
  std::string text = "variant=" + std::string(to_string(model.variant)) + "\n";
  text += "scale=" + detail::format_double(model.scale) + "\n";
  text += "layers=" + std::to_string(model.net.weights.size()) + "\n";
  detail::write_file(dir / "forecast_manifest.txt", text);

  std::string params;
  for (std::size_t i = 0; i < model.net.weights.size(); ++i)
  {
    params += detail::format_transform(model.net.weights[i]);
    params += detail::format_transform(model.net.biases[i]);
  }
  params += detail::format_transform(model.net.head);
  params += detail::format_transform(model.net.head_bias);
  detail::write_file(dir / "forecast_net.txt", params);

  std::string stores;
  if (model.variant == ForecastVariant::OneHot)
  {
    for (auto const &s : model.stores) stores += s + "\n";
  }
  else if (model.variant == ForecastVariant::Vec)
  {
    for (auto const &[s, v] : model.store_vectors)
    {
      stores += s;
      for (double x : v) stores += " " + detail::format_double(x);
      stores += "\n";
    }
  }
  detail::write_file(dir / "forecast_stores.txt", stores);
}

inline ForecastModel load_forecast_model(std::filesystem::path const &dir)
{
  auto const    kv = detail::parse_manifest(detail::read_bundle_file(dir / "forecast_manifest.txt"));
  ForecastModel model;
  model.variant       = parse_variant(detail::require(kv, "variant"));
  model.scale         = detail::parse_double(detail::require(kv, "scale"));
  auto const layers   = detail::parse_sizes(detail::require(kv, "layers")).at(0);

  std::istringstream in(detail::read_bundle_file(dir / "forecast_net.txt"));
  auto next_matrix = [&]() {
    std::string header;
    while (std::getline(in, header) && header.empty()) {}
    auto const [rows, cols] = detail::parse_header(header, "forecast_net.txt");
    std::string block = header + "\n";
    for (std::size_t r = 0; r < rows; ++r)
    {
      std::string line;
      if (!std::getline(in, line))
      {
        throw Error(ErrorCode::DimensionMismatch, "forecast_net.txt truncated");
      }
      block += line + "\n";
    }
    (void)cols;
    return detail::parse_matrix(block, "forecast_net.txt", false, nullptr);
  };
  for (std::size_t i = 0; i < layers; ++i)
  {
    model.net.weights.push_back(next_matrix());
    model.net.biases.push_back(next_matrix());
  }
  model.net.head      = next_matrix();
  model.net.head_bias = next_matrix();

  std::istringstream stores(detail::read_bundle_file(dir / "forecast_stores.txt"));
  std::string        line;
  while (std::getline(stores, line))
  {
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split(line, ' ', true);
    if (model.variant == ForecastVariant::OneHot)
    {
      model.stores.push_back(fields[0]);
    }
    else if (model.variant == ForecastVariant::Vec)
    {
      std::vector<double> v;
      for (std::size_t j = 1; j < fields.size(); ++j) v.push_back(detail::parse_double(fields[j]));
      model.store_vectors[fields[0]] = std::move(v);
    }
  }
  if (model.input_width() != model.net.input_width())
  {
    throw Error(ErrorCode::DimensionMismatch, "forecast network input width disagrees with its store table");
  }
  return model;
}

}  // namespace ids_embed
