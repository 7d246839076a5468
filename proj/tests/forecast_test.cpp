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
#include <vector>

#include "test_support.hpp"

using namespace ids_embed;
namespace t = ids_embed::testing;

namespace {

std::string demand_csv(std::size_t stores, std::size_t days, double (*value)(std::size_t, std::size_t, int))
{
  std::string csv = "store_id,date,slot,demand\n";
  for (std::size_t s = 0; s < stores; ++s)
  {
    for (std::size_t d = 0; d < days; ++d)
    {
      for (int slot = 0; slot < kSlotsPerDay; ++slot)
      {
        csv += "s" + std::to_string(s) + "," + detail::iso_date(d) + "," + std::to_string(slot) + "," +
               detail::format_double(value(s, d, slot)) + "\n";
      }
    }
  }
  return csv;
}

std::vector<ForecastRow> rows_of(std::string const &csv)
{
  std::istringstream in(csv);
  return build_forecast_rows(parse_demand_csv(in));
}

ForecastHyperparams small_hp(std::size_t epochs)
{
  ForecastHyperparams hp;
  hp.hidden        = {16, 16};
  hp.epochs        = epochs;
  hp.batch_size    = 32;
  hp.learning_rate = 1e-2;
  return hp;
}

}  // namespace

TEST(DemandCsv, ParsesRecords)
{
  std::istringstream in("store_id,date,slot,demand\r\ns1,2026-01-01,0,3\ns2,2026-01-02,47,0.5\n\n");
  auto const         recs = parse_demand_csv(in);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].store, "s2");
  EXPECT_EQ(recs[1].date, "2026-01-02");
  EXPECT_EQ(recs[1].slot, 47);
  EXPECT_DOUBLE_EQ(recs[1].demand, 0.5);
}

TEST(DemandCsv, RejectsBadInput)
{
  auto code = [](std::string const &text) {
    std::istringstream in(text);
    try
    {
      parse_demand_csv(in);
    }
    catch (Error const &e)
    {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code(""), ErrorCode::EmptyInput);
  EXPECT_EQ(code("store,date,slot,demand\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code("store_id,date,slot,demand\ns1,2026-01-01,48,1\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code("store_id,date,slot,demand\ns1,2026-01-01,0\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code("store_id,date,slot,demand\n,2026-01-01,0,1\n"), ErrorCode::MalformedLine);
  EXPECT_NE(code("store_id,date,slot,demand\ns1,2026-01-01,0,abc\n"), ErrorCode::Io);
}

TEST(ForecastRows, HistoryIsOldestFirst)
{
  auto const rows = rows_of(demand_csv(2, 10, [](std::size_t s, std::size_t d, int slot) {
    return 100.0 * static_cast<double>(s) + 10.0 * static_cast<double>(d) + slot * 0.01;
  }));
  // 2 stores x 3 predictable days x 48 slots.
  ASSERT_EQ(rows.size(), 2u * 3u * 48u);
  for (auto const &r : rows)
  {
    double const s = r.store == "s1" ? 100.0 : 0.0;
    for (std::size_t h = 0; h < kHistoryDays; ++h)
    {
      EXPECT_LT(h == 0 ? -1.0 : r.history[h - 1], r.history[h]);
    }
    EXPECT_NEAR(r.demand - r.history[kHistoryDays - 1], 10.0, 1e-9);
    EXPECT_NEAR(r.history[0], r.demand - 70.0, 1e-9);
    EXPECT_NEAR(std::fmod(r.demand - s, 10.0), r.slot * 0.01, 1e-9);
  }
}

TEST(ForecastRows, GapsDropRows)
{
  std::string csv = "store_id,date,slot,demand\n";
  for (std::size_t d = 0; d < 9; ++d)
  {
    if (d == 3) continue;
    csv += "s0," + detail::iso_date(d) + ",5,1\n";
  }
  csv += "s1," + detail::iso_date(3) + ",5,1\n";
  // s0 is missing day 3, so no row for s0 can see a full week.
  EXPECT_TRUE(rows_of(csv).empty());
}

TEST(ForecastNet, ZeroNetReturnsHeadBias)
{
  Rng  rng(1);
  auto net = ForecastNet::create(7, {4, 4}, rng);
  for (auto *p : net.parameters()) p->setZero();
  net.head_bias(0, 0) = 2.5;
  EXPECT_DOUBLE_EQ(net.forward(Vector::Constant(7, 3.0)), 2.5);
}

TEST(ForecastNet, HandComputedForward)
{
  // 1 -> relu(2*1 - 1) = 1 -> relu(1) = 1 -> 3 * 1 = 3.
  Rng  rng(1);
  auto net = ForecastNet::create(1, {1, 1}, rng);
  net.weights[0](0, 0) = 2.0;
  net.biases[0](0, 0)  = -1.0;
  net.weights[1](0, 0) = 1.0;
  net.biases[1](0, 0)  = 0.0;
  net.head(0, 0)       = 3.0;
  net.head_bias(0, 0)  = 0.0;
  EXPECT_DOUBLE_EQ(net.forward(Vector::Constant(1, 1.0)), 3.0);
  // Below the kink the whole network is dead.
  EXPECT_DOUBLE_EQ(net.forward(Vector::Constant(1, 0.25)), 0.0);
}

TEST(ForecastNet, ActivationsAreNonNegative)
{
  Rng    rng(3);
  auto   net = ForecastNet::create(5, {8, 8, 8}, rng);
  Matrix x   = Matrix::Random(5, 20);
  auto   h   = net.activations(x);
  ASSERT_EQ(h.size(), 4u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GE(h[i].minCoeff(), 0.0);
  EXPECT_THROW(net.activations(Matrix::Zero(4, 1)), Error);
}

TEST(ForecastNet, PiecewiseLinearAlongALine)
{
  // Between two close points on the same linear piece, the midpoint output is the mean.
  Rng    rng(5);
  auto   net = ForecastNet::create(3, {6, 6}, rng);
  Vector a   = Vector::Random(3);
  Vector dir = Vector::Random(3) * 1e-7;
  double const lo  = net.forward(a - dir);
  double const mid = net.forward(a);
  double const hi  = net.forward(a + dir);
  EXPECT_NEAR(mid, 0.5 * (lo + hi), 1e-12);
}

TEST(ForecastNet, MaeGradientMatchesFiniteDifferences)
{
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
  {
    Rng rng(seed);
    EXPECT_LE(t::forecast_gradient_check(rng, 5, {6, 4}, 6, 1e-6), 1e-3) << "seed " << seed;
  }
}

TEST(ForecastNet, MaeSubgradientIsZeroAtExactFit)
{
  Rng                rng(2);
  auto               net = ForecastNet::create(3, {4}, rng);
  Matrix             x   = Matrix::Random(3, 5);
  Eigen::RowVectorXd y   = net.forward_batch(x);
  std::vector<Matrix> grads;
  EXPECT_DOUBLE_EQ(mae_loss_and_gradients(net, x, y, &grads), 0.0);
  for (auto const &g : grads) EXPECT_DOUBLE_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ForecastModel, InputWidths)
{
  auto const rows = rows_of(demand_csv(3, 8, [](std::size_t, std::size_t, int) { return 2.0; }));
  std::map<std::string, std::vector<double>> vecs = {{"s0", {1, 0}}, {"s1", {0, 1}}, {"s2", {1, 1}}};
  auto const hp = small_hp(1);
  EXPECT_EQ(forecast_train(rows, ForecastVariant::History, nullptr, hp).net.input_width(), 7u);
  EXPECT_EQ(forecast_train(rows, ForecastVariant::OneHot, nullptr, hp).net.input_width(), 10u);
  EXPECT_EQ(forecast_train(rows, ForecastVariant::Vec, &vecs, hp).net.input_width(), 9u);
}

TEST(ForecastModel, FeaturesAreScaledHistoryPlusStoreColumns)
{
  ForecastModel m;
  m.variant = ForecastVariant::OneHot;
  m.scale   = 2.0;
  m.stores  = {"a", "b", "c"};
  ForecastRow row{"b", "2026-01-08", 0, {1, 2, 3, 4, 5, 6, 7}, 8};
  Vector      x = m.features(row);
  ASSERT_EQ(x.size(), 10);
  EXPECT_DOUBLE_EQ(x(0), 0.5);
  EXPECT_DOUBLE_EQ(x(6), 3.5);
  EXPECT_DOUBLE_EQ(x(7), 0.0);
  EXPECT_DOUBLE_EQ(x(8), 1.0);
  EXPECT_DOUBLE_EQ(x(9), 0.0);
  row.store = "z";
  EXPECT_THROW(m.features(row), Error);
}

TEST(ForecastTrain, LearnsConstantDemand)
{
  auto const rows  = rows_of(demand_csv(1, 9, [](std::size_t, std::size_t, int) { return 6.0; }));
  auto const model = forecast_train(rows, ForecastVariant::History, nullptr, small_hp(200));
  auto const pred  = model.predict(rows);
  double     mae   = 0.0;
  for (double p : pred) mae += std::abs(p - 6.0);
  mae /= static_cast<double>(pred.size());
  EXPECT_LT(mae, 0.05 * 6.0);
}

TEST(ForecastTrain, Deterministic)
{
  auto const rows = rows_of(demand_csv(2, 9, [](std::size_t s, std::size_t d, int slot) {
    return 1.0 + static_cast<double>(s) + 0.1 * static_cast<double>((d * 7 + static_cast<std::size_t>(slot)) % 5);
  }));
  auto const a = forecast_train(rows, ForecastVariant::OneHot, nullptr, small_hp(3));
  auto const b = forecast_train(rows, ForecastVariant::OneHot, nullptr, small_hp(3));
  EXPECT_EQ(a.predict(rows), b.predict(rows));
  auto hp = small_hp(3);
  hp.seed = 2;
  EXPECT_NE(forecast_train(rows, ForecastVariant::OneHot, nullptr, hp).predict(rows), a.predict(rows));
}

TEST(ForecastTrain, Errors)
{
  auto const rows = rows_of(demand_csv(2, 8, [](std::size_t, std::size_t, int) { return 1.0; }));
  auto const hp   = small_hp(1);
  EXPECT_THROW(forecast_train({}, ForecastVariant::History, nullptr, hp), Error);
  try
  {
    forecast_train(rows, ForecastVariant::Vec, nullptr, hp);
    ADD_FAILURE();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  std::map<std::string, std::vector<double>> only_s0 = {{"s0", {1.0}}};
  try
  {
    forecast_train(rows, ForecastVariant::Vec, &only_s0, hp);
    ADD_FAILURE();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), ErrorCode::UnknownToken);
  }
  std::map<std::string, std::vector<double>> ragged = {{"s0", {1.0}}, {"s1", {1.0, 2.0}}};
  EXPECT_THROW(forecast_train(rows, ForecastVariant::Vec, &ragged, hp), Error);
}

TEST(ForecastIo, RoundTripsEveryVariant)
{
  auto const rows = rows_of(demand_csv(2, 8, [](std::size_t s, std::size_t d, int) {
    return 1.0 + static_cast<double>(s + d % 3);
  }));
  std::map<std::string, std::vector<double>> vecs = {{"s0", {0.25, -1}}, {"s1", {3, 0.5}}};
  t::TempDir tmp;
  for (auto v : {ForecastVariant::History, ForecastVariant::OneHot, ForecastVariant::Vec})
  {
    auto const model = forecast_train(rows, v, &vecs, small_hp(2));
    auto const dir   = tmp / to_string(v);
    save_forecast_model(model, dir);
    auto const loaded = load_forecast_model(dir);
    EXPECT_EQ(loaded.variant, v);
    EXPECT_EQ(loaded.stores, model.stores);
    EXPECT_EQ(loaded.store_vectors, model.store_vectors);
    auto const a = model.predict(rows);
    auto const b = loaded.predict(rows);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9 * std::max(1.0, std::abs(a[i])));
  }
}

TEST(ForecastIo, ParseVariant)
{
  for (auto v : {ForecastVariant::History, ForecastVariant::OneHot, ForecastVariant::Vec})
  {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_variant("mlp"), Error);
}

TEST(ForecastIo, StoreVectorsComeFromStoreTargets)
{
  Rng        rng(4);
  auto const model = t::random_model({5, 4, 3, 2, 2, 2, 2}, {4, 3, 2, 2, 2, 2, 2}, rng);
  auto const vecs  = store_vectors_from_model(model);
  ASSERT_EQ(vecs.size(), 3u);
  for (Index s = 0; s < 3; ++s)
  {
    auto const &v = vecs.at(model.vocab.type(kStoreType).token(s));
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[1], model.space.target[kStoreType](static_cast<Eigen::Index>(s), 1));
  }
}
