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
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/model_io.hpp"

namespace ids_embed {

/// Knobs for the planted-structure generator. Items belong to categories,
/// and each category is cut into `subgroups` runs of consecutive items (the
/// cate2 attribute). Each user prefers one category. A session is a walk: with
/// probability `stickiness` the next item comes from the current item's
/// subgroup, otherwise it is drawn from the user's category with probability
/// `intra_probability` and from another category otherwise. Next-day clicks
/// continue the walk of the user's last session.
struct SyntheticSpec
{
  std::size_t         categories           = 2;
  std::size_t         items_per_category   = 10;
  std::size_t         sessions             = 500;
  std::size_t         session_length       = 8;
  double              intra_probability    = 0.95;
  double              popularity_exponent  = 0.0;  // item weight (rank+1)^-a within a category
  std::size_t         subgroups            = 2;
  double              stickiness           = 0.0;
  std::uint64_t       seed                 = 7;
  std::size_t         users                = 50;
  std::size_t         clicks_per_user      = 5;
  std::size_t         holdout_per_category = 0;
  std::size_t         stores               = 10;
  std::size_t         days                 = 60;
  std::vector<double> store_scales;  // empty: evenly spaced in [1, 10]

  void validate() const
  {
    auto fail = [](std::string const &what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (categories < 1 || items_per_category < 1 || sessions < 1 || session_length < 1 || users < 1 ||
        stores < 1 || days < 1)
    {
      fail("synthetic counts must all be >= 1");
    }
    if (!(intra_probability >= 0.0 && intra_probability <= 1.0)) fail("intra probability must be in [0, 1]");
    if (categories == 1 && intra_probability < 1.0) fail("cross-category draws need >= 2 categories");
    if (holdout_per_category >= items_per_category) fail("holdout must leave at least one item per category");
    if (subgroups < 1 || subgroups > items_per_category) fail("subgroups must be in [1, items per category]");
    if (!(stickiness >= 0.0 && stickiness <= 1.0)) fail("stickiness must be in [0, 1]");
    if (!store_scales.empty() && store_scales.size() != stores) fail("need one scale per store");
    if (popularity_exponent < 0.0) fail("popularity exponent must be >= 0");
  }
};

struct SyntheticData
{
  std::string sessions;            // sessions file
  std::string attributes;          // attributes of trainable items
  std::string holdout_attributes;  // attributes of held-out (cold) items
  std::string train_sessions;      // user<TAB>tokens, one session per line
  std::string test_clicks;         // user<TAB>tokens
  std::string demand;              // store_id,date,slot,demand
  std::string store_scales;        // store<TAB>scale

  std::map<std::string, std::size_t> item_category;  // every item, held out or not
  std::vector<std::string>           holdout_items;
  std::vector<double>                scales;
};

namespace detail {

inline std::string synthetic_item(std::size_t c, std::size_t j)
{
  char buf[48];
  std::snprintf(buf, sizeof(buf), "c%zu_i%03zu", c, j);
  return buf;
}

inline std::string iso_date(std::size_t day)
{
  static constexpr int month_days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int                  year         = 2026;
  int                  month        = 0;
  auto                 d            = static_cast<int>(day);
  while (true)
  {
    bool const leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    int const  len  = month_days[month] + (month == 1 && leap ? 1 : 0);
    if (d < len) break;
    d -= len;
    if (++month == 12)
    {
      month = 0;
      ++year;
    }
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month + 1, d + 1);
  return buf;
}

inline double standard_normal(Rng &rng)
{
  double const u1 = 1.0 - uniform01(rng);
  double const u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

inline SyntheticData generate_synthetic(SyntheticSpec const &spec)
{
  spec.validate();
  SyntheticData out;
  Rng           rng(spec.seed);

  std::size_t const seen    = spec.items_per_category - spec.holdout_per_category;

  // Item j of a category sits in subgroup j * subgroups / items_per_category.
  auto subgroup_of = [&](std::size_t j) { return j * spec.subgroups / spec.items_per_category; };
  auto popularity  = [&](std::size_t j) { return std::pow(static_cast<double>(j + 1), -spec.popularity_exponent); };

  struct Pick
  {
    std::size_t category;
    std::size_t item;
  };
  // Draws an item of category c among the trainable ones, optionally only
  // from one subgroup, proportionally to popularity.
  auto draw_in = [&](std::size_t c, std::optional<std::size_t> group) {
    double total = 0.0;
    for (std::size_t j = 0; j < seen; ++j)
    {
      if (!group || subgroup_of(j) == *group) total += popularity(j);
    }
    if (total == 0.0)
    {
      group.reset();
      for (std::size_t j = 0; j < seen; ++j) total += popularity(j);
    }
    double      r    = uniform01(rng) * total;
    std::size_t pick = seen - 1;
    for (std::size_t j = 0; j < seen; ++j)
    {
      if (group && subgroup_of(j) != *group) continue;
      r -= popularity(j);
      if (r < 0.0)
      {
        pick = j;
        break;
      }
    }
    return Pick{c, pick};
  };
  auto step = [&](std::size_t home, std::optional<Pick> const &current) {
    if (current && uniform01(rng) < spec.stickiness)
    {
      return draw_in(current->category, subgroup_of(current->item));
    }
    std::size_t c = home;
    if (uniform01(rng) >= spec.intra_probability && spec.categories > 1)
    {
      c = uniform_below(rng, spec.categories - 1);
      if (c >= home) ++c;
    }
    return draw_in(c, std::nullopt);
  };

  std::string header(kAttributeHeader);
  out.attributes         = header + "\n";
  out.holdout_attributes = header + "\n";
  for (std::size_t c = 0; c < spec.categories; ++c)
  {
    for (std::size_t j = 0; j < spec.items_per_category; ++j)
    {
      std::string const item = detail::synthetic_item(c, j);
      std::size_t const flat = c * spec.items_per_category + j;
      std::size_t const sub  = subgroup_of(j);
      char              row[256];
      std::snprintf(row, sizeof(row), "%s\tp%zu_%zu\ts%zu\tb%zu_%zu\tc%zu\tc%zu_%zu\tc%zu_%zu_%zu\n", item.c_str(), c,
                    j / 2, flat % spec.stores, c, j % 2, c, c, sub, c, sub, j % 4);
      out.item_category[item] = c;
      if (j >= seen)
      {
        out.holdout_items.push_back(item);
        out.holdout_attributes += row;
      }
      else
      {
        out.attributes += row;
      }
    }
  }

  std::vector<std::optional<Pick>> last(spec.users);
  for (std::size_t s = 0; s < spec.sessions; ++s)
  {
    std::size_t const   user = s % spec.users;
    std::size_t const   home = user % spec.categories;
    std::optional<Pick> current;
    std::string         line;
    for (std::size_t t = 0; t < spec.session_length; ++t)
    {
      current = step(home, current);
      if (t) line += ' ';
      line += detail::synthetic_item(current->category, current->item);
    }
    last[user] = current;
    out.sessions += line + "\n";
    out.train_sessions += "u" + std::to_string(user) + "\t" + line + "\n";
  }
  for (std::size_t u = 0; u < spec.users; ++u)
  {
    std::set<std::string> clicks;
    std::optional<Pick>   current = last[u];
    for (std::size_t i = 0; i < spec.clicks_per_user; ++i)
    {
      current = step(u % spec.categories, current);
      clicks.insert(detail::synthetic_item(current->category, current->item));
    }
    std::string line  = "u" + std::to_string(u) + "\t";
    bool        first = true;
    for (auto const &c : clicks)
    {
      if (!first) line += ' ';
      line += c;
      first = false;
    }
    out.test_clicks += line + "\n";
  }

  // Demand: store scale x mild intraday curve x weekday factor x noise.
  out.scales = spec.store_scales;
  if (out.scales.empty())
  {
    for (std::size_t s = 0; s < spec.stores; ++s)
    {
      out.scales.push_back(spec.stores == 1 ? 1.0 : 1.0 + 9.0 * static_cast<double>(s) / static_cast<double>(spec.stores - 1));
    }
  }
  out.demand = "store_id,date,slot,demand\n";
  for (std::size_t s = 0; s < spec.stores; ++s)
  {
    out.store_scales += "s" + std::to_string(s) + "\t" + detail::format_double(out.scales[s]) + "\n";
    for (std::size_t d = 0; d < spec.days; ++d)
    {
      std::string const date    = detail::iso_date(d);
      double const      weekday = (d % 7 == 5 || d % 7 == 6) ? 1.15 : 1.0;
      for (int slot = 0; slot < 48; ++slot)
      {
        double const phase = 2.0 * std::numbers::pi * static_cast<double>(slot) / 48;
        double const curve = 1.0 + 0.2 * std::sin(phase - std::numbers::pi / 2.0);
        double const mean  = 4.0 * out.scales[s] * curve * weekday;
        double const noisy = std::max(0.0, mean * (1.0 + 0.4 * detail::standard_normal(rng)));
        out.demand += "s" + std::to_string(s) + "," + date + "," + std::to_string(slot) + "," +
                      std::to_string(static_cast<long long>(std::llround(noisy))) + "\n";
      }
    }
  }
  return out;
}

/// Writes every synthetic file into `dir`.
inline void write_synthetic(SyntheticData const &data, std::filesystem::path const &dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
  {
    throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  }
  detail::write_file(dir / "sessions.txt", data.sessions);
  detail::write_file(dir / "attributes.tsv", data.attributes);
  detail::write_file(dir / "holdout_attributes.tsv", data.holdout_attributes);
  detail::write_file(dir / "train_sessions.tsv", data.train_sessions);
  detail::write_file(dir / "test_clicks.tsv", data.test_clicks);
  detail::write_file(dir / "demand.csv", data.demand);
  detail::write_file(dir / "store_scales.tsv", data.store_scales);
}

}  // namespace ids_embed
