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
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/inference.hpp"
#include "ids_embed/model_io.hpp"

namespace ids_embed {

struct KMeansResult
{
  Matrix                   centers;
  std::vector<std::size_t> assignment;
  std::vector<double>      inertia;  // after each assignment step
  std::size_t              iterations = 0;
};

namespace detail {

inline std::size_t nearest_center(Matrix const &points, Eigen::Index p, Matrix const &centers, double *dist)
{
  std::size_t best   = 0;
  double      best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
  {
    double const d = (points.row(p) - centers.row(c)).squaredNorm();
    if (d < best_d)
    {
      best_d = d;
      best   = static_cast<std::size_t>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace detail

/// Lloyd's algorithm under squared Euclidean distance with k-means++ seeding.
/// Stops when assignments no longer change or after max_iters. A cluster that
/// empties out is moved onto the point farthest from its own center.
inline KMeansResult kmeans(Matrix const &points, std::size_t k, std::size_t max_iters, std::uint64_t seed)
{
  auto const n = static_cast<std::size_t>(points.rows());
  if (k == 0)
  {
    throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  }
  if (k > n)
  {
    throw Error(ErrorCode::InvalidArgument, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  }
  Rng          rng(seed);
  KMeansResult out;
  out.centers.resize(static_cast<Eigen::Index>(k), points.cols());

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t         first = uniform_below(rng, n);
  out.centers.row(0)        = points.row(static_cast<Eigen::Index>(first));
  for (std::size_t c = 1; c < k; ++c)
  {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p)
    {
      d2[p] = std::min(d2[p], (points.row(static_cast<Eigen::Index>(p)) -
                               out.centers.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
      total += d2[p];
    }
    std::size_t pick = 0;
    if (total > 0.0)
    {
      double target = uniform01(rng) * total;
      pick          = n - 1;
      for (std::size_t p = 0; p < n; ++p)
      {
        target -= d2[p];
        if (target < 0.0 && d2[p] > 0.0)
        {
          pick = p;
          break;
        }
      }
    }
    else
    {
      pick = uniform_below(rng, n);
    }
    out.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
  }

  out.assignment.assign(n, k);
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iters, 1); ++iter)
  {
    bool   changed = false;
    double inertia = 0.0;
    for (std::size_t p = 0; p < n; ++p)
    {
      auto const c = detail::nearest_center(points, static_cast<Eigen::Index>(p), out.centers, &dist[p]);
      changed |= c != out.assignment[p];
      out.assignment[p] = c;
      inertia += dist[p];
    }
    out.inertia.push_back(inertia);
    out.iterations = iter + 1;
    if (!changed && iter > 0)
    {
      break;
    }

    Matrix                   sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p)
    {
      sums.row(static_cast<Eigen::Index>(out.assignment[p])) += points.row(static_cast<Eigen::Index>(p));
      ++counts[out.assignment[p]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c)
    {
      if (counts[c] > 0)
      {
        out.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      }
    }
    for (std::size_t c = 0; c < k; ++c)
    {
      if (counts[c] > 0)
      {
        continue;
      }
      std::size_t far   = 0;
      double      far_d = -1.0;
      for (std::size_t p = 0; p < n; ++p)
      {
        if (taken[p]) continue;
        double const d = (points.row(static_cast<Eigen::Index>(p)) -
                          out.centers.row(static_cast<Eigen::Index>(out.assignment[p]))).squaredNorm();
        if (d > far_d)
        {
          far_d = d;
          far   = p;
        }
      }
      taken[far]                                    = true;
      out.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
    }
  }
  return out;
}

inline double kmeans_inertia(Matrix const &points, Matrix const &centers, std::vector<std::size_t> const &assignment)
{
  double s = 0.0;
  for (Eigen::Index p = 0; p < points.rows(); ++p)
  {
    s += (points.row(p) - centers.row(static_cast<Eigen::Index>(assignment[static_cast<std::size_t>(p)]))).squaredNorm();
  }
  return s;
}

/// Clustered overlap users: centers, who is in which group, and each group's
/// candidate item list.
struct UserGroups
{
  Matrix                                centers;
  std::vector<std::string>              users;
  std::vector<std::size_t>              assignment;
  std::vector<std::vector<std::string>> candidates;

  std::size_t size() const noexcept
  {
    return static_cast<std::size_t>(centers.rows());
  }
};

inline Matrix stack_vectors(std::vector<UserVector> const &vectors)
{
  if (vectors.empty())
  {
    return Matrix();
  }
  Matrix m(static_cast<Eigen::Index>(vectors.size()), vectors.front().values.size());
  for (std::size_t i = 0; i < vectors.size(); ++i)
  {
    if (vectors[i].values.size() != m.cols())
    {
      throw Error(ErrorCode::DimensionMismatch, "user vectors differ in dimension");
    }
    m.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
  }
  return m;
}

inline UserGroups cluster_users(std::vector<UserVector> const &vectors, std::size_t k, std::size_t max_iters,
                                std::uint64_t seed)
{
  auto       result = kmeans(stack_vectors(vectors), k, max_iters, seed);
  UserGroups g;
  g.centers    = std::move(result.centers);
  g.assignment = std::move(result.assignment);
  for (auto const &v : vectors)
  {
    g.users.push_back(v.user);
  }
  g.candidates.resize(k);
  return g;
}

/// Per group, items ranked by total interaction count among its users
/// (ties: ascending token), truncated to n.
inline std::vector<std::vector<std::string>> group_candidates(
    UserGroups const &groups, std::map<std::string, std::vector<std::string>> const &interactions, std::size_t n)
{
  std::vector<std::map<std::string, std::size_t>> counts(groups.size());
  for (std::size_t u = 0; u < groups.users.size(); ++u)
  {
    auto it = interactions.find(groups.users[u]);
    if (it == interactions.end()) continue;
    for (auto const &item : it->second)
    {
      ++counts[groups.assignment[u]][item];
    }
  }
  std::vector<std::vector<std::string>> out(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
  {
    std::vector<std::pair<std::string, std::size_t>> ranked(counts[g].begin(), counts[g].end());
    std::stable_sort(ranked.begin(), ranked.end(), [](auto const &a, auto const &b) { return a.second > b.second; });
    for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i)
    {
      out[g].push_back(ranked[i].first);
    }
  }
  return out;
}

/// Group whose center has the highest cosine with `vector`; ties go to the
/// lowest group id. Zero-norm centers never win.
template <typename V>
std::size_t assign_user(Eigen::MatrixBase<V> const &vector, UserGroups const &groups)
{
  if (groups.size() == 0)
  {
    throw Error(ErrorCode::InvalidArgument, "no groups to assign to");
  }
  if (vector.norm() == 0.0)
  {
    throw Error(ErrorCode::ZeroVector, "cannot assign a zero user vector");
  }
  std::size_t best   = groups.size();
  double      best_s = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < groups.size(); ++g)
  {
    auto const center = groups.centers.row(static_cast<Eigen::Index>(g));
    if (center.norm() == 0.0) continue;
    double const s = cosine_similarity(vector, center.transpose());
    if (s > best_s)
    {
      best_s = s;
      best   = g;
    }
  }
  if (best == groups.size())
  {
    throw Error(ErrorCode::ZeroVector, "every group center is zero");
  }
  return best;
}

inline void save_groups(UserGroups const &groups, std::filesystem::path const &dir)
{
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "centers.txt", detail::format_transform(groups.centers));
  std::string assignments;
  for (std::size_t u = 0; u < groups.users.size(); ++u)
  {
    assignments += groups.users[u] + "\t" + std::to_string(groups.assignment[u]) + "\n";
  }
  detail::write_file(dir / "assignments.tsv", assignments);
  std::string candidates;
  for (std::size_t g = 0; g < groups.size(); ++g)
  {
    candidates += std::to_string(g) + "\t";
    auto const &list = g < groups.candidates.size() ? groups.candidates[g] : std::vector<std::string>{};
    for (std::size_t i = 0; i < list.size(); ++i)
    {
      if (i) candidates += ' ';
      candidates += list[i];
    }
    candidates += "\n";
  }
  detail::write_file(dir / "candidates.tsv", candidates);
}

inline UserGroups load_groups(std::filesystem::path const &dir)
{
  UserGroups g;
  g.centers = detail::parse_matrix(detail::read_bundle_file(dir / "centers.txt"), "centers.txt", false, nullptr);
  g.candidates.resize(g.size());
  std::istringstream in(detail::read_bundle_file(dir / "candidates.tsv"));
  std::string        line;
  while (std::getline(in, line))
  {
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto const tab = line.find('\t');
    if (tab == std::string::npos)
    {
      throw Error(ErrorCode::MalformedLine, "candidates.tsv line '" + line + "'");
    }
    auto const id = detail::parse_sizes(line.substr(0, tab)).at(0);
    if (id >= g.size())
    {
      throw Error(ErrorCode::DimensionMismatch, "candidates.tsv names group " + std::to_string(id));
    }
    g.candidates[id] = detail::split(line.substr(tab + 1), ' ', true);
  }
  std::istringstream as(detail::read_bundle_file(dir / "assignments.tsv"));
  while (std::getline(as, line))
  {
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t', false);
    if (fields.size() != 2)
    {
      throw Error(ErrorCode::MalformedLine, "assignments.tsv line '" + line + "'");
    }
    g.users.push_back(fields[0]);
    g.assignment.push_back(detail::parse_sizes(fields[1]).at(0));
  }
  return g;
}

}  // namespace ids_embed
