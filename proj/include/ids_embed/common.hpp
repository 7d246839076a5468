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
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <iostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ids_embed {

using Index = std::uint32_t;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// The seven ID types, in column order of the attributes file. Type 0 is the
/// item itself; every other type is an attribute of the item.
inline constexpr std::size_t kNumIdTypes = 7;
inline constexpr std::array<std::string_view, kNumIdTypes> kIdTypeNames = {
    "item", "product", "store", "brand", "cate1", "cate2", "cate3"};
inline constexpr std::size_t kItemType  = 0;
inline constexpr std::size_t kStoreType = 2;

/// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw. Unlike
/// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(Rng &rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_below(Rng &rng, std::uint64_t n)
{
  std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do
  {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void shuffle(std::vector<T> &values, Rng &rng)
{
  for (std::size_t i = values.size(); i > 1; --i)
  {
    std::size_t const j = uniform_below(rng, i);
    std::swap(values[i - 1], values[j]);
  }
}

/// Seeds for worker samplers and sub-components, derived with splitmix64.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z               = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z               = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Where library warnings go. Defaults to stderr; tests may swap it out.
inline std::function<void(std::string const &)> &warning_sink()
{
  static std::function<void(std::string const &)> sink = [](std::string const &msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(std::string const &msg)
{
  if (warning_sink())
  {
    warning_sink()(msg);
  }
}

/// Numerically stable log(sigmoid(x)).
inline double log_sigmoid(double x)
{
  if (x >= 0.0)
  {
    return -std::log1p(std::exp(-x));
  }
  return x - std::log1p(std::exp(x));
}

inline double sigmoid(double x)
{
  if (x >= 0.0)
  {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double const e = std::exp(x);
  return e / (1.0 + e);
}

/// Xavier/Glorot uniform fill in +-sqrt(6 / (fan_in + fan_out)).
inline void xavier_uniform(Matrix &m, std::size_t fan_in, std::size_t fan_out, Rng &rng)
{
  if (fan_in + fan_out == 0)
  {
    return;
  }
  double const bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
  {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
    {
      m(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
    }
  }
}

/// 64-bit FNV-1a, used for content fingerprints in model manifests.
inline std::uint64_t fnv1a64(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ids_embed
