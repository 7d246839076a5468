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
#include <cstdint>
#include <span>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/error.hpp"

namespace ids_embed {

/// p(index) = (log(index + 2) - log(index + 1)) / log(D + 1)
inline double zipf_probability(std::uint64_t index, std::uint64_t dict_size)
{
  if (dict_size == 0 || index >= dict_size)
  {
    throw Error(ErrorCode::IndexOutOfRange, "zipf index " + std::to_string(index) +
                                                " outside [0, " + std::to_string(dict_size) + ")");
  }
  double const x = static_cast<double>(index);
  return std::log1p(1.0 / (x + 1.0)) / std::log(static_cast<double>(dict_size) + 1.0);
}

/// Closed-form CDF F(index) = log(index + 2) / log(D + 1).
inline double zipf_cdf(std::uint64_t index, std::uint64_t dict_size)
{
  if (dict_size == 0 || index >= dict_size)
  {
    throw Error(ErrorCode::IndexOutOfRange, "zipf index " + std::to_string(index));
  }
  return std::log(static_cast<double>(index) + 2.0) /
         std::log(static_cast<double>(dict_size) + 1.0);
}

/// Log-uniform sampler over frequency-ranked indices [0, D). Inverts the CDF:
/// index = ceil((D + 1)^r) - 2 with r ~ U(0, 1].
class ZipfSampler
{
public:
  static constexpr int kMaxRedraws = 100;

  ZipfSampler(std::uint64_t dict_size, std::uint64_t seed)
    : dict_size_(dict_size)
    , base_(static_cast<double>(dict_size) + 1.0)
    , rng_(seed)
  {
    if (dict_size == 0)
    {
      throw Error(ErrorCode::InvalidArgument, "zipf sampler needs D >= 1");
    }
  }

  std::uint64_t dict_size() const noexcept
  {
    return dict_size_;
  }

  /// Maps r in (0, 1] to an index. Exposed so the boundary behaviour can be
  /// checked without going through the generator.
  std::uint64_t index_for(double r) const
  {
    double const raw = std::ceil(std::pow(base_, r)) - 2.0;
    if (!(raw > 0.0))
    {
      return 0;
    }
    return std::min(static_cast<std::uint64_t>(raw), dict_size_ - 1);
  }

  std::uint64_t draw()
  {
    double const r = 1.0 - uniform01(rng_);
    return index_for(r);
  }

  /// S draws avoiding `exclude`. A slot that still collides after
  /// kMaxRedraws attempts keeps its last draw.
  std::vector<Index> draw_negatives(std::size_t count, std::span<Index const> exclude)
  {
    std::vector<Index> out;
    out.reserve(count);
    draw_negatives_into(count, exclude, out);
    return out;
  }

  void draw_negatives_into(std::size_t count, std::span<Index const> exclude, std::vector<Index> &out)
  {
    auto excluded = [&](std::uint64_t v) {
      return std::find(exclude.begin(), exclude.end(), static_cast<Index>(v)) != exclude.end();
    };
    for (std::size_t s = 0; s < count; ++s)
    {
      std::uint64_t v = draw();
      int attempts    = 0;
      while (excluded(v) && attempts < kMaxRedraws)
      {
        v = draw();
        ++attempts;
      }
      if (excluded(v))
      {
        ++accepted_collisions_;
        if (dict_size_ > exclude.size())
        {
          warn("negative sample collided with an excluded index after " +
               std::to_string(kMaxRedraws) + " redraws");
        }
      }
      out.push_back(static_cast<Index>(v));
    }
  }

  std::size_t accepted_collisions() const noexcept
  {
    return accepted_collisions_;
  }

private:
  std::uint64_t dict_size_;
  double        base_;
  Rng           rng_;
  std::size_t   accepted_collisions_ = 0;
};

}  // namespace ids_embed
