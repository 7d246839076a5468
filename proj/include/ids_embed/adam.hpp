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

#include <cmath>
#include <span>
#include <vector>

#include "ids_embed/common.hpp"

namespace ids_embed {

struct AdamConfig
{
  double learning_rate = 1e-3;
  double beta1         = 0.9;
  double beta2         = 0.999;
  double epsilon       = 1e-8;
};

/// Adam over a fixed list of parameter matrices. Rows that have never seen a
/// gradient keep m = v = 0 and therefore receive an exactly-zero update, so
/// update_rows() over the rows touched so far is equivalent to a dense step.
class Adam
{
public:
  explicit Adam(AdamConfig config = {})
    : config_(config)
  {}

  void attach(std::vector<Matrix *> params)
  {
    params_ = std::move(params);
    first_.clear();
    second_.clear();
    for (auto *p : params_)
    {
      first_.push_back(Matrix::Zero(p->rows(), p->cols()));
      second_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
    step_ = 0;
  }

  void begin_step()
  {
    ++step_;
    correction1_ = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    correction2_ = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  }

  /// direction = +1 ascends, -1 descends.
  void update_all(std::size_t slot, Matrix const &grad, double direction)
  {
    Matrix &p = *params_[slot];
    Matrix &m = first_[slot];
    Matrix &v = second_[slot];
    m         = config_.beta1 * m + (1.0 - config_.beta1) * grad;
    v.array() = config_.beta2 * v.array() + (1.0 - config_.beta2) * grad.array().square();
    p.array() += direction * config_.learning_rate * (m.array() / correction1_) /
                 ((v.array() / correction2_).sqrt() + config_.epsilon);
  }

  void update_rows(std::size_t slot, Matrix const &grad, std::span<Index const> rows, double direction)
  {
    Matrix &p = *params_[slot];
    Matrix &m = first_[slot];
    Matrix &v = second_[slot];
    for (Index r : rows)
    {
      m.row(r) = config_.beta1 * m.row(r) + (1.0 - config_.beta1) * grad.row(r);
      v.row(r).array() =
          config_.beta2 * v.row(r).array() + (1.0 - config_.beta2) * grad.row(r).array().square();
      p.row(r).array() += direction * config_.learning_rate * (m.row(r).array() / correction1_) /
                          ((v.row(r).array() / correction2_).sqrt() + config_.epsilon);
    }
  }

  std::size_t steps() const noexcept
  {
    return step_;
  }

private:
  AdamConfig            config_;
  std::vector<Matrix *> params_;
  std::vector<Matrix>   first_;
  std::vector<Matrix>   second_;
  std::size_t           step_        = 0;
  double                correction1_ = 1.0;
  double                correction2_ = 1.0;
};

}  // namespace ids_embed
