/*
 * Copyright 2026 The famgnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "famgnn/optim.h"

#include <cmath>
#include <stdexcept>

namespace famgnn
{

Adam::Adam(std::vector<Parameter*> params, AdamConfig config) : params_(std::move(params)), config_(config)
{
    if (config_.lr < 0.0 || config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 ||
        config_.beta2 >= 1.0 || config_.eps <= 0.0)
    {
        throw std::invalid_argument("Adam: invalid hyperparameters");
    }
    for (Parameter* p : params_)
    {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step()
{
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, t_);
    const double c2 = 1.0 - std::pow(config_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k)
    {
        Parameter& p = *params_[k];
        m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * p.grad;
        v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= config_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.eps);
    }
}

void Adam::zero_grad()
{
    for (Parameter* p : params_)
    {
        p->zero_grad();
    }
}

}  // namespace famgnn
