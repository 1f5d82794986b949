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


#pragma once

#include <vector>

#include "famgnn/tensor.h"

namespace famgnn
{

struct AdamConfig
{
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Reads `grad` of each parameter on step().
class Adam
{
public:
    Adam(std::vector<Parameter*> params, AdamConfig config);

    void step();
    void zero_grad();
    int steps() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    std::vector<Parameter*> params_;
    AdamConfig config_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    int t_ = 0;
};

}  // namespace famgnn
