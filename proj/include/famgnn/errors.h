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

#include <stdexcept>

namespace famgnn
{

// Invalid user-supplied numeric parameters (simulation, splits, filters).
class ParameterError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class SimulationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A pedigree or graph references something that does not exist.
class IntegrityError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Target does not satisfy the cohort inclusion rules.
class CohortError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class MetricError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class LoadError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

}  // namespace famgnn
