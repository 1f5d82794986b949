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

#include "famgnn/pedigree.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace famgnn
{

namespace
{

enum Stage : std::uint64_t
{
    kStageAncestry = 1,
    kStageCouples = 2,
    kStageChild = 3,
    kStagePhenotype = 4,
    kStageTracks = 5,
};

constexpr int kMatingAttempts = 100;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

double normal_draw(Rng& rng, double variance)
{
    std::normal_distribution<double> z(0.0, 1.0);
    const double v = std::sqrt(variance) * z(rng);
    return v + 0.0;  // folds -0.0 into 0.0
}

struct Basics
{
    int sex;
    double age;
};

Basics draw_basics(Rng& rng)
{
    std::bernoulli_distribution male(0.5);
    std::uniform_real_distribution<double> age(0.0, 1.0);
    const int sex = male(rng) ? kMale : kFemale;
    return {sex, age(rng)};
}

double total_liability(const SimParams& p, const Individual& ind)
{
    return ind.l_herr + p.beta_age * ind.age + p.beta_sex * ind.sex + ind.epsilon;
}

}  // namespace

// ---------------------------------------------------------------------------

void SimParams::validate() const
{
    if (!(h2 >= 0.0) || !(e2 >= 0.0))
    {
        throw ParameterError(fmt::format("variances must be non-negative (h2={}, e2={})", h2, e2));
    }
    if (std::abs(alpha1 + alpha2 - 1.0) > 1e-9 || alpha1 < 0.0 || alpha2 < 0.0)
    {
        throw ParameterError(fmt::format("alpha1 + alpha2 must equal 1 (got {} + {})", alpha1, alpha2));
    }
    if (!(prevalence > 0.0 && prevalence < 1.0))
    {
        throw ParameterError(fmt::format("prevalence must lie in (0, 1), got {}", prevalence));
    }
    if (gen_sizes.empty())
    {
        throw ParameterError("at least one generation is required");
    }
    for (int n : gen_sizes)
    {
        if (n < 2)
        {
            throw ParameterError(fmt::format("generation size must be >= 2, got {}", n));
        }
    }
    if (remate_probability < 0.0 || remate_probability > 1.0)
    {
        throw ParameterError(fmt::format("remate_probability {} outside [0, 1]", remate_probability));
    }
    if (n_years < 1)
    {
        throw ParameterError(fmt::format("n_years must be >= 1, got {}", n_years));
    }
    if (!std::isfinite(beta_age) || !std::isfinite(beta_sex))
    {
        throw ParameterError("fixed-effect coefficients must be finite");
    }
}

double stabilizer_constant(double alpha1, double alpha2, StabilizerMode mode)
{
    switch (mode)
    {
        case StabilizerMode::PaperLiteral:
            return 1.0 / (alpha1 * alpha1 + alpha2);
        case StabilizerMode::VariancePreserving:
            return 1.0 / std::sqrt(alpha1 * alpha1 + alpha2 * alpha2);
    }
    return 1.0;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t generation, std::uint64_t index)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ stage);
    h = splitmix64(h ^ generation);
    return splitmix64(h ^ index);
}

// ---------------------------------------------------------------------------
// Population

const Individual& Population::at(int id) const
{
    if (!contains(id))
    {
        throw IntegrityError(fmt::format("unknown individual {}", id));
    }
    return individuals_[static_cast<std::size_t>(id)];
}

Individual& Population::at(int id)
{
    if (!contains(id))
    {
        throw IntegrityError(fmt::format("unknown individual {}", id));
    }
    return individuals_[static_cast<std::size_t>(id)];
}

int Population::generation_begin(int g) const
{
    return generation_start_.at(static_cast<std::size_t>(g));
}

int Population::generation_end(int g) const
{
    return g + 1 < n_generations() ? generation_start_[static_cast<std::size_t>(g) + 1] : size();
}

std::span<const int> Population::children(int id) const
{
    return children_.at(static_cast<std::size_t>(id));
}

void Population::append_generation(std::vector<Individual> members)
{
    const int g = n_generations();
    const int start = size();
    const int prev_begin = g > 0 ? generation_begin(g - 1) : 0;
    for (std::size_t k = 0; k < members.size(); ++k)
    {
        Individual& ind = members[k];
        if (ind.id != start + static_cast<int>(k) || ind.generation != g)
        {
            throw IntegrityError(fmt::format("individual {} out of order in generation {}", ind.id, g));
        }
        for (int parent : {ind.mother, ind.father})
        {
            if (parent == kNoParent)
            {
                continue;
            }
            if (g == 0 || parent < prev_begin || parent >= start)
            {
                throw IntegrityError(
                    fmt::format("individual {} has parent {} outside the previous generation", ind.id, parent));
            }
        }
    }
    generation_start_.push_back(start);
    children_.resize(static_cast<std::size_t>(start) + members.size());
    for (Individual& ind : members)
    {
        for (int parent : {ind.mother, ind.father})
        {
            if (parent != kNoParent)
            {
                children_[static_cast<std::size_t>(parent)].push_back(ind.id);
            }
        }
        individuals_.push_back(std::move(ind));
    }
}

bool related_within_three_generations(const Population& pop, int a, int b)
{
    if (a == b)
    {
        return true;
    }
    const Individual& x = pop.at(a);
    const Individual& y = pop.at(b);
    const std::array<int, 2> xp{x.mother, x.father};
    const std::array<int, 2> yp{y.mother, y.father};
    std::vector<int> x_grand;
    std::vector<int> y_grand;
    for (int p : xp)
    {
        if (p == kNoParent)
        {
            continue;
        }
        if (std::find(yp.begin(), yp.end(), p) != yp.end())
        {
            return true;
        }
        x_grand.push_back(pop.at(p).mother);
        x_grand.push_back(pop.at(p).father);
    }
    for (int p : yp)
    {
        if (p != kNoParent)
        {
            y_grand.push_back(pop.at(p).mother);
            y_grand.push_back(pop.at(p).father);
        }
    }
    for (int gx : x_grand)
    {
        if (gx != kNoParent && std::find(y_grand.begin(), y_grand.end(), gx) != y_grand.end())
        {
            return true;
        }
    }
    return false;
}

int count_mating_violations(const Population& pop)
{
    int violations = 0;
    for (const Individual& ind : pop.individuals())
    {
        if (ind.mother == kNoParent && ind.father == kNoParent)
        {
            continue;
        }
        if (!ind.has_parents())
        {
            ++violations;
            continue;
        }
        const Individual& mo = pop.at(ind.mother);
        const Individual& fa = pop.at(ind.father);
        const bool bad = mo.sex != kFemale || fa.sex != kMale || mo.generation != ind.generation - 1 ||
                         fa.generation != ind.generation - 1 ||
                         related_within_three_generations(pop, ind.mother, ind.father);
        violations += bad ? 1 : 0;
    }
    return violations;
}

// ---------------------------------------------------------------------------
// Simulation

Population generate_ancestry(const SimParams& params, int n)
{
    params.validate();
    if (n < 2)
    {
        throw ParameterError(fmt::format("ancestry generation needs at least 2 individuals, got {}", n));
    }
    std::vector<Individual> members(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
    {
        Rng rng(derive_seed(params.seed, kStageAncestry, 0, static_cast<std::uint64_t>(i)));
        Individual& ind = members[static_cast<std::size_t>(i)];
        ind.id = i;
        ind.generation = 0;
        const Basics b = draw_basics(rng);
        ind.sex = b.sex;
        ind.age = b.age;
        ind.l_herr = normal_draw(rng, params.h2);
        ind.epsilon = normal_draw(rng, params.e2);
        ind.l_total = total_liability(params, ind);
    }
    Population pop;
    pop.append_generation(std::move(members));
    return pop;
}

namespace
{

struct Couple
{
    int mother;
    int father;
};

// Up to kMatingAttempts random (female, male) draws; nullopt if none legal.
std::optional<Couple> draw_legal_pair(const Population& pop, const std::vector<int>& females,
                                      const std::vector<int>& males, Rng& rng)
{
    std::uniform_int_distribution<std::size_t> pick_f(0, females.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_m(0, males.size() - 1);
    for (int attempt = 0; attempt < kMatingAttempts; ++attempt)
    {
        const int mo = females[pick_f(rng)];
        const int fa = males[pick_m(rng)];
        if (!related_within_three_generations(pop, mo, fa))
        {
            return Couple{mo, fa};
        }
    }
    return std::nullopt;
}

std::vector<Couple> form_couples(const Population& pop, std::vector<int> females, std::vector<int> males,
                                 std::uint64_t seed, int generation)
{
    Rng rng(derive_seed(seed, kStageCouples, static_cast<std::uint64_t>(generation), 0));
    std::shuffle(females.begin(), females.end(), rng);
    std::shuffle(males.begin(), males.end(), rng);
    std::vector<Couple> couples;
    for (int mo : females)
    {
        for (int attempt = 0; attempt < kMatingAttempts && !males.empty(); ++attempt)
        {
            std::uniform_int_distribution<std::size_t> pick(0, males.size() - 1);
            const std::size_t k = pick(rng);
            if (!related_within_three_generations(pop, mo, males[k]))
            {
                couples.push_back({mo, males[k]});
                males[k] = males.back();
                males.pop_back();
                break;
            }
        }
    }
    return couples;
}

}  // namespace

void generate_generation(Population& pop, const SimParams& params, int n)
{
    params.validate();
    if (n < 1)
    {
        throw ParameterError(fmt::format("generation size must be >= 1, got {}", n));
    }
    const int g = pop.n_generations();
    if (g == 0)
    {
        throw SimulationError("cannot breed a generation without an ancestry population");
    }
    std::vector<int> females;
    std::vector<int> males;
    for (int id = pop.generation_begin(g - 1); id < pop.generation_end(g - 1); ++id)
    {
        (pop.at(id).sex == kFemale ? females : males).push_back(id);
    }
    if (females.empty() || males.empty())
    {
        throw SimulationError(
            fmt::format("generation {}: previous generation lacks an eligible female or male", g));
    }

    std::vector<Couple> couples;
    if (params.mating == MatingScheme::Couples)
    {
        couples = form_couples(pop, females, males, params.seed, g);
        if (couples.empty())
        {
            throw SimulationError(fmt::format("generation {}: no legal couple could be formed", g));
        }
    }

    const double c = stabilizer_constant(params.alpha1, params.alpha2, params.stabilizer);
    const int start = pop.size();
    std::vector<Individual> members(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
    {
        Rng rng(derive_seed(params.seed, kStageChild, static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(j)));
        std::optional<Couple> parents;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const bool fresh = params.mating == MatingScheme::PerChild || u(rng) < params.remate_probability;
        if (fresh)
        {
            parents = draw_legal_pair(pop, females, males, rng);
            if (!parents)
            {
                throw SimulationError(fmt::format(
                    "generation {}: no legal mating pair found for child {} after {} attempts", g, j, kMatingAttempts));
            }
        }
        else
        {
            std::uniform_int_distribution<std::size_t> pick(0, couples.size() - 1);
            parents = couples[pick(rng)];
        }

        Individual& ind = members[static_cast<std::size_t>(j)];
        ind.id = start + j;
        ind.generation = g;
        ind.mother = parents->mother;
        ind.father = parents->father;
        const Basics b = draw_basics(rng);
        ind.sex = b.sex;
        ind.age = b.age;
        ind.l_herr =
            c * (params.alpha1 * pop.at(ind.mother).l_herr + params.alpha2 * pop.at(ind.father).l_herr) + 0.0;
        ind.epsilon = normal_draw(rng, params.e2);
        ind.l_total = total_liability(params, ind);
    }
    pop.append_generation(std::move(members));
}

std::vector<int> threshold_cases(std::span<const double> standardized, double threshold)
{
    std::vector<int> out(standardized.size());
    std::transform(standardized.begin(), standardized.end(), out.begin(),
                   [threshold](double l) { return l >= threshold ? 1 : 0; });
    return out;
}

double liability_threshold(double prevalence)
{
    if (!(prevalence > 0.0 && prevalence < 1.0))
    {
        throw ParameterError(fmt::format("prevalence must lie in (0, 1), got {}", prevalence));
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), 1.0 - prevalence);
}

namespace
{

// Per-generation standardization of l_total into l_standardized.
void standardize(Population& pop)
{
    for (int g = 0; g < pop.n_generations(); ++g)
    {
        const int lo = pop.generation_begin(g);
        const int hi = pop.generation_end(g);
        const double n = hi - lo;
        double mean = 0.0;
        for (int id = lo; id < hi; ++id)
        {
            mean += pop.at(id).l_total;
        }
        mean /= n;
        double var = 0.0;
        for (int id = lo; id < hi; ++id)
        {
            const double d = pop.at(id).l_total - mean;
            var += d * d;
        }
        var /= n;
        if (!(var > 0.0))
        {
            throw SimulationError(fmt::format("generation {}: degenerate liability variance", g));
        }
        const double sd = std::sqrt(var);
        for (int id = lo; id < hi; ++id)
        {
            pop.at(id).l_standardized = (pop.at(id).l_total - mean) / sd;
        }
    }
}

}  // namespace

void assign_phenotypes(Population& pop, const SimParams& params)
{
    params.validate();
    standardize(pop);
    const double threshold = liability_threshold(params.prevalence);
    for (int id = 0; id < pop.size(); ++id)
    {
        Individual& ind = pop.at(id);
        ind.case_status = ind.l_standardized >= threshold ? 1 : 0;
        ind.onset_year.reset();
        if (ind.case_status == 1)
        {
            Rng rng(derive_seed(params.seed, kStagePhenotype, static_cast<std::uint64_t>(ind.generation),
                                static_cast<std::uint64_t>(id)));
            std::uniform_int_distribution<int> year(0, params.n_years - 1);
            ind.onset_year = year(rng);
        }
    }
}

Population simulate_population(const SimParams& params)
{
    params.validate();
    Population pop = generate_ancestry(params, params.gen_sizes.front());
    for (std::size_t g = 1; g < params.gen_sizes.size(); ++g)
    {
        generate_generation(pop, params, params.gen_sizes[g]);
    }
    assign_phenotypes(pop, params);
    return pop;
}

// ---------------------------------------------------------------------------
// Longitudinal tracks

FeatureTracks::FeatureTracks(int n_individuals, int n_features, int n_years)
    : n_individuals_(n_individuals),
      n_features_(n_features),
      n_years_(n_years),
      bits_(static_cast<std::size_t>(n_individuals) * n_features * n_years, 0)
{
}

std::uint8_t FeatureTracks::ever(int individual, int feature) const
{
    for (int t = 0; t < n_years_; ++t)
    {
        if (get(individual, feature, t) != 0)
        {
            return 1;
        }
    }
    return 0;
}

FeatureTracks synthesize_longitudinal(const Population& pop, const LongitudinalSpec& spec, std::uint64_t seed)
{
    if (spec.n_years < 1)
    {
        throw ParameterError(fmt::format("n_years must be >= 1, got {}", spec.n_years));
    }
    FeatureTracks tracks(pop.size(), spec.n_features(), spec.n_years);
    for (const Individual& ind : pop.individuals())
    {
        if (ind.onset_year)
        {
            for (int t = std::max(0, *ind.onset_year); t < spec.n_years; ++t)
            {
                tracks.set(ind.id, 0, t, 1);
            }
        }
        Rng rng(derive_seed(seed, kStageTracks, static_cast<std::uint64_t>(ind.generation),
                            static_cast<std::uint64_t>(ind.id)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t c = 0; c < spec.channels.size(); ++c)
        {
            const ChannelSpec& ch = spec.channels[c];
            const int f = static_cast<int>(c) + 1;
            switch (ch.kind)
            {
                case ChannelKind::Noise:
                    for (int t = 0; t < spec.n_years; ++t)
                    {
                        tracks.set(ind.id, f, t, u(rng) < ch.rate ? 1 : 0);
                    }
                    break;
                case ChannelKind::Liability:
                {
                    const double logit = std::log(ch.rate / (1.0 - ch.rate)) + ch.strength * ind.l_standardized;
                    const double p = 1.0 / (1.0 + std::exp(-logit));
                    for (int t = 0; t < spec.n_years; ++t)
                    {
                        tracks.set(ind.id, f, t, u(rng) < p ? 1 : 0);
                    }
                    break;
                }
                case ChannelKind::CopyMother:
                case ChannelKind::CopyFather:
                {
                    const int rel = ch.kind == ChannelKind::CopyMother ? ind.mother : ind.father;
                    const std::uint8_t v = rel != kNoParent ? static_cast<std::uint8_t>(pop.at(rel).case_status) : 0;
                    for (int t = 0; t < spec.n_years; ++t)
                    {
                        tracks.set(ind.id, f, t, v);
                    }
                    break;
                }
            }
        }
    }
    return tracks;
}

// ---------------------------------------------------------------------------
// Files

namespace
{

constexpr std::string_view kPedigreeVersion = "# famgnn-pedigree v1";
constexpr std::string_view kPedigreeHeader =
    "id,generation,mother_id,father_id,sex,age,l_herr,epsilon,l_total,case_status,onset_year";
constexpr std::string_view kTracksVersion = "# famgnn-longitudinal v1";
constexpr std::string_view kTracksHeader = "id,year,feature";

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
    {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',')
    {
        fields.emplace_back();
    }
    return fields;
}

int parse_int(const std::string& s, int line_no)
{
    try
    {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size())
        {
            throw std::invalid_argument(s);
        }
        return v;
    }
    catch (const std::exception&)
    {
        throw LoadError(fmt::format("line {}: expected integer, got '{}'", line_no, s));
    }
}

double parse_double(const std::string& s, int line_no)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
    {
        throw LoadError(fmt::format("line {}: expected number, got '{}'", line_no, s));
    }
    return v;
}

std::string optional_int(int v)
{
    return v == kNoParent ? std::string{} : std::to_string(v);
}

}  // namespace

void write_pedigree(std::ostream& out, const Population& pop)
{
    out << kPedigreeVersion << '\n' << kPedigreeHeader << '\n';
    for (const Individual& ind : pop.individuals())
    {
        fmt::print(out, "{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", ind.id, ind.generation,
                   optional_int(ind.mother), optional_int(ind.father), ind.sex, ind.age, ind.l_herr, ind.epsilon,
                   ind.l_total, ind.case_status, ind.onset_year ? std::to_string(*ind.onset_year) : std::string{});
    }
}

Population read_pedigree(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kPedigreeVersion)
    {
        throw LoadError(fmt::format("pedigree file: expected version line '{}'", kPedigreeVersion));
    }
    if (!std::getline(in, line) || line != kPedigreeHeader)
    {
        throw LoadError("pedigree file: unexpected header row");
    }
    std::vector<std::vector<Individual>> generations;
    int line_no = 2;
    int expected_id = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
        {
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 11)
        {
            throw LoadError(fmt::format("line {}: expected 11 columns, got {}", line_no, f.size()));
        }
        Individual ind;
        ind.id = parse_int(f[0], line_no);
        ind.generation = parse_int(f[1], line_no);
        ind.mother = f[2].empty() ? kNoParent : parse_int(f[2], line_no);
        ind.father = f[3].empty() ? kNoParent : parse_int(f[3], line_no);
        ind.sex = parse_int(f[4], line_no);
        ind.age = parse_double(f[5], line_no);
        ind.l_herr = parse_double(f[6], line_no);
        ind.epsilon = parse_double(f[7], line_no);
        ind.l_total = parse_double(f[8], line_no);
        ind.case_status = parse_int(f[9], line_no);
        if (!f[10].empty())
        {
            ind.onset_year = parse_int(f[10], line_no);
        }
        if (ind.id != expected_id++)
        {
            throw LoadError(fmt::format("line {}: ids must be consecutive from 0", line_no));
        }
        if (ind.generation == static_cast<int>(generations.size()))
        {
            generations.emplace_back();
        }
        else if (ind.generation != static_cast<int>(generations.size()) - 1)
        {
            throw LoadError(fmt::format("line {}: generations must be contiguous", line_no));
        }
        generations.back().push_back(std::move(ind));
    }
    Population pop;
    try
    {
        for (auto& g : generations)
        {
            pop.append_generation(std::move(g));
        }
    }
    catch (const IntegrityError& e)
    {
        throw LoadError(fmt::format("pedigree file: {}", e.what()));
    }
    if (pop.size() > 0)
    {
        standardize(pop);
    }
    return pop;
}

void write_longitudinal(std::ostream& out, const FeatureTracks& tracks)
{
    fmt::print(out, "{} n_individuals={} n_features={} n_years={}\n{}\n", kTracksVersion, tracks.n_individuals(),
               tracks.n_features(), tracks.n_years(), kTracksHeader);
    for (int i = 0; i < tracks.n_individuals(); ++i)
    {
        for (int t = 0; t < tracks.n_years(); ++t)
        {
            for (int f = 0; f < tracks.n_features(); ++f)
            {
                if (tracks.get(i, f, t) != 0)
                {
                    fmt::print(out, "{},{},{}\n", i, t, f);
                }
            }
        }
    }
}

FeatureTracks read_longitudinal(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind(kTracksVersion, 0) != 0)
    {
        throw LoadError(fmt::format("longitudinal file: expected version line '{}'", kTracksVersion));
    }
    int n = -1;
    int nf = -1;
    int nt = -1;
    if (std::sscanf(line.c_str() + kTracksVersion.size(), " n_individuals=%d n_features=%d n_years=%d", &n, &nf,
                    &nt) != 3 ||
        n < 0 || nf < 1 || nt < 1)
    {
        throw LoadError("longitudinal file: malformed dimensions on version line");
    }
    if (!std::getline(in, line) || line != kTracksHeader)
    {
        throw LoadError("longitudinal file: unexpected header row");
    }
    FeatureTracks tracks(n, nf, nt);
    int line_no = 2;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
        {
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 3)
        {
            throw LoadError(fmt::format("line {}: expected 3 columns", line_no));
        }
        const int id = parse_int(f[0], line_no);
        const int year = parse_int(f[1], line_no);
        const int feature = parse_int(f[2], line_no);
        if (id < 0 || id >= n || year < 0 || year >= nt || feature < 0 || feature >= nf)
        {
            throw LoadError(fmt::format("line {}: entry out of range", line_no));
        }
        tracks.set(id, feature, year, 1);
    }
    return tracks;
}

}  // namespace famgnn
