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


#include "config.h"

#include <charconv>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace famgnn::cli
{

namespace
{

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos)
    {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep = ',')
{
    std::vector<std::string> out;
    if (trim(s).empty())
    {
        return out;
    }
    std::size_t start = 0;
    while (true)
    {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
        {
            return out;
        }
        start = pos + 1;
    }
}

template <typename T>
T parse_number(std::string_view text, std::string_view what)
{
    const std::string s = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    {
        throw ConfigError(fmt::format("{}: '{}' is not a valid number", what, text));
    }
    return value;
}

bool parse_bool(std::string_view text, std::string_view what)
{
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes")
    {
        return true;
    }
    if (s == "false" || s == "0" || s == "no")
    {
        return false;
    }
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", what, text));
}

template <typename T>
std::vector<T> parse_numbers(std::string_view text, std::string_view what)
{
    std::vector<T> out;
    for (const std::string& item : split_list(text))
    {
        out.push_back(parse_number<T>(item, what));
    }
    return out;
}

template <typename T>
std::string join_numbers(const std::vector<T>& v)
{
    return fmt::format("{}", fmt::join(v, ","));
}

std::string_view stabilizer_name(StabilizerMode m)
{
    return m == StabilizerMode::PaperLiteral ? "paper_literal" : "variance_preserving";
}

StabilizerMode parse_stabilizer(std::string_view s)
{
    if (s == "paper_literal")
    {
        return StabilizerMode::PaperLiteral;
    }
    if (s == "variance_preserving")
    {
        return StabilizerMode::VariancePreserving;
    }
    throw ConfigError(fmt::format("unknown stabilizer '{}'", s));
}

std::string_view mating_name(MatingScheme m)
{
    return m == MatingScheme::PerChild ? "per_child" : "couples";
}

MatingScheme parse_mating(std::string_view s)
{
    if (s == "couples")
    {
        return MatingScheme::Couples;
    }
    if (s == "per_child")
    {
        return MatingScheme::PerChild;
    }
    throw ConfigError(fmt::format("unknown mating scheme '{}'", s));
}

constexpr std::array<std::pair<ChannelKind, std::string_view>, 4> kChannelNames{{
    {ChannelKind::Noise, "noise"},
    {ChannelKind::Liability, "liability"},
    {ChannelKind::CopyMother, "copy_mother"},
    {ChannelKind::CopyFather, "copy_father"},
}};

std::string format_channels(const std::vector<ChannelSpec>& channels)
{
    std::vector<std::string> items;
    for (const ChannelSpec& c : channels)
    {
        for (const auto& [kind, name] : kChannelNames)
        {
            if (kind == c.kind)
            {
                items.push_back(fmt::format("{}:{}:{}", name, c.rate, c.strength));
            }
        }
    }
    return fmt::format("{}", fmt::join(items, ","));
}

std::vector<ChannelSpec> parse_channels(std::string_view text)
{
    std::vector<ChannelSpec> out;
    for (const std::string& item : split_list(text))
    {
        const auto parts = split_list(item, ':');
        ChannelSpec c;
        bool known = false;
        for (const auto& [kind, name] : kChannelNames)
        {
            if (parts[0] == name)
            {
                c.kind = kind;
                known = true;
            }
        }
        if (!known || parts.size() > 3)
        {
            throw ConfigError(fmt::format("channel '{}': expected kind[:rate[:strength]] with kind one of "
                                          "noise, liability, copy_mother, copy_father",
                                          item));
        }
        if (parts.size() > 1)
        {
            c.rate = parse_number<double>(parts[1], "channel rate");
        }
        if (parts.size() > 2)
        {
            c.strength = parse_number<double>(parts[2], "channel strength");
        }
        out.push_back(c);
    }
    return out;
}

template <typename E>
std::string join_names(const std::vector<E>& values, std::string_view (*name)(E))
{
    std::vector<std::string_view> names;
    for (E v : values)
    {
        names.push_back(name(v));
    }
    return fmt::format("{}", fmt::join(names, ","));
}

template <typename E, typename Parse>
std::vector<E> parse_names(std::string_view text, Parse parse)
{
    std::vector<E> out;
    for (const std::string& item : split_list(text))
    {
        out.push_back(parse(item));
    }
    return out;
}

struct Entry
{
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define FAMGNN_NUMBER(SECTION, KEY, FIELD, TYPE)                                                          \
    Entry                                                                                                 \
    {                                                                                                     \
        SECTION, KEY, [](const ExperimentConfig& c) { return fmt::format("{}", c.FIELD); },               \
            [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_number<TYPE>(v, SECTION "." KEY); } \
    }

std::vector<Entry> build_registry()
{
    std::vector<Entry> r{
        FAMGNN_NUMBER("run", "seed", seed, std::uint64_t),

        FAMGNN_NUMBER("simulation", "h2", simulation.h2, double),
        Entry{"simulation", "e2",
              [](const ExperimentConfig& c) { return c.e2_auto ? std::string("auto") : fmt::format("{}", c.simulation.e2); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.e2_auto = trim(v) == "auto";
                  if (!c.e2_auto)
                  {
                      c.simulation.e2 = parse_number<double>(v, "simulation.e2");
                  }
              }},
        FAMGNN_NUMBER("simulation", "beta_age", simulation.beta_age, double),
        FAMGNN_NUMBER("simulation", "beta_sex", simulation.beta_sex, double),
        FAMGNN_NUMBER("simulation", "alpha1", simulation.alpha1, double),
        FAMGNN_NUMBER("simulation", "alpha2", simulation.alpha2, double),
        FAMGNN_NUMBER("simulation", "prevalence", simulation.prevalence, double),
        Entry{"simulation", "gen_sizes", [](const ExperimentConfig& c) { return join_numbers(c.simulation.gen_sizes); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.simulation.gen_sizes = parse_numbers<int>(v, "simulation.gen_sizes");
              }},
        Entry{"simulation", "stabilizer",
              [](const ExperimentConfig& c) { return std::string(stabilizer_name(c.simulation.stabilizer)); },
              [](ExperimentConfig& c, const std::string& v) { c.simulation.stabilizer = parse_stabilizer(trim(v)); }},
        Entry{"simulation", "mating",
              [](const ExperimentConfig& c) { return std::string(mating_name(c.simulation.mating)); },
              [](ExperimentConfig& c, const std::string& v) { c.simulation.mating = parse_mating(trim(v)); }},
        FAMGNN_NUMBER("simulation", "remate_probability", simulation.remate_probability, double),
        Entry{"simulation", "n_years", [](const ExperimentConfig& c) { return fmt::format("{}", c.simulation.n_years); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.simulation.n_years = parse_number<int>(v, "simulation.n_years");
                  c.longitudinal.n_years = c.simulation.n_years;
              }},
        Entry{"simulation", "channels", [](const ExperimentConfig& c) { return format_channels(c.longitudinal.channels); },
              [](ExperimentConfig& c, const std::string& v) { c.longitudinal.channels = parse_channels(v); }},

        Entry{"sweep", "h2", [](const ExperimentConfig& c) { return join_numbers(c.sweep_h2); },
              [](ExperimentConfig& c, const std::string& v) { c.sweep_h2 = parse_numbers<double>(v, "sweep.h2"); }},
        FAMGNN_NUMBER("sweep", "replicates", replicates, int),

        Entry{"data", "root", [](const ExperimentConfig& c) { return c.data_root; },
              [](ExperimentConfig& c, const std::string& v) { c.data_root = trim(v); }},

        FAMGNN_NUMBER("cohort", "target_generation", rules.target_generation, int),
        FAMGNN_NUMBER("cohort", "min_age", rules.min_age, double),
        FAMGNN_NUMBER("cohort", "max_age", rules.max_age, double),
        FAMGNN_NUMBER("cohort", "min_graph_size", rules.min_graph_size, int),
        FAMGNN_NUMBER("cohort", "cutoff_year", rules.cutoff_year, int),
        FAMGNN_NUMBER("cohort", "feature_threshold", rules.feature_threshold, double),
        Entry{"cohort", "edge_mode", [](const ExperimentConfig& c) { return std::string(edge_mode_name(c.edge_mode)); },
              [](ExperimentConfig& c, const std::string& v) { c.edge_mode = parse_edge_mode(trim(v)); }},

        Entry{"experiment", "models",
              [](const ExperimentConfig& c) {
                  if (c.models.empty())
                  {
                      return std::string("auto");
                  }
                  std::vector<std::string> labels;
                  for (const ModelChoice& m : c.models)
                  {
                      labels.push_back(m.label);
                  }
                  return fmt::format("{}", fmt::join(labels, ","));
              },
              [](ExperimentConfig& c, const std::string& v) {
                  c.models.clear();
                  if (trim(v) == "auto")
                  {
                      return;
                  }
                  for (const std::string& item : split_list(v))
                  {
                      const Architecture a = parse_architecture(item);
                      c.models.push_back({a, std::string(architecture_label(a))});
                  }
              }},
    };

    for (const auto& [key, value] : model_config_entries(ModelConfig{}))
    {
        if (key == "architecture" || key == "n_long_features" || key == "n_years")
        {
            continue;
        }
        const std::string k = key;
        r.push_back(Entry{"model", k,
                          [k](const ExperimentConfig& c) {
                              for (const auto& [kk, vv] : model_config_entries(c.model))
                              {
                                  if (kk == k)
                                  {
                                      return vv;
                                  }
                              }
                              return std::string();
                          },
                          [k](ExperimentConfig& c, const std::string& v) { apply_model_config_entry(c.model, k, trim(v)); }});
    }

    const std::vector<Entry> rest{
        FAMGNN_NUMBER("trainer", "learning_rate", train.learning_rate, double),
        FAMGNN_NUMBER("trainer", "beta1", train.beta1, double),
        FAMGNN_NUMBER("trainer", "beta2", train.beta2, double),
        FAMGNN_NUMBER("trainer", "batch_size", train.batch_size, int),
        FAMGNN_NUMBER("trainer", "max_epochs", train.max_epochs, int),
        FAMGNN_NUMBER("trainer", "patience", train.patience, int),

        FAMGNN_NUMBER("split", "train_fraction", split.train_fraction, double),
        FAMGNN_NUMBER("split", "val_fraction", split.val_fraction, double),
        FAMGNN_NUMBER("split", "test_fraction", split.test_fraction, double),
        FAMGNN_NUMBER("split", "train_case_ratio", split.train_case_ratio, double),

        FAMGNN_NUMBER("evaluation", "mc_samples", mc_samples, int),

        FAMGNN_NUMBER("design", "h2", design.h2, double),
        Entry{"design", "architecture",
              [](const ExperimentConfig& c) { return std::string(architecture_name(c.design.architecture)); },
              [](ExperimentConfig& c, const std::string& v) { c.design.architecture = parse_architecture(trim(v)); }},
        Entry{"design", "edge_modes", [](const ExperimentConfig& c) { return join_names(c.design.edge_modes, &edge_mode_name); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.design.edge_modes = parse_names<EdgeMode>(v, [](const std::string& s) { return parse_edge_mode(s); });
              }},
        Entry{"design", "convs", [](const ExperimentConfig& c) { return join_names(c.design.convs, &conv_kind_name); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.design.convs = parse_names<ConvKind>(v, [](const std::string& s) { return parse_conv_kind(s); });
              }},
        Entry{"design", "poolings", [](const ExperimentConfig& c) { return join_names(c.design.poolings, &pool_mode_name); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.design.poolings = parse_names<PoolMode>(v, [](const std::string& s) { return parse_pool_mode(s); });
              }},
        Entry{"design", "learning_rates", [](const ExperimentConfig& c) { return join_numbers(c.design.learning_rates); },
              [](ExperimentConfig& c, const std::string& v) {
                  c.design.learning_rates = parse_numbers<double>(v, "design.learning_rates");
              }},

        Entry{"explain", "optimizer",
              [](const ExperimentConfig& c) { return std::string(mask_optimizer_name(c.explain.explain.optimizer)); },
              [](ExperimentConfig& c, const std::string& v) { c.explain.explain.optimizer = parse_mask_optimizer(trim(v)); }},
        FAMGNN_NUMBER("explain", "steps", explain.explain.steps, int),
        FAMGNN_NUMBER("explain", "learning_rate", explain.explain.learning_rate, double),
        FAMGNN_NUMBER("explain", "size_penalty", explain.explain.size_penalty, double),
        FAMGNN_NUMBER("explain", "entropy_penalty", explain.explain.entropy_penalty, double),
        FAMGNN_NUMBER("explain", "n_explain", explain.n_explain, int),
        Entry{"explain", "n_top", [](const ExperimentConfig& c) { return join_numbers(c.explain.n_top); },
              [](ExperimentConfig& c, const std::string& v) { c.explain.n_top = parse_numbers<int>(v, "explain.n_top"); }},
        FAMGNN_NUMBER("explain", "l2", explain.l2, double),
        Entry{"explain", "dump_masks", [](const ExperimentConfig& c) { return std::string(c.explain.dump_masks ? "true" : "false"); },
              [](ExperimentConfig& c, const std::string& v) { c.explain.dump_masks = parse_bool(v, "explain.dump_masks"); }},
        Entry{"explain", "embeddings", [](const ExperimentConfig& c) { return std::string(c.explain.embeddings ? "true" : "false"); },
              [](ExperimentConfig& c, const std::string& v) { c.explain.embeddings = parse_bool(v, "explain.embeddings"); }},
    };
    r.insert(r.end(), rest.begin(), rest.end());
    return r;
}

#undef FAMGNN_NUMBER

const std::vector<Entry>& registry()
{
    static const std::vector<Entry> r = build_registry();
    return r;
}

// Written by the CLI into manifests; accepted and ignored on input.
bool is_manifest_key(const std::string& section, const std::string& key)
{
    return section == "manifest" && (key == "command" || key == "config_hash" || key == "version" || key == "models" ||
                                     key == "model");
}

void validate(const ExperimentConfig& c)
{
    SimParams probe = c.simulation;
    if (c.e2_auto)
    {
        probe.e2 = 1.0 - probe.h2;
    }
    probe.validate();
    for (double h : c.sweep_h2)
    {
        if (h < 0.0 || h > 1.0)
        {
            throw ConfigError(fmt::format("sweep.h2 value {} outside [0, 1]", h));
        }
    }
    if (c.replicates < 1)
    {
        throw ConfigError("sweep.replicates must be >= 1");
    }
    c.model.validate();
    c.train.validate();
    c.split.validate();
    if (c.mc_samples != 0 && c.mc_samples < 2)
    {
        throw ConfigError("evaluation.mc_samples must be 0 or >= 2");
    }
    if (c.design.edge_modes.empty() || c.design.convs.empty() || c.design.poolings.empty() ||
        c.design.learning_rates.empty())
    {
        throw ConfigError("every design grid axis needs at least one value");
    }
    c.explain.explain.validate();
    if (c.explain.n_explain < 1)
    {
        throw ConfigError("explain.n_explain must be >= 1");
    }
}

}  // namespace

std::vector<double> ExperimentConfig::heritabilities() const
{
    return sweep_h2.empty() ? std::vector<double>{simulation.h2} : sweep_h2;
}

SimParams ExperimentConfig::dataset_params(double h2, int replicate) const
{
    SimParams p = simulation;
    p.h2 = h2;
    if (e2_auto)
    {
        p.e2 = 1.0 - h2;
    }
    p.n_years = longitudinal.n_years;
    p.seed = seed + static_cast<std::uint64_t>(replicate);
    return p;
}

std::vector<ModelChoice> ExperimentConfig::resolve_models(bool has_channels) const
{
    if (!models.empty())
    {
        return models;
    }
    std::vector<ModelChoice> out;
    for (Architecture a : {Architecture::RuleBased, Architecture::MlpAgeSex, Architecture::MlpFamilyHistory,
                           Architecture::GnnStatic, Architecture::GnnLstm})
    {
        if (a != Architecture::GnnLstm || has_channels)
        {
            out.push_back({a, std::string(architecture_label(a))});
        }
    }
    return out;
}

ExperimentConfig default_config()
{
    ExperimentConfig c;
    c.simulation.e2 = 1.0 - c.simulation.h2;
    c.model.conv = ConvKind::Kgnn;
    c.model.kgnn_edge_scaling = true;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    boost::property_tree::ptree tree;
    try
    {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    }
    catch (const boost::property_tree::ini_parser_error& e)
    {
        throw ConfigError(fmt::format("{}:{}: {}", e.filename(), e.line(), e.message()));
    }
    ExperimentConfig c = default_config();
    for (const auto& [section, body] : tree)
    {
        if (body.empty() && !body.data().empty())
        {
            throw ConfigError(fmt::format("{}: key '{}' outside any section", path.string(), section));
        }
        for (const auto& [key, value] : body)
        {
            if (is_manifest_key(section, key))
            {
                continue;
            }
            const auto& r = registry();
            const auto it = std::find_if(r.begin(), r.end(),
                                         [&](const Entry& e) { return e.section == section && e.key == key; });
            if (it == r.end())
            {
                throw ConfigError(fmt::format("{}: unknown key [{}] {}", path.string(), section, key));
            }
            try
            {
                it->set(c, value.data());
            }
            catch (const std::invalid_argument& e)
            {
                throw ConfigError(fmt::format("{}: [{}] {}: {}", path.string(), section, key, e.what()));
            }
        }
    }
    try
    {
        validate(c);
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return c;
}

std::string canonical_text(const ExperimentConfig& config)
{
    std::ostringstream out;
    std::string section;
    for (const Entry& e : registry())
    {
        if (e.section != section)
        {
            out << (section.empty() ? "" : "\n") << '[' << e.section << "]\n";
            section = e.section;
        }
        out << e.key << " = " << e.get(config) << '\n';
    }
    return out.str();
}

std::string config_hash(const ExperimentConfig& config)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical_text(config))
    {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace famgnn::cli
