#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaboost/corpus.hpp"
#include "gaboost/csv.hpp"
#include "gaboost/eval.hpp"
#include "gaboost/gbt.hpp"
#include "gaboost/parallel.hpp"
#include "gaboost/rng.hpp"
#include "gaboost/sparse.hpp"

namespace gaboost::ga {

inline constexpr int kBoosterGenes = 7;

// Tuning range per booster gene, in chromosome order: learning_rate,
// n_estimators, max_depth, min_child_weight, gamma, subsample,
// colsample_bytree.
struct GeneRange {
    double lo;
    double hi;
    bool integral;
};

inline constexpr std::array<GeneRange, kBoosterGenes> kGeneRanges = {{
    {0.01, 1.0, false},
    {10.0, 1500.0, true},
    {1.0, 10.0, true},
    {0.01, 10.0, false},
    {0.01, 10.0, false},
    {0.01, 1.0, false},
    {0.01, 1.0, false},
}};

inline constexpr std::array<const char*, kBoosterGenes> kGeneNames = {
    "learning_rate", "n_estimators", "max_depth", "min_child_weight",
    "gamma",         "subsample",    "colsample_bytree"};

struct GaConfig {
    double feature_percent = 10.0;  // F: percent of the feature space per chromosome
    int population_size = 100;      // P
    int crossover_count = 60;       // C: parents selected for mating
    int generations = 50;           // G
    std::uint64_t master_seed = 0;
    double split_fraction = 0.30;   // held-out test share for fitness
    std::uint64_t booster_seed = 723;
    double lambda = 1.0;

    static GaConfig with_ratio(double f, int p, double crossover_ratio, int g) {
        GaConfig c;
        c.feature_percent = f;
        c.population_size = p;
        c.crossover_count = static_cast<int>(std::llround(crossover_ratio * p));
        c.generations = g;
        return c;
    }

    int feature_gene_count(std::int32_t vocab_size) const {
        return static_cast<int>(std::llround(feature_percent / 100.0 * vocab_size));
    }

    void validate(std::int32_t vocab_size) const {
        if (!(feature_percent > 0.0) || feature_percent > 100.0)
            throw std::invalid_argument("F must be in (0, 100]");
        if (population_size < 1) throw std::invalid_argument("P must be >= 1");
        if (crossover_count < 1 || crossover_count > population_size)
            throw std::invalid_argument("C must satisfy 1 <= C <= P");
        if (generations < 1) throw std::invalid_argument("G must be >= 1");
        if (!(split_fraction > 0.0) || !(split_fraction < 1.0))
            throw std::invalid_argument("split fraction must be in (0, 1)");
        const int k = feature_gene_count(vocab_size);
        if (k < 1) throw std::invalid_argument("derived feature gene count is zero; raise F");
        if (k > vocab_size) throw std::invalid_argument("feature gene count exceeds the feature space");
    }
};

inline std::string experiment_id(const GaConfig& c) {
    std::ostringstream out;
    out << 'F' << fmt_g(c.feature_percent, 6) << "-P" << c.population_size << "-C" << c.crossover_count
        << "-G" << c.generations;
    return out.str();
}

// Seven booster genes followed by a duplicate-free list of feature indices.
struct Chromosome {
    std::array<double, kBoosterGenes> booster_genes{};
    std::vector<std::int32_t> feature_genes;

    gbt::BoosterParams to_params(std::uint64_t seed, double lambda) const {
        gbt::BoosterParams p;
        p.learning_rate = booster_genes[0];
        p.n_estimators = static_cast<int>(std::llround(booster_genes[1]));
        p.max_depth = static_cast<int>(std::llround(booster_genes[2]));
        p.min_child_weight = booster_genes[3];
        p.gamma = booster_genes[4];
        p.subsample = booster_genes[5];
        p.colsample_bytree = booster_genes[6];
        p.seed = seed;
        p.lambda = lambda;
        return p;
    }

    std::vector<std::int32_t> sorted_features() const {
        std::vector<std::int32_t> s = feature_genes;
        std::sort(s.begin(), s.end());
        return s;
    }
};

struct FitnessRecord {
    Chromosome chromosome;
    double fitness = 0.0;
    int generation = 0;
};

struct GenerationStats {
    double best = 0.0;
    double mean = 0.0;
};

struct ExperimentRecord {
    std::string experiment_id;
    GaConfig config;
    std::vector<GenerationStats> trace;  // index 0 = initial population
    Chromosome best_chromosome;
    double best_fitness = 0.0;
    std::int64_t evaluations = 0;
    std::int64_t degenerate_evaluations = 0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

inline std::vector<Chromosome> init_population(const GaConfig& config, std::int32_t vocab_size, Rng& rng) {
    config.validate(vocab_size);
    const int k = config.feature_gene_count(vocab_size);
    std::vector<Chromosome> population;
    population.reserve(static_cast<std::size_t>(config.population_size));
    for (int i = 0; i < config.population_size; ++i) {
        Chromosome c;
        c.booster_genes[0] = rng.uniform(0.01, 1.0);
        c.booster_genes[1] = static_cast<double>(10 + 25 * rng.uniform_int(0, 59));  // randrange(10,1500,25)
        c.booster_genes[2] = static_cast<double>(rng.uniform_int(1, 10));
        c.booster_genes[3] = rng.uniform(0.01, 10.0);
        c.booster_genes[4] = rng.uniform(0.01, 10.0);
        c.booster_genes[5] = rng.uniform(0.01, 1.0);
        c.booster_genes[6] = rng.uniform(0.01, 1.0);
        c.feature_genes = rng.sample_without_replacement(vocab_size, k);
        population.push_back(std::move(c));
    }
    return population;
}

// Indices of the C highest-fitness chromosomes; ties resolve to the lower
// population index.
inline std::vector<std::size_t> select_parent_indices(std::span<const double> fitnesses, int count) {
    if (count < 0 || static_cast<std::size_t>(count) > fitnesses.size())
        throw std::invalid_argument("select_parents: C exceeds population size");
    std::vector<std::size_t> order(fitnesses.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitnesses[a] > fitnesses[b]; });
    order.resize(static_cast<std::size_t>(count));
    return order;
}

inline std::vector<Chromosome> select_parents(std::span<const Chromosome> population,
                                              std::span<const double> fitnesses, int count) {
    std::vector<Chromosome> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::size_t idx : select_parent_indices(fitnesses, count)) out.push_back(population[idx]);
    return out;
}

namespace detail {

inline std::int32_t draw_feature_outside(const std::unordered_set<std::int32_t>& taken,
                                         std::int32_t vocab_size, Rng& rng) {
    // Rejection sampling is cheap while the chromosome covers a minority of
    // the space; otherwise enumerate the complement.
    if (static_cast<std::int32_t>(taken.size()) * 2 < vocab_size) {
        while (true) {
            const auto f = static_cast<std::int32_t>(rng.uniform_int(0, vocab_size - 1));
            if (!taken.contains(f)) return f;
        }
    }
    std::vector<std::int32_t> complement;
    complement.reserve(static_cast<std::size_t>(vocab_size) - taken.size());
    for (std::int32_t f = 0; f < vocab_size; ++f)
        if (!taken.contains(f)) complement.push_back(f);
    return complement[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(complement.size()) - 1))];
}

}  // namespace detail

// Uniform crossover of one parent pair. Booster genes: 4 or 3 positions come
// from parent A, the rest from B. Feature genes: the first ceil(k/2) genes of
// A, then B's first floor(k/2) genes skipping duplicates, topped up with
// fresh draws from the full feature space when overlap leaves the child
// short. The child always carries exactly k distinct features.
inline Chromosome crossover_pair(const Chromosome& a, const Chromosome& b, std::int32_t vocab_size,
                                 Rng& rng) {
    Chromosome child;

    const int from_a = rng.uniform_int(0, 1) == 0 ? kBoosterGenes / 2 : (kBoosterGenes + 1) / 2;
    std::vector<int> positions(kBoosterGenes);
    for (int i = 0; i < kBoosterGenes; ++i) positions[static_cast<std::size_t>(i)] = i;
    rng.shuffle(positions);
    std::array<bool, kBoosterGenes> take_a{};
    for (int i = 0; i < from_a; ++i) take_a[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])] = true;
    for (int g = 0; g < kBoosterGenes; ++g)
        child.booster_genes[static_cast<std::size_t>(g)] =
            take_a[static_cast<std::size_t>(g)] ? a.booster_genes[static_cast<std::size_t>(g)]
                                                : b.booster_genes[static_cast<std::size_t>(g)];

    const auto k = static_cast<std::size_t>(a.feature_genes.size());
    const std::size_t half_a = (k + 1) / 2;
    std::unordered_set<std::int32_t> taken;
    child.feature_genes.reserve(k);
    for (std::size_t i = 0; i < half_a && child.feature_genes.size() < k; ++i) {
        if (taken.insert(a.feature_genes[i]).second) child.feature_genes.push_back(a.feature_genes[i]);
    }
    for (std::size_t i = 0; i < k - half_a && child.feature_genes.size() < k && i < b.feature_genes.size(); ++i) {
        if (taken.insert(b.feature_genes[i]).second) child.feature_genes.push_back(b.feature_genes[i]);
    }
    while (child.feature_genes.size() < k) {
        const std::int32_t f = detail::draw_feature_outside(taken, vocab_size, rng);
        taken.insert(f);
        child.feature_genes.push_back(f);
    }
    return child;
}

// Children are produced from sequential parent pairs with wraparound:
// child i mates parents[i % C] and parents[(i+1) % C].
inline std::vector<Chromosome> crossover(std::span<const Chromosome> parents, int children_needed,
                                         std::int32_t vocab_size, Rng& rng) {
    if (parents.empty()) throw std::invalid_argument("crossover: no parents");
    std::vector<Chromosome> children;
    children.reserve(static_cast<std::size_t>(children_needed));
    for (int i = 0; i < children_needed; ++i) {
        const auto& a = parents[static_cast<std::size_t>(i) % parents.size()];
        const auto& b = parents[(static_cast<std::size_t>(i) + 1) % parents.size()];
        children.push_back(crossover_pair(a, b, vocab_size, rng));
    }
    return children;
}

// One uniformly chosen booster gene gets an additive delta within +-10% of
// its range width (integer genes rounded), clamped to range; one uniformly
// chosen feature gene is replaced with an index not already present. The
// feature mutation is skipped when the chromosome already holds every
// feature.
inline void mutate_one(Chromosome& c, std::int32_t vocab_size, Rng& rng) {
    const auto g = static_cast<std::size_t>(rng.uniform_int(0, kBoosterGenes - 1));
    const GeneRange& range = kGeneRanges[g];
    const double width = range.hi - range.lo;
    double value = c.booster_genes[g] + rng.uniform(-0.1 * width, 0.1 * width);
    if (range.integral) value = static_cast<double>(std::llround(value));
    c.booster_genes[g] = std::clamp(value, range.lo, range.hi);

    if (static_cast<std::int32_t>(c.feature_genes.size()) >= vocab_size) return;
    const auto pos = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(c.feature_genes.size()) - 1));
    std::unordered_set<std::int32_t> taken(c.feature_genes.begin(), c.feature_genes.end());
    c.feature_genes[pos] = detail::draw_feature_outside(taken, vocab_size, rng);
}

inline void mutate(std::span<Chromosome> children, std::int32_t vocab_size, Rng& rng) {
    for (auto& c : children) mutate_one(c, vocab_size, rng);
}

// Stratified train/test row split used once per GA run.
struct TrainTestSplit {
    SparseMatrix train_x;
    SparseMatrix test_x;
    std::vector<int> train_y;
    std::vector<int> test_y;
};

inline TrainTestSplit stratified_split(const SparseMatrix& matrix, std::span<const int> labels,
                                       double test_fraction, std::uint64_t seed) {
    std::vector<std::vector<std::int32_t>> by_class(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("stratified_split: labels must be 0 or 1");
        by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::int32_t>(i));
    }
    std::vector<std::int32_t> test_ids, train_ids;
    for (int c = 0; c < 2; ++c) {
        auto& ids = by_class[static_cast<std::size_t>(c)];
        Rng rng(derive_seed(seed, "ga-split-class", static_cast<std::uint64_t>(c)));
        rng.shuffle(ids);
        const auto take = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(ids.size())));
        for (std::size_t i = 0; i < ids.size(); ++i)
            (i < take ? test_ids : train_ids).push_back(ids[i]);
    }
    std::sort(test_ids.begin(), test_ids.end());
    std::sort(train_ids.begin(), train_ids.end());

    TrainTestSplit split;
    split.train_x = matrix.slice_rows(train_ids);
    split.test_x = matrix.slice_rows(test_ids);
    for (auto id : train_ids) split.train_y.push_back(labels[static_cast<std::size_t>(id)]);
    for (auto id : test_ids) split.test_y.push_back(labels[static_cast<std::size_t>(id)]);
    return split;
}

// GMean of the booster trained on the chromosome's features and parameters,
// measured on the held-out split. Untrainable chromosomes score 0 instead of
// aborting the run.
inline double fitness(const Chromosome& chromosome, const TrainTestSplit& split, std::uint64_t booster_seed,
                      double lambda, bool* degenerate = nullptr) {
    try {
        const std::vector<std::int32_t> features = chromosome.sorted_features();
        const SparseMatrix train_x = split.train_x.slice_columns(features);
        const SparseMatrix test_x = split.test_x.slice_columns(features);
        const gbt::GbtModel model = gbt::fit(train_x, split.train_y, chromosome.to_params(booster_seed, lambda));
        const std::vector<int> pred = gbt::predict_label(model, test_x);
        const eval::MetricsReport m = eval::metrics(eval::confusion(split.test_y, pred));
        if (degenerate && m.degenerate) *degenerate = true;
        return m.gmean;
    } catch (const std::exception&) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
}

using GenerationCallback = std::function<void(std::span<const GenerationStats>)>;

// One full GA run: evaluate the initial population, then per generation keep
// the C fittest as parents, breed P-C children by crossover + mutation, and
// carry parents with their cached fitness into the next population. Parent
// fitness is never recomputed, so each chromosome is evaluated exactly once.
// `on_generation` sees the trace so far after every generation, letting the
// caller flush partial results.
inline ExperimentRecord run(const corpus::LabeledDataset& dataset, const GaConfig& config, int threads = 1,
                            const GenerationCallback& on_generation = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::int32_t vocab_size = dataset.features();
    config.validate(vocab_size);

    const TrainTestSplit split = stratified_split(dataset.matrix, dataset.labels, config.split_fraction,
                                                  derive_seed(config.master_seed, "ga-split"));

    ExperimentRecord record;
    record.experiment_id = experiment_id(config);
    record.config = config;
    record.seed = config.master_seed;

    auto evaluate = [&](std::span<const Chromosome> group, std::vector<double>& out) {
        out.resize(group.size());
        std::vector<char> degenerate(group.size(), 0);
        parallel_for(group.size(), threads, [&](std::size_t i) {
            bool flag = false;
            out[i] = fitness(group[i], split, config.booster_seed, config.lambda, &flag);
            degenerate[i] = flag ? 1 : 0;
        });
        record.evaluations += static_cast<std::int64_t>(group.size());
        for (char d : degenerate) record.degenerate_evaluations += d;
    };

    Rng init_rng(derive_seed(config.master_seed, "ga-init"));
    std::vector<Chromosome> population = init_population(config, vocab_size, init_rng);
    std::vector<double> fitnesses;
    evaluate(population, fitnesses);

    auto record_generation = [&] {
        GenerationStats stats;
        double sum = 0.0;
        for (std::size_t i = 0; i < fitnesses.size(); ++i) {
            sum += fitnesses[i];
            if (fitnesses[i] > stats.best) stats.best = fitnesses[i];
        }
        stats.mean = sum / static_cast<double>(fitnesses.size());
        record.trace.push_back(stats);
        if (on_generation) on_generation(record.trace);
    };
    record_generation();

    for (int gen = 1; gen <= config.generations; ++gen) {
        const std::vector<std::size_t> parent_idx = select_parent_indices(fitnesses, config.crossover_count);
        std::vector<Chromosome> parents;
        std::vector<double> parent_fit;
        parents.reserve(parent_idx.size());
        parent_fit.reserve(parent_idx.size());
        for (std::size_t idx : parent_idx) {
            parents.push_back(std::move(population[idx]));
            parent_fit.push_back(fitnesses[idx]);
        }

        Rng ops_rng(derive_seed(config.master_seed, "ga-ops", static_cast<std::uint64_t>(gen)));
        std::vector<Chromosome> children =
            crossover(parents, config.population_size - config.crossover_count, vocab_size, ops_rng);
        mutate(children, vocab_size, ops_rng);

        std::vector<double> child_fit;
        evaluate(children, child_fit);

        population = std::move(parents);
        fitnesses = std::move(parent_fit);
        for (std::size_t i = 0; i < children.size(); ++i) {
            population.push_back(std::move(children[i]));
            fitnesses.push_back(child_fit[i]);
        }
        record_generation();
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < fitnesses.size(); ++i)
        if (fitnesses[i] > fitnesses[best]) best = i;
    record.best_chromosome = population[best];
    record.best_fitness = fitnesses[best];
    record.wall_seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

struct SweepEntry {
    GaConfig config;
    std::optional<ExperimentRecord> record;
    std::string error;
};

// Each configuration runs independently with its own seed derived from its
// position; a failing configuration is recorded and the sweep continues.
inline std::vector<SweepEntry> sensitivity_sweep(const corpus::LabeledDataset& dataset,
                                                 std::span<const GaConfig> grid, std::uint64_t base_seed,
                                                 int threads = 1) {
    std::vector<SweepEntry> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        SweepEntry entry;
        entry.config = grid[i];
        entry.config.master_seed = derive_seed(base_seed, "ga-sweep", i);
        try {
            entry.record = run(dataset, entry.config, threads);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

struct FeatureFrequencyRow {
    std::string term;
    std::int32_t feature = 0;
    int count = 0;
    std::vector<bool> present;  // aligned with the record order
};

// How often each feature appears in the best chromosomes of the given
// experiments; sorted by count descending, then feature index ascending.
inline std::vector<FeatureFrequencyRow> feature_frequency(std::span<const ExperimentRecord> records,
                                                          const corpus::Vocabulary& vocab) {
    if (records.empty()) throw std::invalid_argument("feature_frequency: no records");
    std::unordered_map<std::int32_t, std::vector<bool>> presence;
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::int32_t f : records[r].best_chromosome.feature_genes) {
            auto& flags = presence.try_emplace(f, std::vector<bool>(records.size(), false)).first->second;
            flags[r] = true;
        }
    }
    std::vector<FeatureFrequencyRow> rows;
    rows.reserve(presence.size());
    for (auto& [feature, flags] : presence) {
        FeatureFrequencyRow row;
        row.feature = feature;
        row.present = flags;
        row.count = static_cast<int>(std::count(flags.begin(), flags.end(), true));
        row.term = feature >= 0 && feature < vocab.size() ? vocab.terms[static_cast<std::size_t>(feature)]
                                                          : std::string("?");
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const FeatureFrequencyRow& a, const FeatureFrequencyRow& b) {
        return a.count != b.count ? a.count > b.count : a.feature < b.feature;
    });
    return rows;
}

// generation,best_fitness,mean_fitness
inline std::string format_fitness_curve_csv(const ExperimentRecord& record) {
    std::ostringstream out;
    out << "generation,best_fitness,mean_fitness\n";
    for (std::size_t g = 0; g < record.trace.size(); ++g)
        out << g << ',' << fmt_g(record.trace[g].best, 10) << ',' << fmt_g(record.trace[g].mean, 10) << '\n';
    return out.str();
}

// expid,fitness rows with fitness as a percentage
inline std::string format_experiment_csv(std::span<const SweepEntry> entries) {
    std::ostringstream out;
    out << "expid,fitness\n";
    for (const auto& e : entries) {
        out << experiment_id(e.config) << ',';
        if (e.record) out << fmt_f(e.record->best_fitness * 100.0, 2);
        else out << "error";
        out << '\n';
    }
    return out.str();
}

// FeatureText,FNo,Freq + one TRUE/FALSE column per experiment
inline std::string format_feature_frequency_csv(std::span<const FeatureFrequencyRow> rows,
                                                std::span<const std::string> experiment_ids) {
    std::ostringstream out;
    out << "FeatureText,FNo,Freq";
    for (const auto& id : experiment_ids) out << ',' << csv_escape(id);
    out << '\n';
    for (const auto& row : rows) {
        out << csv_escape(row.term) << ',' << row.feature << ',' << row.count;
        for (bool p : row.present) out << ',' << (p ? "TRUE" : "FALSE");
        out << '\n';
    }
    return out.str();
}

// Booster params by name, sorted feature indices, resolved term strings.
inline nlohmann::json chromosome_to_json(const Chromosome& chromosome, const corpus::Vocabulary& vocab,
                                         double fitness_value, const std::string& expid) {
    nlohmann::json params;
    for (int g = 0; g < kBoosterGenes; ++g) {
        const GeneRange& range = kGeneRanges[static_cast<std::size_t>(g)];
        if (range.integral)
            params[kGeneNames[static_cast<std::size_t>(g)]] =
                static_cast<std::int64_t>(std::llround(chromosome.booster_genes[static_cast<std::size_t>(g)]));
        else
            params[kGeneNames[static_cast<std::size_t>(g)]] = chromosome.booster_genes[static_cast<std::size_t>(g)];
    }
    const auto features = chromosome.sorted_features();
    std::vector<std::string> terms;
    terms.reserve(features.size());
    for (std::int32_t f : features)
        terms.push_back(f >= 0 && f < vocab.size() ? vocab.terms[static_cast<std::size_t>(f)] : "?");
    return nlohmann::json{{"experiment_id", expid},
                          {"fitness", fitness_value},
                          {"params", std::move(params)},
                          {"features", features},
                          {"terms", std::move(terms)}};
}

struct LoadedChromosome {
    Chromosome chromosome;
    double fitness = 0.0;
    std::string experiment_id;
};

inline LoadedChromosome chromosome_from_json(const nlohmann::json& j) {
    LoadedChromosome out;
    const auto& params = j.at("params");
    for (int g = 0; g < kBoosterGenes; ++g)
        out.chromosome.booster_genes[static_cast<std::size_t>(g)] =
            params.at(kGeneNames[static_cast<std::size_t>(g)]).get<double>();
    out.chromosome.feature_genes = j.at("features").get<std::vector<std::int32_t>>();
    if (j.contains("fitness")) out.fitness = j.at("fitness").get<double>();
    if (j.contains("experiment_id")) out.experiment_id = j.at("experiment_id").get<std::string>();
    return out;
}

}  // namespace gaboost::ga
