#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaboost/baselines.hpp"
#include "gaboost/corpus.hpp"
#include "gaboost/csv.hpp"
#include "gaboost/eval.hpp"
#include "gaboost/ga.hpp"
#include "gaboost/stats.hpp"

namespace gaboost::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutDirEnvVar = "GABOOST_OUT";

inline std::string default_out_dir() {
    if (const char* env = std::getenv(kOutDirEnvVar); env && *env) return env;
    return "gaboost-out";
}

// Wall-clock timestamps live only in this sidecar log so every other
// artifact is byte-identical across reruns.
class RunLog {
public:
    explicit RunLog(const fs::path& dir) : out_(dir / "run.log", std::ios::app) {}

    void line(const std::string& message) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
        out_ << stamp << " " << message << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

struct CorpusOptions {
    std::string data_path;
    std::string text_column = "text";
    std::string label_column = "label";
    std::string negative_label = "Ham";
    std::string positive_label = "Spam";
    std::string encoding = "iso-8859-1";  // or "utf-8"; tokenization is byte-identical
    std::string idf = "smooth";           // or "plain"

    corpus::IdfVariant idf_variant() const {
        if (idf == "smooth") return corpus::IdfVariant::Smooth;
        if (idf == "plain") return corpus::IdfVariant::Plain;
        throw std::invalid_argument("--idf must be 'smooth' or 'plain'");
    }

    corpus::Encoding encoding_kind() const {
        if (encoding == "iso-8859-1" || encoding == "latin1") return corpus::Encoding::Latin1;
        if (encoding == "utf-8" || encoding == "utf8") return corpus::Encoding::Utf8;
        throw std::invalid_argument("--encoding must be 'iso-8859-1' or 'utf-8'");
    }
};

inline corpus::LabeledDataset load_dataset(const CorpusOptions& options) {
    if (options.data_path.empty()) throw std::invalid_argument("no input corpus given (--data)");
    options.encoding_kind();
    const auto docs = corpus::load_csv(options.data_path, options.text_column, options.label_column,
                                       options.negative_label, options.positive_label);
    if (docs.empty()) throw std::runtime_error("dataset '" + options.data_path + "' has no rows");
    return corpus::build_dataset(docs, options.positive_label, options.idf_variant());
}

inline void apply_config_file(const std::string& path, const std::function<void(const nlohmann::json&)>& apply) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    in >> j;
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
    apply(j);
}

template <typename T>
void config_get(const nlohmann::json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

inline void apply_corpus_config(const nlohmann::json& j, CorpusOptions& c) {
    config_get(j, "data", c.data_path);
    config_get(j, "text-col", c.text_column);
    config_get(j, "label-col", c.label_column);
    config_get(j, "negative", c.negative_label);
    config_get(j, "positive", c.positive_label);
    config_get(j, "encoding", c.encoding);
    config_get(j, "idf", c.idf);
}

// ---------------------------------------------------------------- vectorize

struct VectorizeOptions {
    CorpusOptions corpus;
    std::string out_dir = default_out_dir();
};

inline void apply_vectorize_config(const nlohmann::json& j, VectorizeOptions& o) {
    apply_corpus_config(j, o.corpus);
    config_get(j, "out", o.out_dir);
}

inline int cmd_vectorize(const VectorizeOptions& options) {
    const auto ds = load_dataset(options.corpus);
    fs::create_directories(options.out_dir);
    const fs::path out(options.out_dir);

    write_text_file((out / "matrix.txt").string(), corpus::format_matrix_dump(ds.matrix));
    write_text_file((out / "vocab.tsv").string(), corpus::format_vocab_tsv(ds.vocabulary));
    {
        std::ostringstream labels;
        for (int y : ds.labels) labels << y << '\n';
        write_text_file((out / "labels.txt").string(), labels.str());
    }
    nlohmann::json meta{{"rows", ds.rows()},
                        {"features", ds.features()},
                        {"positive_fraction", ds.positive_fraction()},
                        {"positive_label", ds.positive_label_name},
                        {"negative_label", options.corpus.negative_label},
                        {"text_column", options.corpus.text_column},
                        {"label_column", options.corpus.label_column},
                        {"idf", options.corpus.idf},
                        {"encoding", options.corpus.encoding}};
    write_text_file((out / "meta.json").string(), meta.dump(2) + "\n");

    RunLog log(out);
    log.line("vectorize " + options.corpus.data_path);
    std::cout << "rows=" << ds.rows() << " features=" << ds.features() << " positive="
              << fmt_f(ds.positive_fraction() * 100.0, 1) << "%\n";
    return 0;
}

// ----------------------------------------------------------------- optimize

struct OptimizeOptions {
    CorpusOptions corpus;
    double feature_percent = 10.0;
    int population = 100;
    int crossover_count = 0;        // derived from crossover_ratio when 0
    double crossover_ratio = 0.6;
    int generations = 50;
    double split_fraction = 0.30;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string sweep;              // "crossover=LO:HI:STEP" or "F=a,b,c"
    std::string out_dir = default_out_dir();

    ga::GaConfig ga_config() const {
        ga::GaConfig c;
        c.feature_percent = feature_percent;
        c.population_size = population;
        c.crossover_count = crossover_count > 0
                                ? crossover_count
                                : static_cast<int>(std::llround(crossover_ratio * population));
        c.generations = generations;
        c.split_fraction = split_fraction;
        c.master_seed = seed;
        return c;
    }
};

inline void apply_optimize_config(const nlohmann::json& j, OptimizeOptions& o) {
    apply_corpus_config(j, o.corpus);
    config_get(j, "F", o.feature_percent);
    config_get(j, "P", o.population);
    config_get(j, "C", o.crossover_count);
    config_get(j, "crossover-ratio", o.crossover_ratio);
    config_get(j, "G", o.generations);
    config_get(j, "split-fraction", o.split_fraction);
    config_get(j, "seed", o.seed);
    config_get(j, "threads", o.threads);
    config_get(j, "out", o.out_dir);
}

namespace detail {

inline std::vector<ga::GaConfig> parse_sweep(const std::string& spec, const ga::GaConfig& base) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--sweep expects key=values");
    const std::string key = spec.substr(0, eq);
    const std::string rest = spec.substr(eq + 1);
    std::vector<ga::GaConfig> grid;
    if (key == "crossover") {
        double lo = 0, hi = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(rest);
        if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw std::invalid_argument("--sweep crossover expects LO:HI:STEP");
        for (double r = lo; r <= hi + 1e-9; r += step) {
            ga::GaConfig c = base;
            c.crossover_count = std::max(1, static_cast<int>(std::llround(r * base.population_size)));
            grid.push_back(c);
        }
    } else if (key == "F") {
        std::istringstream in(rest);
        std::string item;
        while (std::getline(in, item, ',')) {
            ga::GaConfig c = base;
            c.feature_percent = std::stod(item);
            grid.push_back(c);
        }
    } else {
        throw std::invalid_argument("--sweep key must be 'crossover' or 'F'");
    }
    return grid;
}

inline std::string run_name(const std::string& path) {
    return fs::path(path).stem().string();
}

}  // namespace detail

inline int cmd_optimize(const OptimizeOptions& options) {
    const auto ds = load_dataset(options.corpus);
    fs::create_directories(options.out_dir);
    const fs::path out(options.out_dir);
    RunLog log(out);

    if (!options.sweep.empty()) {
        const auto grid = detail::parse_sweep(options.sweep, options.ga_config());
        log.line("sweep start: " + options.sweep + " (" + std::to_string(grid.size()) + " configs)");
        const auto entries = ga::sensitivity_sweep(ds, grid, options.seed, options.threads);
        for (const auto& entry : entries) {
            const std::string id = ga::experiment_id(entry.config);
            if (entry.record) {
                write_text_file((out / ("fitness_curve_" + id + ".csv")).string(),
                                ga::format_fitness_curve_csv(*entry.record));
                write_text_file((out / ("best_chromosome_" + id + ".json")).string(),
                                ga::chromosome_to_json(entry.record->best_chromosome, ds.vocabulary,
                                                       entry.record->best_fitness, id)
                                        .dump(2) +
                                    "\n");
                log.line("sweep " + id + " fitness=" + fmt_f(entry.record->best_fitness, 6) +
                         " wall_s=" + fmt_f(entry.record->wall_seconds, 2));
            } else {
                log.line("sweep " + id + " failed: " + entry.error);
            }
        }
        write_text_file((out / "experiments.csv").string(), ga::format_experiment_csv(entries));
        std::cout << "sweep finished: " << entries.size() << " configurations\n";
        return 0;
    }

    const ga::GaConfig config = options.ga_config();
    config.validate(ds.features());
    const std::string id = ga::experiment_id(config);
    log.line("optimize " + id + " start");

    const auto curve_path = (out / "fitness_curve.csv").string();
    auto flush_partial = [&](std::span<const ga::GenerationStats> trace) {
        ga::ExperimentRecord partial;
        partial.trace.assign(trace.begin(), trace.end());
        write_text_file(curve_path, ga::format_fitness_curve_csv(partial));
    };
    const auto record = ga::run(ds, config, options.threads, flush_partial);

    write_text_file(curve_path, ga::format_fitness_curve_csv(record));
    write_text_file((out / "best_chromosome.json").string(),
                    ga::chromosome_to_json(record.best_chromosome, ds.vocabulary, record.best_fitness, id)
                            .dump(2) +
                        "\n");
    {
        ga::SweepEntry entry;
        entry.config = config;
        entry.record = record;
        write_text_file((out / "experiments.csv").string(),
                        ga::format_experiment_csv(std::vector<ga::SweepEntry>{entry}));
    }
    log.line("optimize " + id + " done: fitness=" + fmt_f(record.best_fitness, 6) +
             " evaluations=" + std::to_string(record.evaluations) +
             " degenerate=" + std::to_string(record.degenerate_evaluations) +
             " wall_s=" + fmt_f(record.wall_seconds, 2));
    std::cout << id << " best_fitness=" << fmt_f(record.best_fitness * 100.0, 2) << "%\n";
    return 0;
}

// ----------------------------------------------------------------- validate

struct ValidateOptions {
    CorpusOptions corpus;
    std::string chromosome_path;
    int repeats = 50;
    int folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = default_out_dir();
};

inline void apply_validate_config(const nlohmann::json& j, ValidateOptions& o) {
    apply_corpus_config(j, o.corpus);
    config_get(j, "chromosome", o.chromosome_path);
    config_get(j, "repeats", o.repeats);
    config_get(j, "folds", o.folds);
    config_get(j, "seed", o.seed);
    config_get(j, "threads", o.threads);
    config_get(j, "out", o.out_dir);
}

inline int cmd_validate(const ValidateOptions& options) {
    if (options.chromosome_path.empty())
        throw std::invalid_argument("no chromosome file given (--chromosome)");
    const auto ds = load_dataset(options.corpus);

    std::ifstream in(options.chromosome_path);
    if (!in) throw std::runtime_error("cannot open chromosome file '" + options.chromosome_path + "'");
    nlohmann::json j;
    in >> j;
    const auto loaded = ga::chromosome_from_json(j);

    for (std::int32_t f : loaded.chromosome.feature_genes)
        if (f < 0 || f >= ds.features())
            throw std::out_of_range("chromosome feature index " + std::to_string(f) +
                                    " is out of range for this matrix (features=" +
                                    std::to_string(ds.features()) + ")");

    const auto params = loaded.chromosome.to_params(723, 1.0);
    const auto summary = eval::repeated_cv(ds.matrix, ds.labels, params, loaded.chromosome.feature_genes,
                                           options.repeats, options.folds, options.seed, options.threads);

    fs::create_directories(options.out_dir);
    const fs::path out(options.out_dir);
    write_text_file((out / "folds.csv").string(), eval::format_fold_csv(summary));
    write_text_file((out / "summary.csv").string(), eval::format_summary_csv(summary));

    RunLog log(out);
    log.line("validate " + options.chromosome_path + ": " + std::to_string(summary.records.size()) +
             " fold records");
    for (const auto& w : summary.warnings) log.line("warning: " + w);

    const auto agg = summary.aggregate();
    std::cout << "folds=" << summary.records.size() << " gmean_avg=" << fmt_f(agg[1].avg * 100.0, 2)
              << "% accuracy_avg=" << fmt_f(agg[0].avg * 100.0, 2) << "%\n";
    return 0;
}

// ------------------------------------------------------------------ compare

struct CompareOptions {
    std::vector<std::string> run_csvs;
    CorpusOptions corpus;          // needed only for the baseline arms
    int chi2_k = 0;                // 0 = no chi-square arm
    std::string pca_components;    // "LO:HI" or single k; empty = no PCA arm
    int repeats = 50;
    int folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = default_out_dir();
};

inline void apply_compare_config(const nlohmann::json& j, CompareOptions& o) {
    apply_corpus_config(j, o.corpus);
    config_get(j, "run", o.run_csvs);
    config_get(j, "chi2-k", o.chi2_k);
    config_get(j, "pca-components", o.pca_components);
    config_get(j, "repeats", o.repeats);
    config_get(j, "folds", o.folds);
    config_get(j, "seed", o.seed);
    config_get(j, "threads", o.threads);
    config_get(j, "out", o.out_dir);
}

namespace detail {

struct RunSeries {
    std::string name;
    std::vector<double> gmean;
};

inline RunSeries read_run_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::size_t col = table.column("gmean");
    RunSeries series;
    series.name = run_name(path);
    series.gmean.reserve(table.rows.size());
    for (const auto& row : table.rows) series.gmean.push_back(std::stod(row[col]));
    if (series.gmean.empty()) throw std::runtime_error("run file '" + path + "' has no fold rows");
    return series;
}

inline std::string p_cell(double p) {
    if (p < 1e-5) return "<1e-05";
    return fmt_f(p, 5);
}

// Lower-triangle matrix: row i holds p(run_i, run_j) for j < i. Pairs whose
// differences are all zero print NA.
inline std::string format_wilcoxon_matrix(const std::vector<RunSeries>& runs) {
    std::ostringstream out;
    out << "run";
    for (std::size_t j = 0; j + 1 < runs.size(); ++j) out << ',' << csv_escape(runs[j].name);
    out << '\n';
    for (std::size_t i = 1; i < runs.size(); ++i) {
        out << csv_escape(runs[i].name);
        for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
            out << ',';
            if (j >= i) continue;
            try {
                const auto r = stats::wilcoxon_signed_rank(runs[i].gmean, runs[j].gmean);
                out << p_cell(r.p_value);
            } catch (const std::exception&) {
                out << "NA";
            }
        }
        out << '\n';
    }
    return out.str();
}

// All combinations of three or more runs, sorted by descending p.
inline std::string format_kruskal_csv(const std::vector<RunSeries>& runs) {
    if (runs.size() > 16) throw std::invalid_argument("combination enumeration supports at most 16 runs");
    struct Row {
        std::string group_list;
        double p;
    };
    std::vector<Row> rows;
    const std::uint32_t total = 1u << runs.size();
    for (std::uint32_t mask = 0; mask < total; ++mask) {
        if (std::popcount(mask) < 3) continue;
        std::vector<std::vector<double>> groups;
        std::string names;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (mask & (1u << i)) {
                groups.push_back(runs[i].gmean);
                if (!names.empty()) names += ", ";
                names += runs[i].name;
            }
        }
        const auto r = stats::kruskal_wallis(groups);
        rows.push_back({names, r.p_value});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.p > b.p; });
    std::ostringstream out;
    out << "group_list,p_value\n";
    for (const auto& row : rows) out << csv_escape(row.group_list) << ',' << p_cell(row.p) << '\n';
    return out.str();
}

inline std::pair<std::int32_t, std::int32_t> parse_k_range(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        const int k = std::stoi(spec);
        return {k, k};
    }
    return {std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1))};
}

}  // namespace detail

inline int cmd_compare(const CompareOptions& options) {
    fs::create_directories(options.out_dir);
    const fs::path out(options.out_dir);
    RunLog log(out);

    std::vector<detail::RunSeries> runs;
    for (const auto& path : options.run_csvs) runs.push_back(detail::read_run_csv(path));

    std::optional<corpus::LabeledDataset> ds;
    auto dataset = [&]() -> const corpus::LabeledDataset& {
        if (!ds) ds = load_dataset(options.corpus);
        return *ds;
    };

    if (options.chi2_k > 0) {
        const auto& d = dataset();
        const auto scores = baselines::chi2_scores(d.matrix, d.labels);
        const auto selected = baselines::chi2_select(scores, options.chi2_k);
        write_text_file((out / "chi2_selection.tsv").string(),
                        baselines::format_chi2_tsv(scores, d.vocabulary.terms));
        const auto summary =
            eval::repeated_cv(d.matrix, d.labels, baselines::default_baseline_params(), selected,
                              options.repeats, options.folds, options.seed, options.threads);
        write_text_file((out / "chi2_folds.csv").string(), eval::format_fold_csv(summary));
        write_text_file((out / "chi2_summary.csv").string(), eval::format_summary_csv(summary));
        detail::RunSeries arm;
        arm.name = "chi2";
        for (const auto& rec : summary.records) arm.gmean.push_back(rec.report.gmean);
        runs.push_back(std::move(arm));
        log.line("chi2 arm: top " + std::to_string(options.chi2_k) + " features");
    }

    if (!options.pca_components.empty()) {
        const auto [lo, hi] = detail::parse_k_range(options.pca_components);
        if (lo < 1 || hi < lo) throw std::invalid_argument("--pca-components expects LO:HI with 1 <= LO <= HI");
        std::vector<std::int32_t> ks;
        for (std::int32_t k = lo; k <= hi; ++k) ks.push_back(k);
        const auto& d = dataset();
        const auto table = baselines::pca_sweep(d.matrix, d.labels, ks, options.repeats, options.folds,
                                                options.seed, options.threads);
        write_text_file((out / "pca_sweep.csv").string(), baselines::format_pca_sweep_csv(table));
        log.line("pca arm: components " + options.pca_components);
    }

    if (runs.size() >= 2) {
        for (std::size_t i = 1; i < runs.size(); ++i)
            if (runs[i].gmean.size() != runs[0].gmean.size())
                throw std::runtime_error("run '" + runs[i].name + "' has " +
                                         std::to_string(runs[i].gmean.size()) + " folds but '" +
                                         runs[0].name + "' has " + std::to_string(runs[0].gmean.size()) +
                                         "; paired tests need matching folds");
        write_text_file((out / "wilcoxon_matrix.csv").string(), detail::format_wilcoxon_matrix(runs));
        if (runs.size() >= 3)
            write_text_file((out / "kruskal.csv").string(), detail::format_kruskal_csv(runs));
    } else if (options.chi2_k == 0 && options.pca_components.empty()) {
        throw std::invalid_argument("compare needs at least two --run files or a baseline arm");
    }

    log.line("compare finished over " + std::to_string(runs.size()) + " runs");
    std::cout << "compared " << runs.size() << " runs\n";
    return 0;
}

// ------------------------------------------------------------------- report

struct ReportOptions {
    std::vector<std::string> run_csvs;
    std::vector<std::string> chromosome_paths;
    std::string vocab_path;
    std::string out_dir = default_out_dir();
};

inline void apply_report_config(const nlohmann::json& j, ReportOptions& o) {
    config_get(j, "run", o.run_csvs);
    config_get(j, "chromosome", o.chromosome_paths);
    config_get(j, "vocab", o.vocab_path);
    config_get(j, "out", o.out_dir);
}

namespace detail {

inline corpus::Vocabulary read_vocab_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab file '" + path + "'");
    corpus::Vocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw std::runtime_error("malformed vocab line: " + line);
        const auto index = static_cast<std::int32_t>(std::stol(line.substr(0, t1)));
        const std::string term = line.substr(t1 + 1, t2 - t1 - 1);
        if (index != vocab.size()) throw std::runtime_error("vocab indices must be dense and ordered");
        vocab.index.emplace(term, index);
        vocab.terms.push_back(term);
        vocab.doc_freq.push_back(std::stol(line.substr(t2 + 1)));
    }
    return vocab;
}

}  // namespace detail

inline int cmd_report(const ReportOptions& options) {
    if (options.run_csvs.empty() && options.chromosome_paths.empty())
        throw std::invalid_argument("report needs --run files and/or --chromosome files");
    fs::create_directories(options.out_dir);
    const fs::path out(options.out_dir);
    RunLog log(out);

    if (!options.run_csvs.empty()) {
        std::ostringstream csv;
        csv << "run,mean,sd,min,q25,median,q75,max\n";
        for (const auto& path : options.run_csvs) {
            const auto series = detail::read_run_csv(path);
            const auto d = eval::describe(series.gmean);
            csv << csv_escape(series.name) << ',' << fmt_f(d.mean * 100.0, 2) << ',' << fmt_f(d.sd, 3) << ','
                << fmt_f(d.min * 100.0, 2) << ',' << fmt_f(d.q25 * 100.0, 2) << ','
                << fmt_f(d.median * 100.0, 2) << ',' << fmt_f(d.q75 * 100.0, 2) << ','
                << fmt_f(d.max * 100.0, 2) << '\n';
        }
        write_text_file((out / "descriptive_stats.csv").string(), csv.str());
        log.line("descriptive stats over " + std::to_string(options.run_csvs.size()) + " runs");
    }

    if (!options.chromosome_paths.empty()) {
        if (options.vocab_path.empty())
            throw std::invalid_argument("feature frequency table needs --vocab vocab.tsv");
        const auto vocab = detail::read_vocab_tsv(options.vocab_path);
        std::vector<ga::ExperimentRecord> records;
        std::vector<std::string> ids;
        for (const auto& path : options.chromosome_paths) {
            std::ifstream in(path);
            if (!in) throw std::runtime_error("cannot open chromosome file '" + path + "'");
            nlohmann::json j;
            in >> j;
            const auto loaded = ga::chromosome_from_json(j);
            ga::ExperimentRecord record;
            record.experiment_id = loaded.experiment_id.empty() ? detail::run_name(path) : loaded.experiment_id;
            record.best_chromosome = loaded.chromosome;
            record.best_fitness = loaded.fitness;
            ids.push_back(record.experiment_id);
            records.push_back(std::move(record));
        }
        const auto rows = ga::feature_frequency(records, vocab);
        write_text_file((out / "feature_frequency.csv").string(),
                        ga::format_feature_frequency_csv(rows, ids));
        log.line("feature frequency over " + std::to_string(records.size()) + " chromosomes");
    }
    std::cout << "report written to " << options.out_dir << "\n";
    return 0;
}

}  // namespace gaboost::cli
