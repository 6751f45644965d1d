#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gaboost/cli.hpp"
#include "support/synth.hpp"

namespace fs = std::filesystem;
namespace cli = gaboost::cli;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& child = "") const {
        return child.empty() ? path.string() : (path / child).string();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_corpus(const TempDir& dir, std::int32_t rows, std::uint64_t seed) {
    const auto path = dir.str("corpus.csv");
    gaboost::write_text_file(path, synth::text_corpus_csv(rows, seed));
    return path;
}

}  // namespace

TEST_CASE("vectorize writes re-parseable artifacts and is idempotent") {
    TempDir dir("gaboost_cli_vectorize");
    const auto csv = write_corpus(dir, 80, 5);

    cli::VectorizeOptions options;
    options.corpus.data_path = csv;
    options.out_dir = dir.str("out");
    REQUIRE(cli::cmd_vectorize(options) == 0);

    REQUIRE(fs::exists(dir.str("out/matrix.txt")));
    REQUIRE(fs::exists(dir.str("out/vocab.tsv")));
    REQUIRE(fs::exists(dir.str("out/labels.txt")));
    REQUIRE(fs::exists(dir.str("out/meta.json")));

    const auto matrix_a = slurp(dir.str("out/matrix.txt"));
    const auto vocab_a = slurp(dir.str("out/vocab.tsv"));
    std::istringstream header(matrix_a);
    int rows = 0, cols = 0;
    header >> rows >> cols;
    CHECK(rows == 80);
    CHECK(cols > 0);

    const auto vocab = cli::detail::read_vocab_tsv(dir.str("out/vocab.tsv"));
    CHECK(vocab.size() == cols);

    REQUIRE(cli::cmd_vectorize(options) == 0);
    CHECK(slurp(dir.str("out/matrix.txt")) == matrix_a);
    CHECK(slurp(dir.str("out/vocab.tsv")) == vocab_a);

    cli::VectorizeOptions empty = options;
    empty.corpus.data_path = dir.str("missing.csv");
    CHECK_THROWS(cli::cmd_vectorize(empty));

    gaboost::write_text_file(dir.str("empty.csv"), "text,label\n");
    cli::VectorizeOptions no_rows = options;
    no_rows.corpus.data_path = dir.str("empty.csv");
    CHECK_THROWS(cli::cmd_vectorize(no_rows));
}

TEST_CASE("optimize then validate produce consistent artifacts") {
    TempDir dir("gaboost_cli_optimize");
    const auto csv = write_corpus(dir, 120, 9);

    cli::OptimizeOptions optimize;
    optimize.corpus.data_path = csv;
    optimize.feature_percent = 30;
    optimize.population = 8;
    optimize.crossover_count = 5;
    optimize.generations = 3;
    optimize.seed = 41;
    optimize.threads = 2;
    optimize.out_dir = dir.str("opt");
    REQUIRE(cli::cmd_optimize(optimize) == 0);

    REQUIRE(fs::exists(dir.str("opt/fitness_curve.csv")));
    REQUIRE(fs::exists(dir.str("opt/best_chromosome.json")));
    REQUIRE(fs::exists(dir.str("opt/experiments.csv")));
    const auto curve = slurp(dir.str("opt/fitness_curve.csv"));
    CHECK(curve.rfind("generation,best_fitness,mean_fitness\n", 0) == 0);
    // header + initial population + G generations
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 1 + 1 + 3);
    const auto experiments = slurp(dir.str("opt/experiments.csv"));
    CHECK(experiments.find("F30-P8-C5-G3,") != std::string::npos);

    cli::ValidateOptions validate;
    validate.corpus.data_path = csv;
    validate.chromosome_path = dir.str("opt/best_chromosome.json");
    validate.repeats = 2;
    validate.folds = 3;
    validate.seed = 7;
    validate.threads = 2;
    validate.out_dir = dir.str("val");
    REQUIRE(cli::cmd_validate(validate) == 0);

    const auto folds = slurp(dir.str("val/folds.csv"));
    CHECK(std::count(folds.begin(), folds.end(), '\n') == 1 + 2 * 3);
    REQUIRE(fs::exists(dir.str("val/summary.csv")));

    // The per-fold file is re-parseable by the compare/report readers.
    const auto series = cli::detail::read_run_csv(dir.str("val/folds.csv"));
    CHECK(series.gmean.size() == 6);
}

TEST_CASE("optimize rejects invalid crossover configurations") {
    TempDir dir("gaboost_cli_badcfg");
    const auto csv = write_corpus(dir, 40, 3);
    cli::OptimizeOptions optimize;
    optimize.corpus.data_path = csv;
    optimize.population = 10;
    optimize.crossover_count = 11;  // C > P
    optimize.generations = 2;
    optimize.out_dir = dir.str("opt");
    CHECK_THROWS(cli::cmd_optimize(optimize));
}

TEST_CASE("sweep emits one row per configuration") {
    TempDir dir("gaboost_cli_sweep");
    const auto csv = write_corpus(dir, 70, 21);

    cli::OptimizeOptions optimize;
    optimize.corpus.data_path = csv;
    optimize.feature_percent = 20;
    optimize.population = 6;
    optimize.generations = 2;
    optimize.seed = 5;
    optimize.threads = 2;
    optimize.sweep = "crossover=0.3:0.9:0.3";
    optimize.out_dir = dir.str("sweep");
    REQUIRE(cli::cmd_optimize(optimize) == 0);

    const auto experiments = slurp(dir.str("sweep/experiments.csv"));
    CHECK(std::count(experiments.begin(), experiments.end(), '\n') == 1 + 3);
    CHECK(experiments.find("F20-P6-C2-G2,") != std::string::npos);
    REQUIRE(fs::exists(dir.str("sweep/fitness_curve_F20-P6-C2-G2.csv")));
}

TEST_CASE("compare writes the stats matrices and the chi2 arm") {
    TempDir dir("gaboost_cli_compare");
    const auto csv = write_corpus(dir, 90, 33);

    // Three per-fold run files: two distinct, one identical copy of the first.
    auto make_run = [&](const std::string& name, double base) {
        std::ostringstream out;
        out << "repeat,fold,accuracy,gmean,auc,tpr,tnr,ppv,fpr,f1,npv\n";
        for (int f = 0; f < 6; ++f) {
            const double g = base + 0.01 * f;
            out << "0," << f << ",0.9," << g << ",0.9,0.8,0.9,0.8,0.1,0.8,0.9\n";
        }
        const auto path = dir.str(name);
        gaboost::write_text_file(path, out.str());
        return path;
    };
    const auto run_a = make_run("runA.csv", 0.70);
    const auto run_b = make_run("runB.csv", 0.80);
    const auto run_c = dir.str("runC.csv");
    gaboost::write_text_file(run_c, slurp(run_a));

    cli::CompareOptions compare;
    compare.run_csvs = {run_a, run_b, run_c};
    compare.corpus.data_path = csv;
    compare.chi2_k = 10;
    compare.repeats = 1;
    compare.folds = 6;
    compare.seed = 3;
    compare.threads = 2;
    compare.out_dir = dir.str("cmp");
    REQUIRE(cli::cmd_compare(compare) == 0);

    const auto wilcoxon = slurp(dir.str("cmp/wilcoxon_matrix.csv"));
    CHECK(wilcoxon.find("NA") != std::string::npos);  // runC vs runA: all differences zero
    CHECK(wilcoxon.rfind("run,runA,runB,runC\n", 0) == 0);
    REQUIRE(fs::exists(dir.str("cmp/kruskal.csv")));
    const auto kruskal = slurp(dir.str("cmp/kruskal.csv"));
    CHECK(kruskal.rfind("group_list,p_value\n", 0) == 0);
    REQUIRE(fs::exists(dir.str("cmp/chi2_folds.csv")));
    REQUIRE(fs::exists(dir.str("cmp/chi2_summary.csv")));
    REQUIRE(fs::exists(dir.str("cmp/chi2_selection.tsv")));

    // Mismatched fold counts are rejected.
    std::ostringstream out;
    out << "repeat,fold,accuracy,gmean,auc,tpr,tnr,ppv,fpr,f1,npv\n0,0,0.9,0.8,0.9,0.8,0.9,0.8,0.1,0.8,0.9\n";
    gaboost::write_text_file(dir.str("short.csv"), out.str());
    cli::CompareOptions bad;
    bad.run_csvs = {run_a, dir.str("short.csv")};
    bad.out_dir = dir.str("cmp2");
    CHECK_THROWS(cli::cmd_compare(bad));
}

TEST_CASE("compare runs a pca arm") {
    TempDir dir("gaboost_cli_pca");
    const auto csv = write_corpus(dir, 60, 12);
    cli::CompareOptions compare;
    compare.corpus.data_path = csv;
    compare.pca_components = "1:2";
    compare.repeats = 1;
    compare.folds = 3;
    compare.seed = 9;
    compare.threads = 2;
    compare.out_dir = dir.str("cmp");
    REQUIRE(cli::cmd_compare(compare) == 0);
    const auto sweep = slurp(dir.str("cmp/pca_sweep.csv"));
    CHECK(sweep.rfind("k,accuracy,sd\n", 0) == 0);
    CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 1 + 2);
}

TEST_CASE("report produces descriptive statistics and feature frequencies") {
    TempDir dir("gaboost_cli_report");
    const auto csv = write_corpus(dir, 100, 44);

    cli::VectorizeOptions vectorize;
    vectorize.corpus.data_path = csv;
    vectorize.out_dir = dir.str("vec");
    REQUIRE(cli::cmd_vectorize(vectorize) == 0);

    cli::OptimizeOptions optimize;
    optimize.corpus.data_path = csv;
    optimize.feature_percent = 25;
    optimize.population = 6;
    optimize.crossover_count = 4;
    optimize.generations = 2;
    optimize.seed = 77;
    optimize.out_dir = dir.str("opt");
    REQUIRE(cli::cmd_optimize(optimize) == 0);

    cli::ValidateOptions validate;
    validate.corpus.data_path = csv;
    validate.chromosome_path = dir.str("opt/best_chromosome.json");
    validate.repeats = 1;
    validate.folds = 4;
    validate.out_dir = dir.str("val");
    REQUIRE(cli::cmd_validate(validate) == 0);

    cli::ReportOptions report;
    report.run_csvs = {dir.str("val/folds.csv")};
    report.chromosome_paths = {dir.str("opt/best_chromosome.json")};
    report.vocab_path = dir.str("vec/vocab.tsv");
    report.out_dir = dir.str("rep");
    REQUIRE(cli::cmd_report(report) == 0);

    const auto desc = slurp(dir.str("rep/descriptive_stats.csv"));
    CHECK(desc.rfind("run,mean,sd,min,q25,median,q75,max\n", 0) == 0);
    const auto freq = slurp(dir.str("rep/feature_frequency.csv"));
    CHECK(freq.rfind("FeatureText,FNo,Freq,", 0) == 0);

    CHECK_THROWS(cli::cmd_report(cli::ReportOptions{}));
}

TEST_CASE("config file values apply beneath flags") {
    TempDir dir("gaboost_cli_config");
    const auto csv = write_corpus(dir, 50, 2);
    const auto config_path = dir.str("config.json");
    gaboost::write_text_file(config_path,
                             nlohmann::json{{"data", csv}, {"P", 6}, {"G", 2}, {"F", 25.0}, {"C", 4}}.dump());

    cli::OptimizeOptions options;
    cli::apply_config_file(config_path, [&](const nlohmann::json& j) { cli::apply_optimize_config(j, options); });
    CHECK(options.corpus.data_path == csv);
    CHECK(options.population == 6);
    CHECK(options.generations == 2);
    CHECK(options.feature_percent == 25.0);
    CHECK(options.crossover_count == 4);

    gaboost::write_text_file(dir.str("bad.json"), "[1,2,3]");
    CHECK_THROWS(cli::apply_config_file(dir.str("bad.json"), [](const nlohmann::json&) {}));
}
