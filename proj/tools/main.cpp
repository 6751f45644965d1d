#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaboost/cli.hpp"

namespace cli = gaboost::cli;

namespace {

// Flags beat config-file values beat defaults: the JSON file (when given) is
// applied to the option structs before CLI11 parses the command line.
std::string config_path_from_argv(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") return argv[i + 1];
    return {};
}

void add_corpus_flags(CLI::App* cmd, cli::CorpusOptions& corpus) {
    cmd->add_option("--data", corpus.data_path, "labeled CSV corpus");
    cmd->add_option("--text-col", corpus.text_column, "text column name");
    cmd->add_option("--label-col", corpus.label_column, "label column name");
    cmd->add_option("--positive", corpus.positive_label, "positive class label");
    cmd->add_option("--negative", corpus.negative_label, "negative class label");
    cmd->add_option("--encoding", corpus.encoding, "iso-8859-1 or utf-8");
    cmd->add_option("--idf", corpus.idf, "idf variant: smooth or plain");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"genetic feature selection and boosting hyperparameter search for labeled text"};
    app.require_subcommand(1);

    cli::VectorizeOptions vectorize;
    cli::OptimizeOptions optimize;
    cli::ValidateOptions validate;
    cli::CompareOptions compare;
    cli::ReportOptions report;

    try {
        cli::apply_config_file(config_path_from_argv(argc, argv), [&](const nlohmann::json& j) {
            cli::apply_vectorize_config(j, vectorize);
            cli::apply_optimize_config(j, optimize);
            cli::apply_validate_config(j, validate);
            cli::apply_compare_config(j, compare);
            cli::apply_report_config(j, report);
        });
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::string config_file;  // consumed above; registered so parsing accepts it

    auto* cmd_vec = app.add_subcommand("vectorize", "build the TF-IDF matrix and vocabulary");
    add_corpus_flags(cmd_vec, vectorize.corpus);
    cmd_vec->add_option("--out", vectorize.out_dir, "output directory");
    cmd_vec->add_option("--config", config_file, "JSON config file");

    auto* cmd_opt = app.add_subcommand("optimize", "run the genetic search");
    add_corpus_flags(cmd_opt, optimize.corpus);
    cmd_opt->add_option("--F", optimize.feature_percent, "percent of features per chromosome");
    cmd_opt->add_option("--P", optimize.population, "population size");
    cmd_opt->add_option("--C", optimize.crossover_count, "parents selected for crossover");
    cmd_opt->add_option("--crossover-ratio", optimize.crossover_ratio, "C = round(ratio * P)")
        ->check(CLI::Range(0.0, 1.0));
    cmd_opt->add_option("--G", optimize.generations, "generations");
    cmd_opt->add_option("--split-fraction", optimize.split_fraction, "held-out share for fitness");
    cmd_opt->add_option("--seed", optimize.seed, "master seed");
    cmd_opt->add_option("--threads", optimize.threads, "worker threads");
    cmd_opt->add_option("--sweep", optimize.sweep, "sweep spec: crossover=LO:HI:STEP or F=a,b,c");
    cmd_opt->add_option("--out", optimize.out_dir, "output directory");
    cmd_opt->add_option("--config", config_file, "JSON config file");

    auto* cmd_val = app.add_subcommand("validate", "repeated stratified cross-validation of a chromosome");
    add_corpus_flags(cmd_val, validate.corpus);
    cmd_val->add_option("--chromosome", validate.chromosome_path, "best_chromosome.json from optimize");
    cmd_val->add_option("--repeats", validate.repeats, "CV repetitions");
    cmd_val->add_option("--folds", validate.folds, "folds per repetition");
    cmd_val->add_option("--seed", validate.seed, "master seed");
    cmd_val->add_option("--threads", validate.threads, "worker threads");
    cmd_val->add_option("--out", validate.out_dir, "output directory");
    cmd_val->add_option("--config", config_file, "JSON config file");

    auto* cmd_cmp = app.add_subcommand("compare", "nonparametric tests between runs plus baseline arms");
    cmd_cmp->add_option("--run", compare.run_csvs, "per-fold CSV files (repeatable)");
    add_corpus_flags(cmd_cmp, compare.corpus);
    cmd_cmp->add_option("--chi2-k", compare.chi2_k, "chi-square arm with this many features");
    cmd_cmp->add_option("--pca-components", compare.pca_components, "PCA arm components, LO:HI");
    cmd_cmp->add_option("--repeats", compare.repeats, "CV repetitions for baseline arms");
    cmd_cmp->add_option("--folds", compare.folds, "folds per repetition");
    cmd_cmp->add_option("--seed", compare.seed, "master seed");
    cmd_cmp->add_option("--threads", compare.threads, "worker threads");
    cmd_cmp->add_option("--out", compare.out_dir, "output directory");
    cmd_cmp->add_option("--config", config_file, "JSON config file");

    auto* cmd_rep = app.add_subcommand("report", "descriptive statistics and feature-frequency tables");
    cmd_rep->add_option("--run", report.run_csvs, "per-fold CSV files (repeatable)");
    cmd_rep->add_option("--chromosome", report.chromosome_paths, "chromosome JSON files (repeatable)");
    cmd_rep->add_option("--vocab", report.vocab_path, "vocab.tsv for term resolution");
    cmd_rep->add_option("--out", report.out_dir, "output directory");
    cmd_rep->add_option("--config", config_file, "JSON config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_vec->parsed()) return cli::cmd_vectorize(vectorize);
        if (cmd_opt->parsed()) return cli::cmd_optimize(optimize);
        if (cmd_val->parsed()) return cli::cmd_validate(validate);
        if (cmd_cmp->parsed()) return cli::cmd_compare(compare);
        if (cmd_rep->parsed()) return cli::cmd_report(report);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
