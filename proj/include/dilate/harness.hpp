#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dilate/data.hpp"
#include "dilate/metrics.hpp"
#include "dilate/train.hpp"

namespace dilate {

struct ExperimentConfig {
    std::string dataset = "synthetic"; ///< synthetic | csv
    std::string csv_path;
    bool csv_has_header = false;
    bool csv_long_form = false;
    std::size_t input_len = 20;
    std::size_t horizon = 20;
    std::size_t stride = 1;
    SyntheticSpec synthetic; ///< dataset seed lives in synthetic.seed

    TrainConfig training;
    std::size_t runs = 1;
    std::uint64_t base_seed = 0; ///< run r trains with seed base_seed + r
    std::string out_dir;         ///< empty: no files are written
};

struct RunArtifact {
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    RunMetrics metrics;
    bool diverged = false;
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;
    double best_valid_loss = 0.0;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
    std::string checkpoint_path;
};

struct ExperimentResult {
    std::string loss_label;
    std::vector<RunArtifact> artifacts;
    MetricsReport report; ///< aggregated over non-diverged runs
    std::map<std::string, std::string> config_echo; ///< reproducibility metadata
};

struct PreparedData {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Builds the train/valid/test splits described by the config: either the
/// synthetic benchmark or a CSV file (long-form series are chronologically
/// split 60/20/20 and windowed; row-per-series files are split by rows and
/// each row is min-max scaled before windowing).
PreparedData prepare_dataset(const ExperimentConfig& config);

/// Trains config.runs models (seeds base_seed + 0 .. runs - 1), evaluates
/// each on the test split with all five metrics and aggregates. Diverged
/// runs are flagged and excluded from the aggregate; throws training_error
/// when every run diverges.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct CompareResult {
    ExperimentResult a;
    ExperimentResult b;
    MetricsReport significance; ///< Welch tests per metric (a vs b)
    bool tested = false;        ///< false when either side has < 2 usable runs
};

/// Two loss configurations on one shared dataset, with per-metric Welch
/// significance tests over the run values.
CompareResult compare_losses(const ExperimentConfig& base,
                             const TrainConfig& loss_a, const TrainConfig& loss_b);

struct SweepRow {
    double alpha = 0.0;
    MetricsReport report;
};

/// One training + evaluation per alpha per run, on one shared dataset.
std::vector<SweepRow> sweep_alpha(const ExperimentConfig& base,
                                  const std::vector<double>& alphas);

struct BenchRow {
    std::size_t k = 0;
    double forward_us = 0.0;
    double grad_us = 0.0;
    double jvp_us = 0.0;
    double total_us = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    double scaling_exponent = 0.0; ///< log-log fit of total time against k
    std::size_t fd_k = 0;
    double fd_grad_us = 0.0;       ///< finite-difference gradient baseline
    double analytic_grad_us = 0.0; ///< forward + backward recursion
    double speedup = 0.0;
};

/// Median kernel timings per k, the empirical scaling exponent, and the
/// custom-backward-vs-finite-differences speedup at fd_k.
BenchResult bench_kernels(const std::vector<std::size_t>& k_values,
                          std::size_t repeats, std::size_t fd_k = 20);

/// report.json (no wall-clock fields), timings.json, report.txt.
void emit_experiment(const ExperimentResult& result, const std::string& out_dir);
void emit_compare(const CompareResult& result, const std::string& out_dir);
/// sweep.csv (plot-ready alpha vs metric columns) plus sweep.json.
void emit_sweep(const std::vector<SweepRow>& rows, const std::string& out_dir);
void emit_bench(const BenchResult& result, const std::string& out_dir);

/// Aligned text table (metric rows, loss columns) mirroring the usual
/// reporting convention: MSE and DTW are scaled by 100, TDI by 10.
std::string format_text_table(const std::vector<ExperimentResult>& results,
                              const MetricsReport* significance);

} // namespace dilate
