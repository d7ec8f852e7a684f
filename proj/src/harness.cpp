#include "dilate/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dilate/dp_kernels.hpp"
#include "dilate/errors.hpp"

namespace dilate {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

Dataset windows_from_rows(const Matrix& rows, std::size_t begin, std::size_t end,
                          const ExperimentConfig& config, const std::string& split) {
    Dataset out;
    out.split = split;
    out.source = config.csv_path;
    bool first = true;
    for (std::size_t r = begin; r < end; ++r) {
        std::vector<double> series(rows.row(r).begin(), rows.row(r).end());
        minmax_scale(series);
        Dataset w = window_series(series, config.input_len, config.horizon, config.stride);
        if (first) {
            out.inputs = std::move(w.inputs);
            out.targets = std::move(w.targets);
            first = false;
            continue;
        }
        Matrix inputs(out.inputs.rows() + w.inputs.rows(), config.input_len);
        Matrix targets(out.targets.rows() + w.targets.rows(), config.horizon);
        for (std::size_t i = 0; i < out.inputs.rows(); ++i) {
            std::copy(out.inputs.row(i).begin(), out.inputs.row(i).end(), inputs.row(i).begin());
            std::copy(out.targets.row(i).begin(), out.targets.row(i).end(), targets.row(i).begin());
        }
        for (std::size_t i = 0; i < w.inputs.rows(); ++i) {
            std::copy(w.inputs.row(i).begin(), w.inputs.row(i).end(),
                      inputs.row(out.inputs.rows() + i).begin());
            std::copy(w.targets.row(i).begin(), w.targets.row(i).end(),
                      targets.row(out.targets.rows() + i).begin());
        }
        out.inputs = std::move(inputs);
        out.targets = std::move(targets);
    }
    return out;
}

} // namespace

PreparedData prepare_dataset(const ExperimentConfig& config) {
    PreparedData out;
    if (config.dataset == "synthetic") {
        SyntheticSpec spec = config.synthetic;
        spec.input_len = config.input_len;
        spec.horizon = config.horizon;
        spec.series_len = config.input_len + config.horizon;
        SyntheticData data = generate_synthetic(spec);
        out.train = std::move(data.train);
        out.valid = std::move(data.valid);
        out.test = std::move(data.test);
        return out;
    }
    if (config.dataset != "csv") {
        throw std::invalid_argument("unknown dataset kind: " + config.dataset);
    }
    if (config.csv_path.empty()) {
        throw std::invalid_argument("csv dataset requires --csv-path");
    }
    const Matrix rows = load_csv(config.csv_path, config.csv_has_header, config.csv_long_form);
    if (rows.rows() == 1) {
        // One long series: chronological 60/20/20, then windows per segment.
        std::vector<double> series(rows.row(0).begin(), rows.row(0).end());
        minmax_scale(series);
        const SplitSeries split = chronological_split(
            series, {0.6, 0.2, 0.2}, config.input_len + config.horizon);
        out.train = window_series(split.train, config.input_len, config.horizon, config.stride);
        out.valid = window_series(split.valid, config.input_len, config.horizon, config.stride);
        out.test = window_series(split.test, config.input_len, config.horizon, config.stride);
    } else {
        // Row-per-series: split the rows chronologically.
        const std::size_t n = rows.rows();
        const std::size_t b1 = static_cast<std::size_t>(std::floor(0.6 * static_cast<double>(n)));
        const std::size_t b2 = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(n)));
        if (b1 == 0 || b2 == b1 || b2 == n) {
            throw data_error("csv dataset too small for a 60/20/20 row split");
        }
        out.train = windows_from_rows(rows, 0, b1, config, "train");
        out.valid = windows_from_rows(rows, b1, b2, config, "valid");
        out.test = windows_from_rows(rows, b2, n, config, "test");
    }
    out.train.split = "train";
    out.valid.split = "valid";
    out.test.split = "test";
    out.train.source = out.valid.source = out.test.source = config.csv_path;
    return out;
}

namespace {

std::map<std::string, std::string> echo_config(const ExperimentConfig& config,
                                               const TrainConfig& training) {
    std::ostringstream lr;
    lr << training.learning_rate;
    std::ostringstream alpha;
    alpha << training.loss_config.alpha;
    std::ostringstream gamma;
    gamma << training.loss_config.gamma;
    std::map<std::string, std::string> echo;
    echo["dataset"] = config.dataset;
    if (!config.csv_path.empty()) {
        echo["csv_path"] = config.csv_path;
    }
    echo["dataset_seed"] = std::to_string(config.synthetic.seed);
    echo["base_seed"] = std::to_string(config.base_seed);
    echo["runs"] = std::to_string(config.runs);
    echo["input_len"] = std::to_string(config.input_len);
    echo["horizon"] = std::to_string(config.horizon);
    echo["loss"] = to_string(training.loss);
    echo["alpha"] = alpha.str();
    echo["gamma"] = gamma.str();
    echo["band_width"] = std::to_string(training.loss_config.band_width);
    echo["max_epochs"] = std::to_string(training.max_epochs);
    echo["patience"] = std::to_string(training.patience);
    echo["batch_size"] = std::to_string(training.batch_size);
    echo["hidden"] = std::to_string(training.hidden);
    echo["learning_rate"] = lr.str();
    return echo;
}

RunMetrics evaluate_model(const MlpParams& params, const Dataset& test) {
    RunMetrics acc;
    const std::size_t n = test.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> raw = mlp_forward(params, test.inputs.row(i));
        const TimeSeries pred = TimeSeries::from_vector(raw);
        const TimeSeries target = TimeSeries::from_vector(test.targets.row(i));
        acc.mse += eval_mse(pred, target);
        acc.dtw += eval_dtw(pred, target);
        acc.tdi += eval_tdi(pred, target);
        acc.ramp += ramp_score(pred, target);
        acc.hausdorff += hausdorff(detect_change_points(pred),
                                   detect_change_points(target), target.steps());
    }
    const double scale = 1.0 / static_cast<double>(n);
    acc.mse *= scale;
    acc.dtw *= scale;
    acc.tdi *= scale;
    acc.ramp *= scale;
    acc.hausdorff *= scale;
    return acc;
}

ExperimentResult run_on_data(const PreparedData& data, const ExperimentConfig& config,
                             const TrainConfig& training) {
    ExperimentResult result;
    result.loss_label = to_string(training.loss);
    result.config_echo = echo_config(config, training);
    std::vector<RunMetrics> usable;

    for (std::size_t run = 0; run < config.runs; ++run) {
        TrainConfig tc = training;
        tc.seed = config.base_seed + run;

        RunArtifact art;
        art.run_index = run;
        art.seed = tc.seed;

        const auto t0 = clock_type::now();
        TrainResult trained = train(data.train, data.valid, tc);
        art.train_seconds = seconds_since(t0);
        art.epochs = trained.trace.epochs.size();
        art.best_epoch = trained.trace.best_epoch;
        art.best_valid_loss = trained.trace.best_valid_loss;
        art.diverged = trained.trace.diverged;

        if (!art.diverged) {
            const auto t1 = clock_type::now();
            art.metrics = evaluate_model(trained.params, data.test);
            art.eval_seconds = seconds_since(t1);
            usable.push_back(art.metrics);
            if (!config.out_dir.empty()) {
                std::filesystem::create_directories(config.out_dir);
                art.checkpoint_path = config.out_dir + "/" + result.loss_label + "_run" +
                                      std::to_string(run) + ".ckpt";
                save_checkpoint(art.checkpoint_path, trained.params);
            }
        }
        result.artifacts.push_back(std::move(art));
    }
    if (usable.empty()) {
        throw training_error("all " + std::to_string(config.runs) +
                             " runs diverged for loss " + result.loss_label);
    }
    result.report = aggregate_runs(usable);
    return result;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    if (config.runs < 1) {
        throw std::invalid_argument("run_experiment: runs must be >= 1");
    }
    const PreparedData data = prepare_dataset(config);
    return run_on_data(data, config, config.training);
}

CompareResult compare_losses(const ExperimentConfig& base,
                             const TrainConfig& loss_a, const TrainConfig& loss_b) {
    if (base.runs < 1) {
        throw std::invalid_argument("compare_losses: runs must be >= 1");
    }
    const PreparedData data = prepare_dataset(base);
    CompareResult out;
    out.a = run_on_data(data, base, loss_a);
    out.b = run_on_data(data, base, loss_b);

    if (out.a.report.runs >= 2 && out.b.report.runs >= 2) {
        out.tested = true;
        out.significance.runs = std::min(out.a.report.runs, out.b.report.runs);
        for (const auto& name : metric_names()) {
            out.significance.significance.emplace(
                name, welch_t_test(out.a.report.metrics.at(name).per_run,
                                   out.b.report.metrics.at(name).per_run));
        }
    }
    return out;
}

std::vector<SweepRow> sweep_alpha(const ExperimentConfig& base,
                                  const std::vector<double>& alphas) {
    if (alphas.empty()) {
        throw std::invalid_argument("sweep_alpha: empty alpha grid");
    }
    for (double a : alphas) {
        if (a < 0.0 || a > 1.0) {
            throw std::invalid_argument("sweep_alpha: alpha values must lie in [0, 1]");
        }
    }
    const PreparedData data = prepare_dataset(base);
    std::vector<SweepRow> rows;
    for (double a : alphas) {
        TrainConfig tc = base.training;
        tc.loss = LossKind::dilate;
        tc.loss_config.alpha = a;
        SweepRow row;
        row.alpha = a;
        row.report = run_on_data(data, base, tc).report;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// Median of `samples` timings of fn(), each averaged over enough inner
// iterations to outlast timer noise.
template <typename F>
double median_micros(F&& fn, std::size_t samples) {
    // Calibrate the inner iteration count to ~10 ms per sample.
    const auto c0 = clock_type::now();
    fn();
    const double once = std::max(seconds_since(c0), 1e-9);
    const std::size_t iters = std::clamp<std::size_t>(
        static_cast<std::size_t>(0.01 / once), 1, 100000);

    std::vector<double> times;
    times.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        const auto t0 = clock_type::now();
        for (std::size_t i = 0; i < iters; ++i) {
            fn();
        }
        times.push_back(seconds_since(t0) / static_cast<double>(iters) * 1e6);
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

CostMatrix random_cost(std::size_t k, double gamma, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    CostMatrix cost{Matrix(k, k), gamma};
    for (double& v : cost.delta.values()) {
        v = dist(rng);
    }
    return cost;
}

} // namespace

BenchResult bench_kernels(const std::vector<std::size_t>& k_values,
                          std::size_t repeats, std::size_t fd_k) {
    if (k_values.empty() || repeats == 0) {
        throw std::invalid_argument("bench_kernels: need k values and repeats >= 1");
    }
    for (std::size_t k : k_values) {
        if (k < 2) {
            throw std::invalid_argument("bench_kernels: k values must be >= 2");
        }
    }
    const double gamma = 0.1;
    std::mt19937_64 rng(12345);

    BenchResult result;
    for (std::size_t k : k_values) {
        const CostMatrix cost = random_cost(k, gamma, rng);
        const PenaltyMatrix omega = squared_penalty(k);
        SoftDtwResult fwd = soft_dtw_forward(cost);
        soft_dtw_grad(cost, fwd.tables);

        BenchRow row;
        row.k = k;
        row.forward_us = median_micros([&] { soft_dtw_forward(cost); }, repeats);
        row.grad_us = median_micros([&] { soft_dtw_grad(cost, fwd.tables); }, repeats);
        row.jvp_us = median_micros(
            [&] { soft_dtw_grad_jvp(cost, omega.omega, fwd.tables); }, repeats);
        row.total_us = row.forward_us + row.grad_us + row.jvp_us;
        result.rows.push_back(row);
    }

    // Least-squares slope of log(total) against log(k).
    if (result.rows.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(result.rows.size());
        for (const auto& row : result.rows) {
            const double x = std::log(static_cast<double>(row.k));
            const double y = std::log(row.total_us);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        result.scaling_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }

    // Naive baseline: central finite differences of the forward value with
    // respect to every cost entry (2 k^2 forward passes of O(k^2) each)
    // against one forward plus the backward recursion.
    result.fd_k = fd_k;
    CostMatrix cost = random_cost(fd_k, gamma, rng);
    result.analytic_grad_us = median_micros(
        [&] {
            SoftDtwResult f = soft_dtw_forward(cost);
            soft_dtw_grad(cost, f.tables);
        },
        repeats);
    const double step = 1e-6;
    result.fd_grad_us = median_micros(
        [&] {
            Matrix grad(fd_k, fd_k);
            for (std::size_t i = 0; i < fd_k; ++i) {
                for (std::size_t j = 0; j < fd_k; ++j) {
                    const double saved = cost.delta(i, j);
                    cost.delta(i, j) = saved + step;
                    const double up = soft_dtw_forward(cost).value;
                    cost.delta(i, j) = saved - step;
                    const double down = soft_dtw_forward(cost).value;
                    cost.delta(i, j) = saved;
                    grad(i, j) = (up - down) / (2.0 * step);
                }
            }
        },
        std::min<std::size_t>(repeats, 3));
    result.speedup = result.fd_grad_us / result.analytic_grad_us;
    return result;
}

namespace {

nlohmann::json report_json(const MetricsReport& report) {
    nlohmann::json j;
    j["runs"] = report.runs;
    for (const auto& [name, summary] : report.metrics) {
        j["metrics"][name] = {
            {"mean", summary.mean},
            {"stddev", summary.stddev},
            {"per_run", summary.per_run},
        };
    }
    return j;
}

nlohmann::json result_json(const ExperimentResult& result) {
    nlohmann::json j = report_json(result.report);
    j["loss"] = result.loss_label;
    j["config"] = result.config_echo;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& art : result.artifacts) {
        nlohmann::json r;
        r["run"] = art.run_index;
        r["seed"] = art.seed;
        r["diverged"] = art.diverged;
        r["epochs"] = art.epochs;
        r["best_epoch"] = art.best_epoch;
        r["best_valid_loss"] = art.best_valid_loss;
        if (!art.checkpoint_path.empty()) {
            r["checkpoint"] = art.checkpoint_path;
        }
        if (!art.diverged) {
            for (const auto& name : metric_names()) {
                r["metrics"][name] = metric_value(art.metrics, name);
            }
        }
        runs.push_back(std::move(r));
    }
    j["run_artifacts"] = std::move(runs);
    return j;
}

nlohmann::json timings_json(const ExperimentResult& result) {
    nlohmann::json j;
    for (const auto& art : result.artifacts) {
        j.push_back({{"run", art.run_index},
                     {"train_seconds", art.train_seconds},
                     {"eval_seconds", art.eval_seconds}});
    }
    return j;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream os(path);
    if (!os) {
        throw data_error("cannot write report file: " + path);
    }
    os << contents;
    if (!os) {
        throw data_error("failed while writing report file: " + path);
    }
}

} // namespace

std::string format_text_table(const std::vector<ExperimentResult>& results,
                              const MetricsReport* significance) {
    if (results.empty()) {
        throw std::invalid_argument("format_text_table: no results");
    }
    struct RowSpec {
        const char* label;
        const char* metric;
        double scale;
    };
    // Text tables keep the usual reporting scales; JSON stores raw values.
    const std::vector<RowSpec> rows = {
        {"MSE (x100)", "mse", 100.0},  {"DTW (x100)", "dtw", 100.0},
        {"TDI (x10)", "tdi", 10.0},    {"Ramp", "ramp", 1.0},
        {"Hausdorff", "hausdorff", 1.0},
    };

    std::ostringstream os;
    os << std::left << std::setw(14) << "metric";
    for (const auto& r : results) {
        os << std::setw(22) << r.loss_label;
    }
    if (significance != nullptr) {
        os << "significant";
    }
    os << '\n';
    for (const auto& spec : rows) {
        os << std::left << std::setw(14) << spec.label;
        for (const auto& r : results) {
            const auto& s = r.report.metrics.at(spec.metric);
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << s.mean * spec.scale << " +/- "
                 << s.stddev * spec.scale;
            os << std::setw(22) << cell.str();
        }
        if (significance != nullptr) {
            const auto it = significance->significance.find(spec.metric);
            os << (it != significance->significance.end() && it->second.significant ? "yes"
                                                                                    : "no");
        }
        os << '\n';
    }
    return os.str();
}

void emit_experiment(const ExperimentResult& result, const std::string& out_dir) {
    if (result.artifacts.empty()) {
        throw std::invalid_argument("emit_experiment: no run artifacts");
    }
    std::filesystem::create_directories(out_dir);
    nlohmann::json j = result_json(result);
    write_file(out_dir + "/report.json", j.dump(2) + "\n");
    write_file(out_dir + "/timings.json",
               nlohmann::json{{"runs", timings_json(result)}}.dump(2) + "\n");
    write_file(out_dir + "/report.txt", format_text_table({result}, nullptr));
}

void emit_compare(const CompareResult& result, const std::string& out_dir) {
    if (result.a.artifacts.empty() || result.b.artifacts.empty()) {
        throw std::invalid_argument("emit_compare: no run artifacts");
    }
    std::filesystem::create_directories(out_dir);

    nlohmann::json j;
    j["a"] = result_json(result.a);
    j["b"] = result_json(result.b);
    j["significance_tested"] = result.tested;
    if (result.tested) {
        for (const auto& [name, welch] : result.significance.significance) {
            j["significance"][name] = {
                {"t", welch.t},
                {"dof", welch.dof},
                {"p", welch.p},
                {"significant", welch.significant},
            };
        }
    } else {
        j["notice"] = "significance tests skipped: fewer than 2 usable runs per side";
    }
    write_file(out_dir + "/report.json", j.dump(2) + "\n");

    nlohmann::json t;
    t[result.a.loss_label] = timings_json(result.a);
    t[result.b.loss_label + (result.a.loss_label == result.b.loss_label ? "_b" : "")] =
        timings_json(result.b);
    write_file(out_dir + "/timings.json", t.dump(2) + "\n");

    write_file(out_dir + "/report.txt",
               format_text_table({result.a, result.b},
                                 result.tested ? &result.significance : nullptr));
}

void emit_sweep(const std::vector<SweepRow>& rows, const std::string& out_dir) {
    if (rows.empty()) {
        throw std::invalid_argument("emit_sweep: no sweep rows");
    }
    std::filesystem::create_directories(out_dir);

    std::ostringstream csv;
    csv << "alpha";
    for (const auto& name : metric_names()) {
        csv << ',' << name << "_mean," << name << "_std";
    }
    csv << '\n';
    csv.precision(17);
    for (const auto& row : rows) {
        csv << row.alpha;
        for (const auto& name : metric_names()) {
            const auto& s = row.report.metrics.at(name);
            csv << ',' << s.mean << ',' << s.stddev;
        }
        csv << '\n';
    }
    write_file(out_dir + "/sweep.csv", csv.str());

    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json r = report_json(row.report);
        r["alpha"] = row.alpha;
        j.push_back(std::move(r));
    }
    write_file(out_dir + "/sweep.json", j.dump(2) + "\n");
}

void emit_bench(const BenchResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json j;
    for (const auto& row : result.rows) {
        j["rows"].push_back({{"k", row.k},
                             {"forward_us", row.forward_us},
                             {"grad_us", row.grad_us},
                             {"jvp_us", row.jvp_us},
                             {"total_us", row.total_us}});
    }
    j["scaling_exponent"] = result.scaling_exponent;
    j["fd_k"] = result.fd_k;
    j["fd_grad_us"] = result.fd_grad_us;
    j["analytic_grad_us"] = result.analytic_grad_us;
    j["speedup"] = result.speedup;
    write_file(out_dir + "/bench.json", j.dump(2) + "\n");

    std::ostringstream os;
    os << std::left << std::setw(8) << "k" << std::setw(14) << "forward_us" << std::setw(14)
       << "grad_us" << std::setw(14) << "jvp_us" << std::setw(14) << "total_us" << '\n';
    for (const auto& row : result.rows) {
        os << std::left << std::setw(8) << row.k << std::setw(14) << row.forward_us
           << std::setw(14) << row.grad_us << std::setw(14) << row.jvp_us << std::setw(14)
           << row.total_us << '\n';
    }
    os << "scaling exponent: " << result.scaling_exponent << '\n';
    os << "finite-difference gradient at k=" << result.fd_k << ": " << result.fd_grad_us
       << " us vs analytic " << result.analytic_grad_us << " us (speedup x" << result.speedup
       << ")\n";
    write_file(out_dir + "/bench.txt", os.str());
}

} // namespace dilate
