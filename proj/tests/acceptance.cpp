// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Criteria 4 and 5 train real models and take a few
// minutes; everything else is seconds.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "dilate/dp_kernels.hpp"
#include "dilate/harness.hpp"
#include "dilate/losses.hpp"
#include "dilate/metrics.hpp"
#include "dilate/mlp.hpp"
#include "oracles.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

struct Check {
    bool pass = true;
    std::ostringstream detail;

    template <typename T>
    void expect(bool ok, const T& message) {
        if (!ok) {
            pass = false;
            detail << (detail.str().empty() ? "" : "; ") << message;
        }
    }
};

double elapsed_s(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

dilate::TimeSeries random_series(std::size_t k, std::uint64_t seed) {
    return dilate::TimeSeries::from_vector(oracle::random_vector(k, seed));
}

// ---------------------------------------------------------------- criterion 1

Check criterion_oracle_equivalence() {
    Check c;
    const auto t0 = clock_type::now();
    std::mt19937_64 seed_gen(2024);

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + trial % 3; // cycles 2, 3, 4
        const auto pred = random_series(k, seed_gen());
        const auto target = random_series(k, seed_gen());

        const auto cost = dilate::pairwise_cost(pred, target, 0.1);
        const auto fwd = dilate::soft_dtw_forward(cost);
        const double gibbs = oracle::gibbs_value(cost.delta, 0.1);
        c.expect(std::abs(fwd.value - gibbs) <= 1e-10, "soft forward vs enumeration");

        auto tables = fwd.tables;
        const auto align = dilate::soft_dtw_grad(cost, tables);
        const auto gibbs_align = oracle::gibbs_alignment(cost.delta, 0.1);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                c.expect(std::abs(align.weights(i, j) - gibbs_align(i, j)) <= 1e-10,
                         "soft gradient vs Gibbs expectation");
            }
        }

        const auto hard = dilate::hard_dtw(cost);
        const auto hard_oracle = oracle::hard_min_path(cost.delta);
        c.expect(std::abs(hard.value - hard_oracle.value) <= 1e-10,
                 "hard dtw vs enumeration");

        const auto omega = dilate::squared_penalty(k);
        double tdi_oracle = 0.0;
        for (const auto& [h, j] : hard_oracle.path) {
            tdi_oracle += omega.omega(h, j);
        }
        c.expect(std::abs(dilate::eval_tdi(pred, target) - tdi_oracle) <= 1e-10,
                 "tdi vs tie-broken enumeration path");

        const double gamma = 1e-3;
        dilate::LossConfig cfg;
        cfg.alpha = 0.5;
        cfg.gamma = gamma;
        const auto tangled = dilate::dilate_tangled_loss(pred, target, cfg, omega);
        dilate::Matrix blended(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                blended(i, j) =
                    0.5 * dilate::pairwise_cost(pred, target, gamma).delta(i, j) +
                    0.5 * omega.omega(i, j);
            }
        }
        const double blended_min = oracle::hard_min_path(blended).value;
        c.expect(std::abs(tangled.value - blended_min) <= 5.0 * gamma * std::log(63.0),
                 "tangled loss vs blended enumeration minimum");
    }
    const double secs = elapsed_s(t0);
    c.expect(secs < 10.0, "runtime exceeded 10 s");
    c.detail << (c.detail.str().empty() ? "" : "; ") << "100 pairs, "
             << std::fixed << std::setprecision(2) << secs << " s";
    return c;
}

// ---------------------------------------------------------------- criterion 2

double loss_grad_rel_error(const std::function<dilate::LossResult(const dilate::TimeSeries&)>& loss,
                           const dilate::TimeSeries& pred) {
    const auto res = loss(pred);
    dilate::TimeSeries probe = pred;
    dilate::Matrix fd(pred.dims(), pred.steps());
    for (std::size_t d = 0; d < pred.dims(); ++d) {
        for (std::size_t h = 0; h < pred.steps(); ++h) {
            const double saved = probe.values(d, h);
            probe.values(d, h) = saved + 1e-5;
            const double up = loss(probe).value;
            probe.values(d, h) = saved - 1e-5;
            const double down = loss(probe).value;
            probe.values(d, h) = saved;
            fd(d, h) = (up - down) / 2e-5;
        }
    }
    return oracle::rel_error(res.grad, fd);
}

Check criterion_gradient_suite() {
    Check c;
    const auto t0 = clock_type::now();
    std::mt19937_64 seed_gen(77);

    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + trial % 7; // 2..8
        const double gamma = trial % 2 == 0 ? 0.1 : 1.0;
        const auto pred = random_series(k, seed_gen());
        const auto target = random_series(k, seed_gen());
        const auto omega = dilate::squared_penalty(k);
        const auto weighted = dilate::weighted_penalty(k);
        dilate::LossConfig cfg;
        cfg.alpha = 0.4;
        cfg.gamma = gamma;

        c.expect(loss_grad_rel_error(
                     [&](const dilate::TimeSeries& p) {
                         return dilate::shape_loss(p, target, gamma);
                     },
                     pred) <= 1e-4,
                 "shape_loss gradient");
        c.expect(loss_grad_rel_error(
                     [&](const dilate::TimeSeries& p) {
                         return dilate::temporal_loss(p, target, gamma, omega);
                     },
                     pred) <= 1e-4,
                 "temporal_loss gradient");
        c.expect(loss_grad_rel_error(
                     [&](const dilate::TimeSeries& p) {
                         return dilate::dilate_loss(p, target, cfg);
                     },
                     pred) <= 1e-4,
                 "dilate_loss gradient");
        c.expect(loss_grad_rel_error(
                     [&](const dilate::TimeSeries& p) {
                         return dilate::dilate_tangled_loss(p, target, cfg, weighted);
                     },
                     pred) <= 1e-4,
                 "dilate_tangled_loss gradient");
    }

    // End-to-end: d(loss(mlp(x))) / d(params) for a tiny network.
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 6, k = 4, hidden = 8;
        const auto x = oracle::random_vector(n, seed_gen());
        const auto target = random_series(k, seed_gen());
        dilate::LossConfig cfg;
        cfg.alpha = 0.5;
        cfg.gamma = 0.1;
        const auto params = dilate::init_mlp(n, k, hidden, seed_gen());

        dilate::MlpCache cache;
        const auto pred = dilate::mlp_forward(params, x, &cache);
        const auto loss =
            dilate::dilate_loss(dilate::TimeSeries::from_vector(pred), target, cfg);
        const auto analytic = dilate::mlp_backward(params, cache, loss.grad.row(0));

        auto objective = [&](const dilate::MlpParams& q) {
            const auto out = dilate::mlp_forward(q, x);
            return dilate::dilate_loss(dilate::TimeSeries::from_vector(out), target, cfg)
                .value;
        };
        std::vector<double> got;
        std::vector<double> fd;
        auto walk = [&](auto select) {
            dilate::MlpParams probe = params;
            auto& block = select(probe);
            for (std::size_t i = 0; i < block.size(); ++i) {
                const double saved = block[i];
                block[i] = saved + 1e-5;
                const double up = objective(probe);
                block[i] = saved - 1e-5;
                const double down = objective(probe);
                block[i] = saved;
                fd.push_back((up - down) / 2e-5);
            }
        };
        walk([](dilate::MlpParams& q) -> std::vector<double>& { return q.w1.values(); });
        walk([](dilate::MlpParams& q) -> std::vector<double>& { return q.b1; });
        walk([](dilate::MlpParams& q) -> std::vector<double>& { return q.w2.values(); });
        walk([](dilate::MlpParams& q) -> std::vector<double>& { return q.b2; });
        for (double v : analytic.w1.values()) got.push_back(v);
        for (double v : analytic.b1) got.push_back(v);
        for (double v : analytic.w2.values()) got.push_back(v);
        for (double v : analytic.b2) got.push_back(v);
        c.expect(oracle::rel_error(got, fd) <= 1e-3, "end-to-end mlp gradient");
    }

    const double secs = elapsed_s(t0);
    c.expect(secs < 60.0, "runtime exceeded 1 min");
    c.detail << (c.detail.str().empty() ? "" : "; ") << "20 instances per loss, "
             << std::fixed << std::setprecision(2) << secs << " s";
    return c;
}

// ---------------------------------------------------------------- criterion 3

Check criterion_hessian_product() {
    Check c;
    const auto t0 = clock_type::now();
    std::mt19937_64 seed_gen(4242);

    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + trial % 7;
        const double gamma = trial % 2 == 0 ? 0.1 : 1.0;
        const auto delta = oracle::random_matrix(k, k, seed_gen());
        const auto dir = oracle::random_matrix(k, k, seed_gen());
        const dilate::CostMatrix cost{delta, gamma};

        const auto jvp = dilate::soft_dtw_grad_jvp(cost, dir);
        const auto fd = oracle::fd_matrix_grad(
            [&](const dilate::Matrix& d) {
                const dilate::CostMatrix probe{d, gamma};
                auto res = dilate::soft_dtw_forward(probe);
                return dilate::dot(dilate::soft_dtw_grad(probe, res.tables).weights, dir);
            },
            delta, 1e-5);
        c.expect(oracle::rel_error(jvp, fd) <= 1e-4, "jvp vs finite differences");

        const auto dir2 = oracle::random_matrix(k, k, seed_gen());
        const double lhs = dilate::dot(dilate::soft_dtw_grad_jvp(cost, dir), dir2);
        const double rhs = dilate::dot(dilate::soft_dtw_grad_jvp(cost, dir2), dir);
        c.expect(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)),
                 "bilinear symmetry");
    }
    const double secs = elapsed_s(t0);
    c.expect(secs < 30.0, "runtime exceeded 30 s");
    c.detail << (c.detail.str().empty() ? "" : "; ") << "20 instances, "
             << std::fixed << std::setprecision(2) << secs << " s";
    return c;
}

// ------------------------------------------------------------ criteria 4 and 5

struct TrainedRuns {
    dilate::ExperimentConfig base;
    dilate::MetricsReport mse, dilate05, dtw, alpha0;
};

dilate::ExperimentConfig benchmark_config() {
    dilate::ExperimentConfig cfg;
    cfg.dataset = "synthetic";
    cfg.synthetic.seed = 20;
    cfg.synthetic.n_series = 500;
    cfg.input_len = 20;
    cfg.horizon = 20;
    cfg.training.max_epochs = 300;
    cfg.training.patience = 20;
    cfg.training.batch_size = 32;
    cfg.training.hidden = 128;
    cfg.training.learning_rate = 1e-3;
    cfg.training.loss_config.gamma = 0.01;
    cfg.base_seed = 100;
    return cfg;
}

dilate::MetricsReport run_config(dilate::ExperimentConfig cfg, dilate::LossKind loss,
                                 double alpha, std::size_t runs) {
    cfg.runs = runs;
    cfg.training.loss = loss;
    cfg.training.loss_config.alpha = alpha;
    const auto result = dilate::run_experiment(cfg);
    std::cout << "    " << dilate::to_string(loss) << " alpha=" << alpha << " runs=" << runs
              << ": tdi=" << result.report.metrics.at("tdi").mean
              << " dtw=" << result.report.metrics.at("dtw").mean
              << " mse=" << result.report.metrics.at("mse").mean << std::endl;
    return result.report;
}

TrainedRuns train_benchmark_models() {
    TrainedRuns runs;
    runs.base = benchmark_config();
    std::cout << "  training benchmark models (this is the slow part)..." << std::endl;
    runs.mse = run_config(runs.base, dilate::LossKind::mse, 0.5, 5);
    runs.dilate05 = run_config(runs.base, dilate::LossKind::dilate, 0.5, 5);
    runs.dtw = run_config(runs.base, dilate::LossKind::dtw_gamma, 1.0, 5);
    runs.alpha0 = run_config(runs.base, dilate::LossKind::dilate, 0.0, 3);
    return runs;
}

Check criterion_table1_direction(const TrainedRuns& runs) {
    Check c;
    const double tdi_mse = runs.mse.metrics.at("tdi").mean;
    const double tdi_dilate = runs.dilate05.metrics.at("tdi").mean;
    const double tdi_dtw = runs.dtw.metrics.at("tdi").mean;
    const double dtw_mse = runs.mse.metrics.at("dtw").mean;
    const double dtw_dilate = runs.dilate05.metrics.at("dtw").mean;

    c.expect(tdi_dilate < tdi_mse, "mean TDI(dilate) < mean TDI(mse)");
    c.expect(dtw_dilate < dtw_mse, "mean DTW(dilate) < mean DTW(mse)");
    c.expect(tdi_dilate < tdi_dtw, "mean TDI(dilate) < mean TDI(dtw)");
    c.detail << (c.detail.str().empty() ? "" : "; ") << std::setprecision(4)
             << "TDI mse=" << tdi_mse << " dilate=" << tdi_dilate << " dtw=" << tdi_dtw
             << "; DTW mse=" << dtw_mse << " dilate=" << dtw_dilate;
    return c;
}

Check criterion_alpha_sweep(const TrainedRuns& runs) {
    Check c;
    const double dtw_a0 = runs.alpha0.metrics.at("dtw").mean;
    const double dtw_a05 = runs.dilate05.metrics.at("dtw").mean;
    const double tdi_a1 = runs.dtw.metrics.at("tdi").mean; // dtw loss == dilate at alpha 1
    const double tdi_a05 = runs.dilate05.metrics.at("tdi").mean;

    c.expect(dtw_a0 > dtw_a05, "test DTW at alpha=0 exceeds alpha=0.5");
    c.expect(tdi_a1 > tdi_a05, "test TDI at alpha=1 exceeds alpha=0.5");
    c.detail << (c.detail.str().empty() ? "" : "; ") << std::setprecision(4)
             << "DTW a0=" << dtw_a0 << " a05=" << dtw_a05 << "; TDI a1=" << tdi_a1
             << " a05=" << tdi_a05;
    return c;
}

// ---------------------------------------------------------------- criterion 6

Check criterion_complexity() {
    Check c;
    const auto result = dilate::bench_kernels({16, 32, 64, 128}, 7, 20);
    c.expect(result.scaling_exponent >= 1.5 && result.scaling_exponent <= 2.5,
             "scaling exponent outside 2.0 +- 0.5");
    c.expect(result.speedup >= 20.0, "speedup below 20x at k=20");
    c.detail << (c.detail.str().empty() ? "" : "; ") << std::setprecision(3)
             << "exponent=" << result.scaling_exponent << ", speedup=x" << result.speedup;
    return c;
}

// ---------------------------------------------------------------- criterion 7

Check criterion_worked_examples() {
    Check c;
    // TDI 2/9.
    const auto p = dilate::TimeSeries::from_vector(std::vector<double>{0.0, 1.0, 1.0});
    const auto t = dilate::TimeSeries::from_vector(std::vector<double>{0.0, 0.0, 1.0});
    c.expect(std::abs(dilate::eval_tdi(p, t) - 2.0 / 9.0) <= 1e-12, "tdi 2/9 example");

    // Hausdorff {3,15} vs {4} -> 11.
    c.expect(dilate::hausdorff({{3, 15}}, {{4}}, 20) == 11.0, "hausdorff 11 example");

    // Softmin closed forms.
    const double single[] = {0.5};
    c.expect(std::abs(dilate::softmin(single, 0.01) - 0.5) <= 1e-12, "softmin singleton");
    const double equal[] = {1.0, 1.0, 1.0};
    c.expect(std::abs(dilate::softmin(equal, 0.1) - (1.0 - 0.1 * std::log(3.0))) <= 1e-12,
             "softmin equal entries");
    const double three[] = {1.0, 2.0, 3.0};
    c.expect(std::abs(dilate::softmin(three, 0.001) - 1.0) <= 1e-6, "softmin small gamma");

    // k=2 zero-cost alignment.
    const dilate::CostMatrix cost{dilate::Matrix(2, 2, 0.0), 0.01};
    auto fwd = dilate::soft_dtw_forward(cost);
    const auto align = dilate::soft_dtw_grad(cost, fwd.tables);
    c.expect(std::abs(align.weights(0, 0) - 1.0) <= 1e-12 &&
                 std::abs(align.weights(1, 1) - 1.0) <= 1e-12 &&
                 std::abs(align.weights(0, 1) - 1.0 / 3.0) <= 1e-12 &&
                 std::abs(align.weights(1, 0) - 1.0 / 3.0) <= 1e-12,
             "k=2 zero-cost alignment");
    return c;
}

// ---------------------------------------------------------------- criterion 8

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DILATE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Check criterion_determinism() {
    Check c;
    const auto work = std::filesystem::temp_directory_path() / "dilate_acceptance_det";
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    const std::string invocation =
        "compare --loss mse --loss2 dilate --alpha 0.5 --gamma 0.01 --runs 2 --seed 11 "
        "--data-seed 5 --n-series 24 --input-len 8 --horizon 8 --epochs 5 --patience 5 "
        "--batch-size 8 --hidden 16 --out " + (work / "out").string();
    const int rc_a = run_cli(invocation);
    const std::string report_a = slurp(work / "out" / "report.json");
    const int rc_b = run_cli(invocation);
    const std::string report_b = slurp(work / "out" / "report.json");
    c.expect(rc_a == 0 && rc_b == 0, "compare invocations failed");
    c.expect(!report_a.empty(), "empty report");
    c.expect(report_a == report_b, "report.json differs between identical invocations");
    std::filesystem::remove_all(work);
    return c;
}

} // namespace

int main() {
    struct Entry {
        int id;
        std::string label;
        Check result;
    };
    std::vector<Entry> entries;

    const auto t_all = clock_type::now();
    entries.push_back({1, "oracle equivalence on small instances", criterion_oracle_equivalence()});
    entries.push_back({2, "gradient suite vs finite differences", criterion_gradient_suite()});
    entries.push_back({3, "Hessian-vector product", criterion_hessian_product()});

    const TrainedRuns runs = train_benchmark_models();
    entries.push_back({4, "benchmark direction (dilate vs mse vs dtw)",
                       criterion_table1_direction(runs)});
    entries.push_back({5, "alpha sweep direction", criterion_alpha_sweep(runs)});
    entries.push_back({6, "O(k^2) scaling and backward speedup", criterion_complexity()});
    entries.push_back({7, "worked metric examples", criterion_worked_examples()});
    entries.push_back({8, "byte-identical compare reports", criterion_determinism()});

    int failures = 0;
    for (const auto& e : entries) {
        const bool ok = e.result.pass;
        failures += ok ? 0 : 1;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << e.id << ": " << e.label;
        const std::string detail = e.result.detail.str();
        if (!detail.empty()) {
            std::cout << " [" << detail << "]";
        }
        std::cout << std::endl;
    }
    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED") << " ("
              << entries.size() - failures << "/" << entries.size() << ", "
              << std::fixed << std::setprecision(1) << elapsed_s(t_all) << " s total)"
              << std::endl;
    return failures;
}
