#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dilate/errors.hpp"
#include "dilate/harness.hpp"

namespace {

struct CliOptions {
    dilate::ExperimentConfig experiment;
    std::string loss = "mse";
    std::string loss_b; // compare only
    std::string config_path;
    std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::size_t> bench_k{16, 32, 64, 128};
    std::size_t bench_repeats = 7;
    std::string checkpoint;
};

void apply_config_file(CliOptions& opt) {
    if (opt.config_path.empty()) {
        return;
    }
    std::ifstream is(opt.config_path);
    if (!is) {
        throw dilate::data_error("cannot open config file: " + opt.config_path);
    }
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw dilate::data_error("malformed config file " + opt.config_path + ": " + e.what());
    }
    auto& exp = opt.experiment;
    exp.dataset = j.value("dataset", exp.dataset);
    exp.csv_path = j.value("csv_path", exp.csv_path);
    exp.csv_has_header = j.value("csv_header", exp.csv_has_header);
    exp.csv_long_form = j.value("csv_long_form", exp.csv_long_form);
    exp.input_len = j.value("input_len", exp.input_len);
    exp.horizon = j.value("horizon", exp.horizon);
    exp.stride = j.value("stride", exp.stride);
    exp.runs = j.value("runs", exp.runs);
    exp.base_seed = j.value("seed", exp.base_seed);
    exp.out_dir = j.value("out", exp.out_dir);
    exp.synthetic.seed = j.value("dataset_seed", exp.synthetic.seed);
    exp.synthetic.n_series = j.value("n_series", exp.synthetic.n_series);
    exp.synthetic.noise_variance = j.value("noise_variance", exp.synthetic.noise_variance);
    exp.training.max_epochs = j.value("epochs", exp.training.max_epochs);
    exp.training.patience = j.value("patience", exp.training.patience);
    exp.training.batch_size = j.value("batch_size", exp.training.batch_size);
    exp.training.hidden = j.value("hidden", exp.training.hidden);
    exp.training.learning_rate = j.value("learning_rate", exp.training.learning_rate);
    exp.training.loss_config.alpha = j.value("alpha", exp.training.loss_config.alpha);
    exp.training.loss_config.gamma = j.value("gamma", exp.training.loss_config.gamma);
    exp.training.loss_config.band_width = j.value("band_width", exp.training.loss_config.band_width);
    opt.loss = j.value("loss", opt.loss);
    opt.loss_b = j.value("loss_b", opt.loss_b);
    if (j.contains("alphas")) {
        opt.alphas = j["alphas"].get<std::vector<double>>();
    }
    if (j.contains("bench_k")) {
        opt.bench_k = j["bench_k"].get<std::vector<std::size_t>>();
    }
}

dilate::TrainConfig training_for(const CliOptions& opt, const std::string& loss_name) {
    dilate::TrainConfig tc = opt.experiment.training;
    tc.loss = dilate::loss_kind_from_string(loss_name);
    if (tc.loss == dilate::LossKind::dilate_tangled_band) {
        tc.loss_config.omega_kind = dilate::PenaltyKind::sakoe_chiba;
    } else if (tc.loss == dilate::LossKind::dilate_tangled_weighted) {
        tc.loss_config.omega_kind = dilate::PenaltyKind::weighted;
    }
    return tc;
}

void require_out(const CliOptions& opt) {
    if (opt.experiment.out_dir.empty()) {
        throw std::invalid_argument("--out is required for this subcommand");
    }
}

int run(CLI::App& app, CliOptions& opt) {
    // Window geometry flows into the synthetic spec.
    opt.experiment.synthetic.input_len = opt.experiment.input_len;
    opt.experiment.synthetic.horizon = opt.experiment.horizon;
    opt.experiment.synthetic.series_len = opt.experiment.input_len + opt.experiment.horizon;

    if (app.got_subcommand("generate")) {
        require_out(opt);
        const auto data = dilate::generate_synthetic(opt.experiment.synthetic);
        std::filesystem::create_directories(opt.experiment.out_dir);
        dilate::save_synthetic(opt.experiment.out_dir, data, opt.experiment.synthetic);
        std::cout << "wrote train/valid/test csv + meta.json to " << opt.experiment.out_dir
                  << "\n";
        return 0;
    }
    if (app.got_subcommand("train")) {
        require_out(opt);
        opt.experiment.training = training_for(opt, opt.loss);
        const auto result = dilate::run_experiment(opt.experiment);
        dilate::emit_experiment(result, opt.experiment.out_dir);
        std::cout << dilate::format_text_table({result}, nullptr);
        return 0;
    }
    if (app.got_subcommand("evaluate")) {
        if (opt.checkpoint.empty()) {
            throw std::invalid_argument("evaluate requires --checkpoint");
        }
        const auto params = dilate::load_checkpoint(opt.checkpoint);
        const auto data = dilate::prepare_dataset(opt.experiment);
        dilate::RunMetrics acc;
        const auto& test = data.test;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const auto raw = dilate::mlp_forward(params, test.inputs.row(i));
            const auto pred = dilate::TimeSeries::from_vector(raw);
            const auto target = dilate::TimeSeries::from_vector(test.targets.row(i));
            acc.mse += dilate::eval_mse(pred, target);
            acc.dtw += dilate::eval_dtw(pred, target);
            acc.tdi += dilate::eval_tdi(pred, target);
            acc.ramp += dilate::ramp_score(pred, target);
            acc.hausdorff += dilate::hausdorff(dilate::detect_change_points(pred),
                                               dilate::detect_change_points(target),
                                               target.steps());
        }
        const double scale = 1.0 / static_cast<double>(test.size());
        nlohmann::json j;
        j["checkpoint"] = opt.checkpoint;
        j["test_samples"] = test.size();
        j["metrics"] = {{"mse", acc.mse * scale},
                        {"dtw", acc.dtw * scale},
                        {"tdi", acc.tdi * scale},
                        {"ramp", acc.ramp * scale},
                        {"hausdorff", acc.hausdorff * scale}};
        std::cout << j.dump(2) << '\n';
        if (!opt.experiment.out_dir.empty()) {
            std::filesystem::create_directories(opt.experiment.out_dir);
            std::ofstream os(opt.experiment.out_dir + "/evaluate.json");
            os << j.dump(2) << '\n';
        }
        return 0;
    }
    if (app.got_subcommand("compare")) {
        require_out(opt);
        if (opt.loss_b.empty()) {
            throw std::invalid_argument("compare requires --loss2");
        }
        const auto result = dilate::compare_losses(opt.experiment, training_for(opt, opt.loss),
                                                   training_for(opt, opt.loss_b));
        dilate::emit_compare(result, opt.experiment.out_dir);
        std::cout << dilate::format_text_table(
            {result.a, result.b}, result.tested ? &result.significance : nullptr);
        if (!result.tested) {
            std::cout << "notice: significance tests skipped (fewer than 2 usable runs per side)\n";
        }
        return 0;
    }
    if (app.got_subcommand("sweep-alpha")) {
        require_out(opt);
        opt.experiment.training = training_for(opt, "dilate");
        const auto rows = dilate::sweep_alpha(opt.experiment, opt.alphas);
        dilate::emit_sweep(rows, opt.experiment.out_dir);
        for (const auto& row : rows) {
            std::cout << "alpha=" << row.alpha
                      << " mse=" << row.report.metrics.at("mse").mean
                      << " dtw=" << row.report.metrics.at("dtw").mean
                      << " tdi=" << row.report.metrics.at("tdi").mean << '\n';
        }
        return 0;
    }
    if (app.got_subcommand("bench")) {
        const auto result = dilate::bench_kernels(opt.bench_k, opt.bench_repeats);
        if (!opt.experiment.out_dir.empty()) {
            dilate::emit_bench(result, opt.experiment.out_dir);
        }
        std::cout << "scaling exponent: " << result.scaling_exponent << '\n'
                  << "speedup vs finite differences at k=" << result.fd_k << ": x"
                  << result.speedup << '\n';
        return 0;
    }
    throw std::invalid_argument("no subcommand given (try --help)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DILATE forecasting losses: training, evaluation and benchmarks"};
    app.require_subcommand(0, 1);
    CliOptions opt;

    app.add_option("--config", opt.config_path, "JSON config file (flags override it)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--dataset", opt.experiment.dataset, "synthetic|csv");
        sub->add_option("--csv-path", opt.experiment.csv_path, "CSV input file");
        sub->add_flag("--csv-header", opt.experiment.csv_has_header, "skip one header row");
        sub->add_flag("--csv-long", opt.experiment.csv_long_form,
                      "single-column long-form series");
        sub->add_option("--input-len", opt.experiment.input_len, "conditioning window length");
        sub->add_option("--horizon", opt.experiment.horizon, "forecast horizon");
        sub->add_option("--stride", opt.experiment.stride, "window stride");
        sub->add_option("--runs", opt.experiment.runs, "number of seeded runs");
        sub->add_option("--seed", opt.experiment.base_seed, "base model seed");
        sub->add_option("--data-seed", opt.experiment.synthetic.seed, "dataset seed");
        sub->add_option("--n-series", opt.experiment.synthetic.n_series,
                        "synthetic series per split");
        sub->add_option("--noise-variance", opt.experiment.synthetic.noise_variance,
                        "synthetic noise variance");
        sub->add_option("--epochs", opt.experiment.training.max_epochs, "max training epochs");
        sub->add_option("--patience", opt.experiment.training.patience, "early-stopping patience");
        sub->add_option("--batch-size", opt.experiment.training.batch_size, "minibatch size");
        sub->add_option("--hidden", opt.experiment.training.hidden, "hidden units");
        sub->add_option("--lr", opt.experiment.training.learning_rate, "Adam learning rate");
        sub->add_option("--loss", opt.loss, "mse|dtw|dilate|dilate-t-weighted|dilate-t-band");
        sub->add_option("--alpha", opt.experiment.training.loss_config.alpha,
                        "shape/temporal balance");
        sub->add_option("--gamma", opt.experiment.training.loss_config.gamma,
                        "softmin temperature");
        sub->add_option("--band-width", opt.experiment.training.loss_config.band_width,
                        "Sakoe-Chiba band width");
        sub->add_option("--out", opt.experiment.out_dir, "output directory");
        sub->add_option("--config", opt.config_path, "JSON config file (flags override it)");
    };

    add_common(app.add_subcommand("generate", "write the synthetic benchmark to disk"));
    add_common(app.add_subcommand("train", "train one loss configuration and evaluate it"));
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a saved checkpoint on the test split");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", opt.checkpoint, "checkpoint file");
    auto* cmp = app.add_subcommand("compare", "train two losses and run significance tests");
    add_common(cmp);
    cmp->add_option("--loss2", opt.loss_b, "second loss configuration");
    auto* sweep = app.add_subcommand("sweep-alpha", "metric-vs-alpha curves for dilate");
    add_common(sweep);
    sweep->add_option("--alphas", opt.alphas, "alpha grid");
    auto* bench = app.add_subcommand("bench", "kernel timing and scaling study");
    add_common(bench);
    bench->add_option("--bench-k", opt.bench_k, "horizon sizes to time");
    bench->add_option("--repeats", opt.bench_repeats, "timing samples per kernel");

    try {
        // The config file provides defaults, so it must load before the
        // flags are parsed: anything passed explicitly then overrides it.
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                opt.config_path = argv[i + 1];
            } else if (arg.rfind("--config=", 0) == 0) {
                opt.config_path = arg.substr(9);
            }
        }
        apply_config_file(opt);
    } catch (const dilate::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage error
    }

    try {
        return run(app, opt);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const dilate::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const dilate::training_error& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
