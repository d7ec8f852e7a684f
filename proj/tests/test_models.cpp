#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "dilate/adam.hpp"
#include "dilate/data.hpp"
#include "dilate/errors.hpp"
#include "dilate/mlp.hpp"
#include "dilate/train.hpp"
#include "oracles.hpp"

using dilate::Matrix;
using dilate::MlpCache;
using dilate::MlpGrads;
using dilate::MlpParams;
using dilate::TimeSeries;

TEST_CASE("mlp_forward") {
    SUBCASE("zero weights pass the output bias through") {
        MlpParams p;
        p.w1 = Matrix(3, 2, 0.0);
        p.b1.assign(3, 0.0);
        p.w2 = Matrix(4, 3, 0.0);
        p.b2.assign(4, 0.7);
        const std::vector<double> x{1.0, -2.0};
        const auto pred = mlp_forward(p, x);
        for (double v : pred) {
            CHECK(v == 0.7);
        }
    }
    SUBCASE("scalar composition with an active relu") {
        MlpParams p;
        p.w1 = Matrix(1, 1, 2.0);
        p.b1.assign(1, 0.0);
        p.w2 = Matrix(1, 1, 3.0);
        p.b2.assign(1, 0.25);
        const std::vector<double> x{1.5};
        const auto pred = mlp_forward(p, x);
        CHECK(pred[0] == doctest::Approx(3.0 * 2.0 * 1.5 + 0.25).epsilon(1e-15));
    }
    SUBCASE("random parameters match a reference recomputation") {
        const auto p = dilate::init_mlp(6, 4, 8, 123);
        const auto x = oracle::random_vector(6, 5);
        const auto pred = mlp_forward(p, x);
        for (std::size_t i = 0; i < 4; ++i) {
            double acc = p.b2[i];
            for (std::size_t j = 0; j < 8; ++j) {
                double z = p.b1[j];
                for (std::size_t m = 0; m < 6; ++m) {
                    z += p.w1(j, m) * x[m];
                }
                acc += p.w2(i, j) * std::max(z, 0.0);
            }
            CHECK(pred[i] == doctest::Approx(acc).epsilon(1e-12));
        }
    }
    SUBCASE("input length mismatch is a usage error") {
        const auto p = dilate::init_mlp(6, 4, 8, 1);
        const std::vector<double> x(5, 0.0);
        CHECK_THROWS_AS(mlp_forward(p, x), std::invalid_argument);
    }
}

TEST_CASE("mlp_backward") {
    SUBCASE("zero upstream gradient zeroes every block") {
        const auto p = dilate::init_mlp(4, 3, 5, 7);
        MlpCache cache;
        mlp_forward(p, oracle::random_vector(4, 8), &cache);
        const std::vector<double> gp(3, 0.0);
        const auto g = mlp_backward(p, cache, gp);
        for (double v : g.w1.values()) CHECK(v == 0.0);
        for (double v : g.b1) CHECK(v == 0.0);
        for (double v : g.w2.values()) CHECK(v == 0.0);
        for (double v : g.b2) CHECK(v == 0.0);
    }
    SUBCASE("single-unit chain rule") {
        MlpParams p;
        p.w1 = Matrix(1, 1, 2.0);
        p.b1.assign(1, 0.1);
        p.w2 = Matrix(1, 1, -3.0);
        p.b2.assign(1, 0.0);
        MlpCache cache;
        const std::vector<double> x{1.5};
        mlp_forward(p, x, &cache);
        const std::vector<double> gp{1.0};
        const auto g = mlp_backward(p, cache, gp);
        const double a1 = 2.0 * 1.5 + 0.1;
        CHECK(g.b2[0] == 1.0);
        CHECK(g.w2(0, 0) == doctest::Approx(a1).epsilon(1e-15));
        CHECK(g.b1[0] == doctest::Approx(-3.0).epsilon(1e-15));
        CHECK(g.w1(0, 0) == doctest::Approx(-3.0 * 1.5).epsilon(1e-15));
    }
    SUBCASE("every block matches finite differences") {
        const auto p = dilate::init_mlp(5, 3, 6, 11);
        const auto x = oracle::random_vector(5, 12);
        const auto gp = oracle::random_vector(3, 13, -1.0, 1.0);
        MlpCache cache;
        mlp_forward(p, x, &cache);
        const auto g = mlp_backward(p, cache, gp);

        // Scalar objective <gp, forward(params, x)>.
        auto objective = [&](const MlpParams& params) {
            const auto pred = mlp_forward(params, x);
            double acc = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                acc += gp[i] * pred[i];
            }
            return acc;
        };
        auto check_block = [&](auto get_block, const std::vector<double>& analytic) {
            MlpParams probe = p;
            std::vector<double> fd(analytic.size());
            auto& block = get_block(probe);
            for (std::size_t i = 0; i < block.size(); ++i) {
                const double saved = block[i];
                block[i] = saved + 1e-6;
                const double up = objective(probe);
                block[i] = saved - 1e-6;
                const double down = objective(probe);
                block[i] = saved;
                fd[i] = (up - down) / 2e-6;
            }
            CHECK(oracle::rel_error(analytic, fd, 1e-9) <= 1e-5);
        };
        check_block([](MlpParams& q) -> std::vector<double>& { return q.w1.values(); },
                    g.w1.values());
        check_block([](MlpParams& q) -> std::vector<double>& { return q.b1; }, g.b1);
        check_block([](MlpParams& q) -> std::vector<double>& { return q.w2.values(); },
                    g.w2.values());
        check_block([](MlpParams& q) -> std::vector<double>& { return q.b2; }, g.b2);
    }
}

TEST_CASE("adam_step") {
    SUBCASE("first bias-corrected step is close to -lr * sign(g)") {
        MlpParams p;
        p.w1 = Matrix(1, 1, 0.0);
        p.b1.assign(1, 0.0);
        p.w2 = Matrix(1, 1, 0.0);
        p.b2.assign(1, 0.0);
        auto state = dilate::AdamState::for_params(p);
        MlpGrads g = MlpGrads::zeros_like(p);
        g.w1(0, 0) = 2.0;
        adam_step(state, p, g);
        CHECK(p.w1(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
    }
    SUBCASE("zero gradients leave parameters unchanged") {
        auto p = dilate::init_mlp(3, 2, 4, 3);
        const auto before = p;
        auto state = dilate::AdamState::for_params(p);
        const auto g = MlpGrads::zeros_like(p);
        adam_step(state, p, g);
        adam_step(state, p, g);
        for (std::size_t i = 0; i < p.w1.values().size(); ++i) {
            CHECK(p.w1.values()[i] == before.w1.values()[i]);
        }
        for (std::size_t i = 0; i < p.b2.size(); ++i) {
            CHECK(p.b2[i] == before.b2[i]);
        }
    }
    SUBCASE("two steps with constant gradient match the scalar recurrence") {
        MlpParams p;
        p.w1 = Matrix(1, 1, 0.5);
        p.b1.assign(1, 0.0);
        p.w2 = Matrix(1, 1, 0.0);
        p.b2.assign(1, 0.0);
        auto state = dilate::AdamState::for_params(p);
        MlpGrads g = MlpGrads::zeros_like(p);
        g.w1(0, 0) = 0.3;

        // Hand-rolled recurrence.
        double m = 0.0, v = 0.0, param = 0.5;
        const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        for (int t = 1; t <= 2; ++t) {
            m = b1 * m + (1 - b1) * 0.3;
            v = b2 * v + (1 - b2) * 0.09;
            const double mhat = m / (1 - std::pow(b1, t));
            const double vhat = v / (1 - std::pow(b2, t));
            param -= lr * mhat / (std::sqrt(vhat) + eps);
            adam_step(state, p, g);
            CHECK(p.w1(0, 0) == doctest::Approx(param).epsilon(1e-14));
        }
    }
}

TEST_CASE("checkpoint round trip") {
    const auto p = dilate::init_mlp(5, 3, 4, 99);
    const auto path = std::filesystem::temp_directory_path() / "dilate_ckpt_test.txt";
    dilate::save_checkpoint(path.string(), p);
    const auto q = dilate::load_checkpoint(path.string());
    CHECK(q.input_len() == 5);
    CHECK(q.hidden() == 4);
    CHECK(q.horizon() == 3);
    for (std::size_t i = 0; i < p.w1.values().size(); ++i) {
        CHECK(q.w1.values()[i] == p.w1.values()[i]);
    }
    for (std::size_t i = 0; i < p.b2.size(); ++i) {
        CHECK(q.b2[i] == p.b2[i]);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(dilate::load_checkpoint("/nonexistent/ckpt.txt"), dilate::data_error);
}

namespace {

// Tiny deterministic supervised task: predict a fixed linear map of the input.
dilate::Dataset toy_dataset(std::size_t n_samples, std::size_t n, std::size_t k,
                            std::uint64_t seed) {
    dilate::Dataset ds;
    ds.inputs = oracle::random_matrix(n_samples, n, seed);
    ds.targets = Matrix(n_samples, k);
    for (std::size_t i = 0; i < n_samples; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            ds.targets(i, j) = 0.5 * ds.inputs(i, j % n) + 0.1;
        }
    }
    return ds;
}

} // namespace

TEST_CASE("train") {
    SUBCASE("mse on a learnable toy task improves by 10x") {
        const auto train_set = toy_dataset(64, 6, 4, 1);
        const auto valid_set = toy_dataset(16, 6, 4, 2);
        dilate::TrainConfig cfg;
        cfg.loss = dilate::LossKind::mse;
        cfg.max_epochs = 200;
        cfg.patience = 200;
        cfg.batch_size = 16;
        cfg.hidden = 16;
        cfg.seed = 3;
        const auto res = dilate::train(train_set, valid_set, cfg);
        REQUIRE(!res.trace.epochs.empty());
        const double first = res.trace.epochs.front().train_loss;
        const double last = res.trace.epochs.back().train_loss;
        CHECK(last < first / 10.0);
        // Early epochs decrease monotonically on this easy task.
        for (std::size_t e = 1; e < 5; ++e) {
            CHECK(res.trace.epochs[e].train_loss < res.trace.epochs[e - 1].train_loss);
        }
    }
    SUBCASE("identical seeds give bitwise-identical traces") {
        const auto train_set = toy_dataset(32, 5, 3, 4);
        const auto valid_set = toy_dataset(8, 5, 3, 5);
        dilate::TrainConfig cfg;
        cfg.loss = dilate::LossKind::dilate;
        cfg.loss_config.alpha = 0.5;
        cfg.loss_config.gamma = 0.1;
        cfg.max_epochs = 12;
        cfg.patience = 12;
        cfg.batch_size = 8;
        cfg.hidden = 8;
        cfg.seed = 6;
        const auto a = dilate::train(train_set, valid_set, cfg);
        const auto b = dilate::train(train_set, valid_set, cfg);
        REQUIRE(a.trace.epochs.size() == b.trace.epochs.size());
        for (std::size_t e = 0; e < a.trace.epochs.size(); ++e) {
            CHECK(a.trace.epochs[e].train_loss == b.trace.epochs[e].train_loss);
            CHECK(a.trace.epochs[e].valid_loss == b.trace.epochs[e].valid_loss);
        }
        for (std::size_t i = 0; i < a.params.w1.values().size(); ++i) {
            CHECK(a.params.w1.values()[i] == b.params.w1.values()[i]);
        }
    }
    SUBCASE("returned parameters achieve the best recorded validation loss") {
        const auto train_set = toy_dataset(32, 5, 3, 7);
        const auto valid_set = toy_dataset(8, 5, 3, 8);
        dilate::TrainConfig cfg;
        cfg.loss = dilate::LossKind::mse;
        cfg.max_epochs = 40;
        cfg.patience = 10;
        cfg.batch_size = 8;
        cfg.hidden = 8;
        cfg.seed = 9;
        const auto res = dilate::train(train_set, valid_set, cfg);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : res.trace.epochs) {
            best = std::min(best, e.valid_loss);
        }
        CHECK(res.trace.best_valid_loss == best);

        // Re-evaluate the returned parameters: must reproduce that loss.
        double acc = 0.0;
        for (std::size_t i = 0; i < valid_set.size(); ++i) {
            const auto pred = mlp_forward(res.params, valid_set.inputs.row(i));
            acc += dilate::mse_loss(TimeSeries::from_vector(pred),
                                    TimeSeries::from_vector(valid_set.targets.row(i)))
                       .value;
        }
        CHECK(acc / 8.0 == doctest::Approx(best).epsilon(1e-12));
    }
    SUBCASE("empty dataset is a usage error") {
        dilate::Dataset empty;
        const auto valid_set = toy_dataset(8, 5, 3, 8);
        dilate::TrainConfig cfg;
        CHECK_THROWS_AS(dilate::train(empty, valid_set, cfg), std::invalid_argument);
    }
    SUBCASE("seed-deterministic initialization") {
        const auto a = dilate::init_mlp(7, 3, 5, 42);
        const auto b = dilate::init_mlp(7, 3, 5, 42);
        const auto c = dilate::init_mlp(7, 3, 5, 43);
        CHECK(a.w1.values() == b.w1.values());
        CHECK(a.b1 == b.b1);
        CHECK(a.w1.values() != c.w1.values());
    }
}

TEST_CASE("make_loss dispatch") {
    const auto pred = TimeSeries::from_vector(oracle::random_vector(5, 31));
    const auto target = TimeSeries::from_vector(oracle::random_vector(5, 32));
    dilate::LossConfig cfg;
    cfg.alpha = 0.5;
    cfg.gamma = 0.1;
    cfg.band_width = 2;

    const auto dtw = dilate::make_loss(dilate::LossKind::dtw_gamma, cfg, 5);
    CHECK(dtw(pred, target).value == dilate::shape_loss(pred, target, 0.1).value);

    const auto dl = dilate::make_loss(dilate::LossKind::dilate, cfg, 5);
    CHECK(dl(pred, target).value == dilate::dilate_loss(pred, target, cfg).value);

    const auto tw = dilate::make_loss(dilate::LossKind::dilate_tangled_weighted, cfg, 5);
    CHECK(tw(pred, target).value ==
          dilate::dilate_tangled_loss(pred, target, cfg, dilate::weighted_penalty(5)).value);

    cfg.omega_kind = dilate::PenaltyKind::sakoe_chiba;
    const auto tb = dilate::make_loss(dilate::LossKind::dilate_tangled_band, cfg, 5);
    CHECK(tb(pred, target).value ==
          dilate::dilate_tangled_loss(pred, target, cfg, dilate::sakoe_chiba_penalty(5, 2))
              .value);

    CHECK(dilate::loss_kind_from_string("dilate-t-band") ==
          dilate::LossKind::dilate_tangled_band);
    CHECK(dilate::to_string(dilate::LossKind::mse) == "mse");
    CHECK_THROWS_AS(dilate::loss_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("end-to-end gradient of the dilate pipeline through the mlp") {
    const std::size_t n = 6, k = 4, hidden = 8;
    const auto x = oracle::random_vector(n, 21);
    const auto target_v = oracle::random_vector(k, 22);
    const auto target = TimeSeries::from_vector(target_v);
    dilate::LossConfig lcfg;
    lcfg.alpha = 0.5;
    lcfg.gamma = 0.1;

    const auto p = dilate::init_mlp(n, k, hidden, 23);
    MlpCache cache;
    const auto pred = mlp_forward(p, x, &cache);
    const auto loss = dilate::dilate_loss(TimeSeries::from_vector(pred), target, lcfg);
    const auto analytic = mlp_backward(p, cache, loss.grad.row(0));

    auto objective = [&](const MlpParams& params) {
        const auto out = mlp_forward(params, x);
        return dilate::dilate_loss(TimeSeries::from_vector(out), target, lcfg).value;
    };
    auto fd_block = [&](auto get_block, const std::vector<double>& got) {
        MlpParams probe = p;
        std::vector<double> fd(got.size());
        auto& block = get_block(probe);
        for (std::size_t i = 0; i < block.size(); ++i) {
            const double saved = block[i];
            block[i] = saved + 1e-5;
            const double up = objective(probe);
            block[i] = saved - 1e-5;
            const double down = objective(probe);
            block[i] = saved;
            fd[i] = (up - down) / 2e-5;
        }
        CHECK(oracle::rel_error(got, fd, 1e-9) <= 1e-3);
    };
    fd_block([](MlpParams& q) -> std::vector<double>& { return q.w1.values(); },
             analytic.w1.values());
    fd_block([](MlpParams& q) -> std::vector<double>& { return q.b1; }, analytic.b1);
    fd_block([](MlpParams& q) -> std::vector<double>& { return q.w2.values(); },
             analytic.w2.values());
    fd_block([](MlpParams& q) -> std::vector<double>& { return q.b2; }, analytic.b2);
}
