#include "dilate/mlp.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "dilate/errors.hpp"

namespace dilate {

namespace {

void fill_uniform(std::span<double> out, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : out) {
        v = dist(rng);
    }
}

} // namespace

MlpParams init_mlp(std::size_t input_len, std::size_t horizon,
                   std::size_t hidden, std::uint64_t seed) {
    if (input_len == 0 || horizon == 0 || hidden == 0) {
        throw std::invalid_argument("init_mlp: all sizes must be positive");
    }
    MlpParams p;
    p.w1 = Matrix(hidden, input_len);
    p.b1.assign(hidden, 0.0);
    p.w2 = Matrix(horizon, hidden);
    p.b2.assign(horizon, 0.0);

    std::mt19937_64 rng(seed);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_len));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill_uniform(p.w1.values(), bound1, rng);
    fill_uniform(p.b1, bound1, rng);
    fill_uniform(p.w2.values(), bound2, rng);
    fill_uniform(p.b2, bound2, rng);
    return p;
}

std::vector<double> mlp_forward(const MlpParams& params,
                                std::span<const double> input,
                                MlpCache* cache) {
    const std::size_t n = params.input_len();
    const std::size_t h = params.hidden();
    const std::size_t k = params.horizon();
    if (input.size() != n) {
        throw std::invalid_argument("mlp_forward: input length mismatch");
    }

    std::vector<double> z1(h);
    for (std::size_t i = 0; i < h; ++i) {
        double acc = params.b1[i];
        const auto row = params.w1.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            acc += row[j] * input[j];
        }
        z1[i] = acc;
    }
    std::vector<double> a1(h);
    for (std::size_t i = 0; i < h; ++i) {
        a1[i] = z1[i] > 0.0 ? z1[i] : 0.0;
    }
    std::vector<double> pred(k);
    for (std::size_t i = 0; i < k; ++i) {
        double acc = params.b2[i];
        const auto row = params.w2.row(i);
        for (std::size_t j = 0; j < h; ++j) {
            acc += row[j] * a1[j];
        }
        pred[i] = acc;
    }
    if (cache != nullptr) {
        cache->input.assign(input.begin(), input.end());
        cache->z1 = std::move(z1);
        cache->a1 = std::move(a1);
    }
    return pred;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
    MlpGrads g;
    g.w1 = Matrix(params.w1.rows(), params.w1.cols());
    g.b1.assign(params.b1.size(), 0.0);
    g.w2 = Matrix(params.w2.rows(), params.w2.cols());
    g.b2.assign(params.b2.size(), 0.0);
    return g;
}

void MlpGrads::accumulate(const MlpGrads& other) {
    for (std::size_t i = 0; i < w1.values().size(); ++i) {
        w1.values()[i] += other.w1.values()[i];
    }
    for (std::size_t i = 0; i < b1.size(); ++i) {
        b1[i] += other.b1[i];
    }
    for (std::size_t i = 0; i < w2.values().size(); ++i) {
        w2.values()[i] += other.w2.values()[i];
    }
    for (std::size_t i = 0; i < b2.size(); ++i) {
        b2[i] += other.b2[i];
    }
}

void MlpGrads::scale(double factor) {
    for (double& v : w1.values()) v *= factor;
    for (double& v : b1) v *= factor;
    for (double& v : w2.values()) v *= factor;
    for (double& v : b2) v *= factor;
}

MlpGrads mlp_backward(const MlpParams& params, const MlpCache& cache,
                      std::span<const double> grad_pred) {
    const std::size_t n = params.input_len();
    const std::size_t h = params.hidden();
    const std::size_t k = params.horizon();
    if (cache.input.size() != n || cache.z1.size() != h || cache.a1.size() != h) {
        throw std::invalid_argument("mlp_backward: cache does not match parameters");
    }
    if (grad_pred.size() != k) {
        throw std::invalid_argument("mlp_backward: grad_pred length mismatch");
    }

    MlpGrads g = MlpGrads::zeros_like(params);
    // Output layer.
    for (std::size_t i = 0; i < k; ++i) {
        const double gp = grad_pred[i];
        g.b2[i] = gp;
        auto row = g.w2.row(i);
        for (std::size_t j = 0; j < h; ++j) {
            row[j] = gp * cache.a1[j];
        }
    }
    // Hidden layer through the relu mask (subgradient 0 at z = 0).
    std::vector<double> dz1(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
        if (cache.z1[j] > 0.0) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                acc += params.w2(i, j) * grad_pred[i];
            }
            dz1[j] = acc;
        }
    }
    for (std::size_t j = 0; j < h; ++j) {
        g.b1[j] = dz1[j];
        auto row = g.w1.row(j);
        for (std::size_t i = 0; i < n; ++i) {
            row[i] = dz1[j] * cache.input[i];
        }
    }
    return g;
}

namespace {

void write_block(std::ostream& os, std::span<const double> v) {
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << v[i] << (i + 1 == v.size() ? '\n' : ' ');
    }
}

std::vector<double> read_block(std::istream& is, std::size_t count,
                               const std::string& path) {
    std::vector<double> out(count);
    for (double& v : out) {
        if (!(is >> v)) {
            throw data_error("checkpoint truncated: " + path);
        }
    }
    return out;
}

} // namespace

void save_checkpoint(const std::string& path, const MlpParams& params) {
    std::ofstream os(path);
    if (!os) {
        throw data_error("cannot write checkpoint: " + path);
    }
    os << "dilate-mlp v1\n";
    os << params.input_len() << ' ' << params.hidden() << ' ' << params.horizon() << '\n';
    write_block(os, params.w1.values());
    write_block(os, params.b1);
    write_block(os, params.w2.values());
    write_block(os, params.b2);
    if (!os) {
        throw data_error("failed while writing checkpoint: " + path);
    }
}

MlpParams load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw data_error("cannot read checkpoint: " + path);
    }
    std::string tag, version;
    is >> tag >> version;
    if (tag != "dilate-mlp" || version != "v1") {
        throw data_error("unrecognized checkpoint format: " + path);
    }
    std::size_t n = 0, h = 0, k = 0;
    if (!(is >> n >> h >> k) || n == 0 || h == 0 || k == 0) {
        throw data_error("bad checkpoint header: " + path);
    }
    MlpParams p;
    p.w1 = Matrix(h, n);
    p.w1.values() = read_block(is, h * n, path);
    p.b1 = read_block(is, h, path);
    p.w2 = Matrix(k, h);
    p.w2.values() = read_block(is, k * h, path);
    p.b2 = read_block(is, k, path);
    return p;
}

} // namespace dilate
