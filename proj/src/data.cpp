#include "dilate/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dilate/errors.hpp"

namespace dilate {

namespace {

struct SyntheticDraw {
    std::size_t i1 = 0;
    std::size_t i2 = 0;
    std::size_t step_local = 0; // 1-based index within the target window
    double j1 = 0.0;
    double j2 = 0.0;
};

SyntheticDraw draw_series(const SyntheticSpec& spec, std::mt19937_64& rng) {
    const std::size_t n = spec.input_len;
    const std::size_t k = spec.horizon;
    std::uniform_int_distribution<std::size_t> pos(1, n);
    std::uniform_int_distribution<int> offset(-3, 3);
    std::uniform_real_distribution<double> amp(0.0, 1.0);

    SyntheticDraw d;
    constexpr int max_attempts = 10000;
    int attempt = 0;
    for (;; ++attempt) {
        if (attempt >= max_attempts) {
            throw std::invalid_argument(
                "generate_synthetic: window too short for the peak/step constraints");
        }
        const std::size_t i1 = pos(rng);
        const std::size_t i2 = pos(rng);
        const int off = offset(rng);
        if (i1 >= i2) {
            continue;
        }
        const long step_global = static_cast<long>(i2) + static_cast<long>(i2 - i1) + off;
        const long step_local = step_global - static_cast<long>(n);
        // Strictly inside the target window: both levels stay visible.
        if (step_local < 2 || step_local > static_cast<long>(k) - 1) {
            continue;
        }
        d.i1 = i1;
        d.i2 = i2;
        d.step_local = static_cast<std::size_t>(step_local);
        break;
    }
    d.j1 = amp(rng);
    d.j2 = amp(rng);
    return d;
}

Dataset generate_split(const SyntheticSpec& spec, const std::string& name,
                       std::mt19937_64& rng) {
    const std::size_t n = spec.input_len;
    const std::size_t k = spec.horizon;
    Dataset out;
    out.split = name;
    out.seed = spec.seed;
    out.inputs = Matrix(spec.n_series, n, 0.0);
    out.targets = Matrix(spec.n_series, k, 0.0);
    out.step_index.resize(spec.n_series);

    const double sigma = std::sqrt(spec.noise_variance);
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);

    for (std::size_t s = 0; s < spec.n_series; ++s) {
        const SyntheticDraw d = draw_series(spec, rng);
        auto in = out.inputs.row(s);
        auto tg = out.targets.row(s);
        in[d.i1 - 1] = d.j1;
        in[d.i2 - 1] = d.j2;
        for (std::size_t t = 1; t <= k; ++t) {
            tg[t - 1] = t < d.step_local ? d.j1 : d.j2;
        }
        if (sigma > 0.0) {
            for (double& v : in) {
                v += noise(rng);
            }
            for (double& v : tg) {
                v += noise(rng);
            }
        }
        out.step_index[s] = d.step_local;
    }
    return out;
}

} // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.input_len < 2 || spec.horizon < 3) {
        throw std::invalid_argument("generate_synthetic: need input_len >= 2 and horizon >= 3");
    }
    if (spec.series_len != spec.input_len + spec.horizon) {
        throw std::invalid_argument("generate_synthetic: series_len must equal input_len + horizon");
    }
    if (spec.n_series == 0) {
        throw std::invalid_argument("generate_synthetic: n_series must be positive");
    }
    if (spec.noise_variance < 0.0) {
        throw std::invalid_argument("generate_synthetic: noise variance must be >= 0");
    }
    std::mt19937_64 rng(spec.seed);
    SyntheticData data;
    data.train = generate_split(spec, "train", rng);
    data.valid = generate_split(spec, "valid", rng);
    data.test = generate_split(spec, "test", rng);
    return data;
}

namespace {

void write_split_csv(const std::string& path, const Dataset& ds) {
    std::ofstream os(path);
    if (!os) {
        throw data_error("cannot write dataset file: " + path);
    }
    os.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto in = ds.inputs.row(i);
        const auto tg = ds.targets.row(i);
        for (std::size_t j = 0; j < in.size(); ++j) {
            os << in[j] << ',';
        }
        for (std::size_t j = 0; j < tg.size(); ++j) {
            os << tg[j] << (j + 1 == tg.size() ? '\n' : ',');
        }
    }
}

} // namespace

void save_synthetic(const std::string& dir, const SyntheticData& data,
                    const SyntheticSpec& spec) {
    write_split_csv(dir + "/train.csv", data.train);
    write_split_csv(dir + "/valid.csv", data.valid);
    write_split_csv(dir + "/test.csv", data.test);

    nlohmann::json meta;
    meta["seed"] = spec.seed;
    meta["spec"] = {
        {"n_series", spec.n_series},   {"series_len", spec.series_len},
        {"input_len", spec.input_len}, {"horizon", spec.horizon},
        {"noise_variance", spec.noise_variance},
    };
    meta["constraints"] = "peaks ordered i1 < i2; step strictly inside the target window";
    meta["step_indices"] = {
        {"train", data.train.step_index},
        {"valid", data.valid.step_index},
        {"test", data.test.step_index},
    };
    std::ofstream os(dir + "/meta.json");
    if (!os) {
        throw data_error("cannot write dataset sidecar: " + dir + "/meta.json");
    }
    os << meta.dump(2) << '\n';
}

namespace {

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const std::string& path) {
    const auto begin = cell.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        throw data_error(path + ": empty cell at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    }
    const auto end = cell.find_last_not_of(" \t\r") + 1;
    double value = 0.0;
    const char* first = cell.data() + begin;
    const char* last = cell.data() + end;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw data_error(path + ": malformed numeric cell at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    }
    return value;
}

} // namespace

Matrix load_csv(const std::string& path, bool has_header, bool long_form) {
    std::ifstream is(path);
    if (!is) {
        throw data_error("cannot open csv file: " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (lineno == 1 && has_header) {
            continue;
        }
        if (line.empty() || line == "\r") {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            row.push_back(parse_cell(cell, lineno, col, path));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw data_error(path + ": inconsistent column count at row " +
                             std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw data_error(path + ": no data rows");
    }

    if (long_form) {
        // Single column of values -> one long series.
        Matrix out(1, rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != 1) {
                throw data_error(path + ": long-form input must have exactly one column");
            }
            out(0, i) = rows[i][0];
        }
        return out;
    }
    Matrix out(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            out(i, j) = rows[i][j];
        }
    }
    return out;
}

Dataset window_series(std::span<const double> series, std::size_t input_len,
                      std::size_t horizon, std::size_t stride) {
    if (input_len == 0 || horizon == 0 || stride == 0) {
        throw std::invalid_argument("window_series: lengths and stride must be positive");
    }
    const std::size_t need = input_len + horizon;
    if (series.size() < need) {
        throw data_error("window_series: series too short (" + std::to_string(series.size()) +
                         " < " + std::to_string(need) + ")");
    }
    const std::size_t count = (series.size() - need) / stride + 1;
    Dataset out;
    out.inputs = Matrix(count, input_len);
    out.targets = Matrix(count, horizon);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t off = w * stride;
        for (std::size_t j = 0; j < input_len; ++j) {
            out.inputs(w, j) = series[off + j];
        }
        for (std::size_t j = 0; j < horizon; ++j) {
            out.targets(w, j) = series[off + input_len + j];
        }
    }
    return out;
}

SplitSeries chronological_split(std::span<const double> series,
                                std::array<double, 3> fractions,
                                std::size_t min_len) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) {
            throw std::invalid_argument("chronological_split: fractions must be non-negative");
        }
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("chronological_split: fractions must sum to 1");
    }
    const double total = static_cast<double>(series.size());
    const std::size_t b1 = static_cast<std::size_t>(std::floor(total * fractions[0]));
    const std::size_t b2 = static_cast<std::size_t>(std::floor(total * (fractions[0] + fractions[1])));

    SplitSeries out;
    out.train.assign(series.begin(), series.begin() + b1);
    out.valid.assign(series.begin() + b1, series.begin() + b2);
    out.test.assign(series.begin() + b2, series.end());
    if (out.train.size() < min_len || out.valid.size() < min_len || out.test.size() < min_len) {
        throw std::invalid_argument("chronological_split: degenerate segment (needs >= " +
                                    std::to_string(min_len) + " samples)");
    }
    return out;
}

void minmax_scale(std::span<double> series) {
    if (series.empty()) {
        return;
    }
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    const double range = *hi - *lo;
    if (range <= 0.0) {
        return;
    }
    const double base = *lo;
    for (double& v : series) {
        v = (v - base) / range;
    }
}

} // namespace dilate
