#include "oilcast/gbm.hpp"

#include <cmath>
#include <ostream>
#include <thread>

#include "oilcast/errors.hpp"
#include "oilcast/rng.hpp"
#include "text_util.hpp"

namespace oilcast {

GbmModel estimate_gbm(const PriceSeries& series, double dt) {
    if (series.scale != ScaleKind::raw) {
        throw DomainError("estimate_gbm: needs a raw price series");
    }
    if (series.size() < 3) {
        throw DataError("estimate_gbm: need at least 3 observations, got " +
                        std::to_string(series.size()));
    }
    if (!(dt > 0.0)) {
        throw UsageError("estimate_gbm: dt must be > 0");
    }

    const std::size_t n = series.size() - 1; // log returns
    std::vector<double> returns;
    returns.reserve(n);
    for (std::size_t i = 1; i < series.size(); ++i) {
        returns.push_back(
            std::log(series.observations[i].value / series.observations[i - 1].value));
    }

    double mean = 0.0;
    for (const double r : returns) {
        mean += r;
    }
    mean /= static_cast<double>(n);

    double var = 0.0;
    for (const double r : returns) {
        var += (r - mean) * (r - mean);
    }
    var /= static_cast<double>(n - 1);

    GbmModel model;
    model.dt = dt;
    model.sigma = std::sqrt(var) / std::sqrt(dt);
    model.mu = mean / dt + 0.5 * model.sigma * model.sigma;
    model.s0 = series.observations.back().value;
    return model;
}

PathMatrix simulate_paths(const GbmModel& model, std::size_t horizon, std::size_t num_paths,
                          std::uint64_t seed, unsigned num_threads) {
    if (horizon < 1) {
        throw UsageError("simulate_paths: horizon must be >= 1");
    }
    if (num_paths < 1) {
        throw UsageError("simulate_paths: num_paths must be >= 1");
    }
    if (!(model.s0 > 0.0)) {
        throw DomainError("simulate_paths: s0 must be > 0");
    }
    if (!(model.sigma >= 0.0) || !(model.dt > 0.0)) {
        throw DomainError("simulate_paths: sigma must be >= 0 and dt > 0");
    }

    PathMatrix paths;
    paths.num_paths = num_paths;
    paths.horizon = horizon;
    paths.values.assign(num_paths * (horizon + 1), 0.0);

    const double drift = (model.mu - 0.5 * model.sigma * model.sigma) * model.dt;
    const double vol = model.sigma * std::sqrt(model.dt);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            Rng rng = Rng::substream(seed, p);
            double* row = paths.values.data() + p * (horizon + 1);
            row[0] = model.s0;
            for (std::size_t t = 0; t < horizon; ++t) {
                row[t + 1] = row[t] * std::exp(drift + vol * rng.normal());
            }
        }
    };

    if (num_threads == 0) {
        num_threads = std::max(1u, std::thread::hardware_concurrency());
    }
    const auto workers = static_cast<std::size_t>(num_threads);
    if (workers <= 1 || num_paths < 2 * workers) {
        run_range(0, num_paths);
        return paths;
    }

    // Each path draws only from its own substream and writes only its
    // own row, so the partition has no effect on the result.
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (num_paths + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, num_paths);
        if (begin >= end) {
            break;
        }
        pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) {
        t.join();
    }
    return paths;
}

std::vector<double> mean_path(const PathMatrix& paths) {
    if (paths.num_paths < 1) {
        throw UsageError("mean_path: empty path matrix");
    }
    std::vector<double> mean(paths.horizon + 1, 0.0);
    for (std::size_t p = 0; p < paths.num_paths; ++p) {
        const auto row = paths.path(p);
        for (std::size_t t = 0; t <= paths.horizon; ++t) {
            mean[t] += row[t];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(paths.num_paths);
    }
    return mean;
}

void write_paths_csv(std::ostream& out, const PathMatrix& paths) {
    const auto mean = mean_path(paths);
    out << "step";
    for (std::size_t p = 0; p < paths.num_paths; ++p) {
        out << ",path_" << p;
    }
    out << ",mean\n";
    for (std::size_t t = 0; t <= paths.horizon; ++t) {
        out << t;
        for (std::size_t p = 0; p < paths.num_paths; ++p) {
            out << ',' << detail::format_double(paths.at(p, t));
        }
        out << ',' << detail::format_double(mean[t]) << '\n';
    }
}

} // namespace oilcast
