#include "fuzconv/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "fuzconv/errors.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

SeriesRunResult run_series(const RawSeries& series, const ModelConfig& model_cfg,
                           const TrainConfig& train_cfg, std::optional<int> period) {
    series.validate();
    const std::size_t n = series.length();
    const std::size_t horizon = static_cast<std::size_t>(train_cfg.horizon);
    // training region must leave at least one supervised pair:
    // (n - horizon - 1) diffs >= window_size + 1
    if (n < horizon + static_cast<std::size_t>(model_cfg.window_size) + 3) {
        raise(ErrorCode::NoTrainingPairs,
              "series '" + series.name + "' too short (" + std::to_string(n) +
                  ") for horizon " + std::to_string(horizon) + " and window " +
                  std::to_string(model_cfg.window_size));
    }

    RawSeries train_part;
    train_part.name = series.name;
    train_part.timestamps.assign(series.timestamps.begin(),
                                 series.timestamps.end() - static_cast<std::ptrdiff_t>(horizon));
    train_part.values.assign(series.values.begin(),
                             series.values.end() - static_cast<std::ptrdiff_t>(horizon));
    std::vector<double> actual(series.values.end() - static_cast<std::ptrdiff_t>(horizon),
                               series.values.end());

    const DiffSeries diff = difference(train_part);
    const FuzzifiedDataset data = fuzzify(diff, static_cast<std::size_t>(model_cfg.window_size));

    SeriesRunResult out;
    TrainResult tr = train(data, model_cfg, train_cfg);
    out.trace = std::move(tr.trace);
    out.checkpoint = std::move(tr.checkpoint);

    UniverseOfDiscourse universe;
    ForecastModel model = model_from_checkpoint(out.checkpoint, model_cfg, &universe);
    RolloutResult roll = rollout(model, universe, diff, diff.length(), train_cfg.horizon);

    SeriesReport& rep = out.report;
    rep.name = series.name;
    rep.predictions = restore(diff, roll.diffs);
    rep.actuals = actual;
    rep.clamp_count = roll.clamp_count;
    rep.mae_value = mae(rep.predictions, actual);
    rep.rmse_value = rmse(rep.predictions, actual);

    const auto persistence = persistence_forecast(train_part.values, train_cfg.horizon);
    rep.persistence_mae = mae(persistence, actual);
    rep.persistence_rmse = rmse(persistence, actual);
    if (period.has_value()) {
        const auto seasonal =
            seasonal_naive_forecast(train_part.values, train_cfg.horizon, *period);
        rep.seasonal_mae = mae(seasonal, actual);
        rep.seasonal_rmse = rmse(seasonal, actual);
    }
    return out;
}

SeriesReport forecast_series(const RawSeries& series, const Checkpoint& ckpt,
                             const ModelConfig& model_cfg, int horizon) {
    series.validate();
    UniverseOfDiscourse universe;
    ForecastModel model = model_from_checkpoint(ckpt, model_cfg, &universe);
    const DiffSeries diff = difference(series);
    RolloutResult roll = rollout(model, universe, diff, diff.length(), horizon);

    SeriesReport rep;
    rep.name = series.name;
    rep.predictions = restore(diff, roll.diffs);
    rep.clamp_count = roll.clamp_count;
    return rep;
}

LoadedDataset load_dataset(const DatasetManifest& manifest, std::optional<int> horizon_override) {
    LoadedDataset out;
    out.manifest = manifest;

    std::optional<int> tsf_horizon;
    std::string tsf_frequency;
    if (manifest.format == "tsf") {
        TsfDataset tsf = load_tsf(manifest.path);
        out.series = std::move(tsf.series);
        tsf_horizon = tsf.horizon;
        tsf_frequency = tsf.frequency;
    } else {
        out.series = load_csv(manifest.path);
    }

    if (!manifest.series_filter.empty()) {
        std::vector<RawSeries> kept;
        for (const auto& name : manifest.series_filter) {
            bool found = false;
            for (auto& s : out.series) {
                if (s.name == name) {
                    kept.push_back(std::move(s));
                    found = true;
                    break;
                }
            }
            if (!found) {
                raise(ErrorCode::ParseError,
                      "manifest series '" + name + "' not present in " + manifest.path);
            }
        }
        out.series = std::move(kept);
    }

    // horizon precedence: CLI flag > manifest > TSF header
    if (horizon_override.has_value() && *horizon_override > 0) {
        out.horizon = *horizon_override;
        log_info("horizon " + std::to_string(out.horizon) + " (from command line)");
    } else if (manifest.horizon > 0) {
        out.horizon = manifest.horizon;
        log_info("horizon " + std::to_string(out.horizon) + " (from manifest)");
    } else if (tsf_horizon.has_value() && *tsf_horizon > 0) {
        out.horizon = *tsf_horizon;
        log_info("horizon " + std::to_string(out.horizon) + " (from tsf header)");
    } else {
        raise(ErrorCode::InvalidConfig,
              "no forecast horizon: set one on the command line, in the manifest, or in the "
              "tsf header");
    }

    if (manifest.period.has_value()) {
        out.period = manifest.period;
    } else {
        const std::string freq =
            !manifest.frequency.empty() ? manifest.frequency : tsf_frequency;
        out.period = period_for_frequency(freq);
    }
    return out;
}

ForecastReport run_dataset(const LoadedDataset& dataset, const ModelConfig& model_cfg,
                           const TrainConfig& train_cfg, int workers,
                           std::vector<SeriesRunResult>* details) {
    if (dataset.series.empty()) {
        raise(ErrorCode::EmptyInput, "dataset '" + dataset.manifest.name + "' has no series");
    }
    TrainConfig tc = train_cfg;
    tc.horizon = dataset.horizon;

    std::vector<SeriesRunResult> results(dataset.series.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < dataset.series.size(); ++i) {
            results[i] = run_series(dataset.series[i], model_cfg, tc, dataset.period);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(dataset.series.size());
        const int count = std::min<int>(workers, static_cast<int>(dataset.series.size()));
        for (int t = 0; t < count; ++t) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= dataset.series.size()) return;
                    try {
                        results[i] = run_series(dataset.series[i], model_cfg, tc, dataset.period);
                    } catch (...) {
                        failures[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    ForecastReport report;
    report.dataset = dataset.manifest.name;
    for (auto& r : results) {
        report.series.push_back(r.report);
        if (report.model_fingerprint.empty()) {
            report.model_fingerprint = to_hex(r.checkpoint.config_fingerprint);
        }
    }
    if (details != nullptr) *details = std::move(results);
    return report;
}

} // namespace fuzconv
