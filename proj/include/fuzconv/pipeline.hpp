#ifndef FUZCONV_PIPELINE_HPP
#define FUZCONV_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "fuzconv/data_io.hpp"
#include "fuzconv/evaluator.hpp"
#include "fuzconv/model.hpp"
#include "fuzconv/series.hpp"
#include "fuzconv/trainer.hpp"

namespace fuzconv {

/**
 * @brief One train-and-forecast pass over a single series.
 *
 * The final `horizon` observations are held out as the test region; the
 * model trains on everything before it, rolls the forecast out
 * autoregressively, and is scored on restored levels against the held-out
 * actuals together with naive baselines.
 */
struct SeriesRunResult {
    SeriesReport report;
    std::vector<EpochStats> trace;
    Checkpoint checkpoint;
};

SeriesRunResult run_series(const RawSeries& series, const ModelConfig& model_cfg,
                           const TrainConfig& train_cfg, std::optional<int> period);

/// Forecast `horizon` steps past the end of the series with an existing
/// checkpoint (no held-out actuals, so no metrics).
SeriesReport forecast_series(const RawSeries& series, const Checkpoint& ckpt,
                             const ModelConfig& model_cfg, int horizon);

/// Load every series a manifest points to, horizon resolved with precedence
/// CLI flag > manifest > TSF header (the resolution is logged).
struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<RawSeries> series;
    int horizon = 0;
    std::optional<int> period;
};
LoadedDataset load_dataset(const DatasetManifest& manifest, std::optional<int> horizon_override);

/// Train + forecast every series of a dataset; `workers` > 1 runs series on
/// parallel threads (independent model instances).
ForecastReport run_dataset(const LoadedDataset& dataset, const ModelConfig& model_cfg,
                           const TrainConfig& train_cfg, int workers,
                           std::vector<SeriesRunResult>* details = nullptr);

} // namespace fuzconv

#endif
