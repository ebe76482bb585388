#ifndef FUZCONV_DATA_IO_HPP
#define FUZCONV_DATA_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "fuzconv/evaluator.hpp"
#include "fuzconv/fuzzifier.hpp"
#include "fuzconv/series.hpp"

namespace fuzconv {

/**
 * @brief Dataset description: where the data lives, how far to forecast, and
 * what frequency it carries. Multivariate datasets are a bundle of named
 * univariate series handled independently.
 */
struct DatasetManifest {
    std::string name;
    std::string path;
    std::string format = "csv"; // csv | tsf
    int horizon = 0;            // 0 = unset; must come from somewhere before use
    std::string frequency;      // optional label: daily, hourly, ...
    std::optional<int> period;  // explicit seasonal period, overrides frequency mapping
    std::vector<std::string> series_filter; // optional subset of series names
};

DatasetManifest load_manifest(const std::string& path);

/// Seasonal period implied by a frequency label (daily -> 7, hourly -> 24,
/// monthly -> 12, quarterly -> 4, weekly -> 52); empty when unknown.
std::optional<int> period_for_frequency(const std::string& frequency);

// ---------------------------------------------------------------------------
// CSV: either `series,timestamp,value` rows or one bare value per line.
// ---------------------------------------------------------------------------

std::vector<RawSeries> load_csv(const std::string& path);
void write_csv(const std::vector<RawSeries>& series, const std::string& path);

// ---------------------------------------------------------------------------
// TSF (Monash forecasting archive conventions): @attribute/@data header,
// colon-separated attribute fields per row, comma-separated values last.
// ---------------------------------------------------------------------------

struct TsfDataset {
    std::vector<RawSeries> series;
    std::optional<int> horizon;      // from @horizon when present
    std::string frequency;           // from @frequency when present
};

TsfDataset load_tsf(const std::string& path);
void write_tsf(const TsfDataset& dataset, const std::string& relation_name,
               const std::string& path);

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

/// CSV `series,step,predicted,actual` plus a JSON sidecar (metrics, clamp
/// counters, baselines) at path + ".json".
void write_forecast(const ForecastReport& report, const std::string& path);

/// Recompute per-series MAE/RMSE from a forecast CSV written above; rows
/// without actuals are skipped.
struct RecomputedMetrics {
    std::vector<std::string> series;
    std::vector<double> mae_values;
    std::vector<double> rmse_values;
};
RecomputedMetrics recompute_from_forecast_csv(const std::string& path);

/// Feature dump: `window_id,row,col,value` rows for every window tensor.
void write_window_dump(const FuzzifiedDataset& data, const std::string& path);
std::vector<FuzzyWindowTensor> load_window_dump(const std::string& path);

/// Wide metric table: header `dataset,<model...>`, one row of metric values
/// per dataset. Used for rank comparisons.
struct MetricTable {
    std::vector<std::string> models;
    std::vector<std::string> datasets;
    std::vector<std::vector<double>> rows;
};
MetricTable load_metric_table(const std::string& path);

} // namespace fuzconv

#endif
