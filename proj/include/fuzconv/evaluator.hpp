#ifndef FUZCONV_EVALUATOR_HPP
#define FUZCONV_EVALUATOR_HPP

#include <optional>
#include <string>
#include <vector>

namespace fuzconv {

/// Mean absolute error. Lengths must match and be nonzero.
double mae(const std::vector<double>& pred, const std::vector<double>& actual);

/// Root mean square error. Always >= mae on the same pair.
double rmse(const std::vector<double>& pred, const std::vector<double>& actual);

/**
 * @brief Nemenyi critical distance q_alpha * sqrt(k*(k+1) / (6*N_d)) for k
 * compared models over N_d datasets.
 */
double nemenyi_cd(int k, int n_datasets, double q_alpha);

/// Two-tailed Nemenyi critical values at alpha = 0.05 for k in [2, 20]
/// (studentized range statistic divided by sqrt(2); Demsar 2006, Table 5).
double nemenyi_q05(int k);

/// Repeat the last observed level `horizon` times.
std::vector<double> persistence_forecast(const std::vector<double>& history, int horizon);

/// Repeat the last full period; falls back to persistence when the history
/// is shorter than one period or the period is < 2.
std::vector<double> seasonal_naive_forecast(const std::vector<double>& history, int horizon,
                                            int period);

// ---------------------------------------------------------------------------
// Forecast reports
// ---------------------------------------------------------------------------

struct SeriesReport {
    std::string name;
    std::vector<double> predictions;
    std::vector<double> actuals; // empty when forecasting past the data
    double mae_value = 0.0;
    double rmse_value = 0.0;
    std::size_t clamp_count = 0;
    double persistence_mae = 0.0;
    double persistence_rmse = 0.0;
    std::optional<double> seasonal_mae;
    std::optional<double> seasonal_rmse;
};

struct ForecastReport {
    std::string dataset;
    std::string model_fingerprint;
    std::vector<SeriesReport> series;

    double aggregate_mae() const;
    double aggregate_rmse() const;
    std::size_t total_clamps() const;
};

// ---------------------------------------------------------------------------
// Rank comparison over a metric table (rows = datasets, columns = models)
// ---------------------------------------------------------------------------

struct RankSummary {
    std::vector<std::string> models;
    std::vector<double> mean_ranks; // average rank per model, ties averaged
    int dataset_count = 0;
    double critical_distance = 0.0; // at the supplied q_alpha
};

/// Ranks per dataset (1 = best = lowest metric), averaged over datasets.
RankSummary rank_models(const std::vector<std::string>& models,
                        const std::vector<std::vector<double>>& metric_rows, double q_alpha);

} // namespace fuzconv

#endif
