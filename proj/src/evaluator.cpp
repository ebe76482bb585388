#include "fuzconv/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "fuzconv/errors.hpp"

namespace fuzconv {

namespace {

void check_pair(const std::vector<double>& pred, const std::vector<double>& actual) {
    if (pred.empty() || actual.empty()) {
        raise(ErrorCode::EmptyInput, "metric over empty sequences");
    }
    if (pred.size() != actual.size()) {
        raise(ErrorCode::LengthMismatch, "prediction length " + std::to_string(pred.size()) +
                                             " != actual length " + std::to_string(actual.size()));
    }
}

} // namespace

double mae(const std::vector<double>& pred, const std::vector<double>& actual) {
    check_pair(pred, actual);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - actual[i]);
    return acc / static_cast<double>(pred.size());
}

double rmse(const std::vector<double>& pred, const std::vector<double>& actual) {
    check_pair(pred, actual);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        acc += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

double nemenyi_cd(int k, int n_datasets, double q_alpha) {
    if (k < 2) raise(ErrorCode::BadArity, "Nemenyi comparison needs k >= 2 models");
    if (n_datasets < 1) raise(ErrorCode::BadArity, "Nemenyi comparison needs >= 1 dataset");
    if (!(q_alpha > 0)) raise(ErrorCode::BadArity, "q_alpha must be positive");
    return q_alpha * std::sqrt(static_cast<double>(k) * (k + 1) / (6.0 * n_datasets));
}

double nemenyi_q05(int k) {
    // q_0.05 for the Nemenyi test, k = 2..20 (infinite-df studentized range
    // over sqrt(2); Demsar 2006, "Statistical Comparisons of Classifiers over
    // Multiple Data Sets", Table 5a).
    static const double table[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031,
                                   3.102, 3.164, 3.219, 3.268, 3.313, 3.354, 3.391,
                                   3.426, 3.458, 3.489, 3.517, 3.544};
    if (k < 2 || k > 20) {
        raise(ErrorCode::BadArity, "q_0.05 table covers k in [2, 20], got k=" + std::to_string(k));
    }
    return table[k - 2];
}

std::vector<double> persistence_forecast(const std::vector<double>& history, int horizon) {
    if (history.empty()) raise(ErrorCode::EmptyInput, "persistence needs at least one observation");
    return std::vector<double>(static_cast<std::size_t>(horizon), history.back());
}

std::vector<double> seasonal_naive_forecast(const std::vector<double>& history, int horizon,
                                            int period) {
    if (period < 2 || static_cast<std::size_t>(period) > history.size()) {
        return persistence_forecast(history, horizon);
    }
    std::vector<double> out(static_cast<std::size_t>(horizon));
    const std::size_t base = history.size() - static_cast<std::size_t>(period);
    for (int h = 0; h < horizon; ++h) {
        out[static_cast<std::size_t>(h)] = history[base + static_cast<std::size_t>(h % period)];
    }
    return out;
}

double ForecastReport::aggregate_mae() const {
    if (series.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : series) acc += s.mae_value;
    return acc / static_cast<double>(series.size());
}

double ForecastReport::aggregate_rmse() const {
    if (series.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : series) acc += s.rmse_value;
    return acc / static_cast<double>(series.size());
}

std::size_t ForecastReport::total_clamps() const {
    std::size_t acc = 0;
    for (const auto& s : series) acc += s.clamp_count;
    return acc;
}

RankSummary rank_models(const std::vector<std::string>& models,
                        const std::vector<std::vector<double>>& metric_rows, double q_alpha) {
    const std::size_t k = models.size();
    if (k < 2) raise(ErrorCode::BadArity, "rank comparison needs >= 2 models");
    if (metric_rows.empty()) raise(ErrorCode::EmptyInput, "rank comparison needs >= 1 dataset row");

    RankSummary summary;
    summary.models = models;
    summary.mean_ranks.assign(k, 0.0);
    for (const auto& row : metric_rows) {
        if (row.size() != k) {
            raise(ErrorCode::LengthMismatch, "metric row width differs from model count");
        }
        // rank with ties averaged
        for (std::size_t i = 0; i < k; ++i) {
            double rank = 1.0;
            int ties = 0;
            for (std::size_t j = 0; j < k; ++j) {
                if (j == i) continue;
                if (row[j] < row[i]) rank += 1.0;
                if (row[j] == row[i]) ++ties;
            }
            summary.mean_ranks[i] += rank + ties / 2.0;
        }
    }
    for (auto& r : summary.mean_ranks) r /= static_cast<double>(metric_rows.size());
    summary.dataset_count = static_cast<int>(metric_rows.size());
    summary.critical_distance =
        nemenyi_cd(static_cast<int>(k), summary.dataset_count, q_alpha);
    return summary;
}

} // namespace fuzconv
