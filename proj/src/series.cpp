#include "fuzconv/series.hpp"

#include <cmath>

#include "fuzconv/errors.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

RawSeries::RawSeries(std::string name_, std::vector<double> timestamps_, std::vector<double> values_)
    : name(std::move(name_)), timestamps(std::move(timestamps_)), values(std::move(values_)) {
    validate();
}

RawSeries RawSeries::make_with_unit_ticks(std::string name, std::vector<double> values) {
    std::vector<double> ts(values.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i + 1);
    return RawSeries(std::move(name), std::move(ts), std::move(values));
}

void RawSeries::validate() const {
    if (values.size() < 2) {
        raise(ErrorCode::SeriesTooShort,
              "series '" + name + "' has " + std::to_string(values.size()) +
                  " observations, need at least 2");
    }
    if (timestamps.size() != values.size()) {
        raise(ErrorCode::LengthMismatch,
              "series '" + name + "': timestamp count " + std::to_string(timestamps.size()) +
                  " != value count " + std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || !std::isfinite(timestamps[i])) {
            raise(ErrorCode::NonFiniteInput,
                  "series '" + name + "': non-finite entry at index " + std::to_string(i));
        }
        if (i > 0 && !(timestamps[i] > timestamps[i - 1])) {
            raise(ErrorCode::NonMonotoneTimestamps,
                  "series '" + name + "': timestamps not strictly increasing at index " +
                      std::to_string(i));
        }
    }
}

double DiffSeries::last_level() const {
    KahanSum acc;
    acc.add(anchor);
    for (double v : values) acc.add(v);
    return acc.value();
}

DiffSeries difference(const RawSeries& series) {
    series.validate();
    DiffSeries out;
    out.anchor = series.values.front();
    const std::size_t n = series.values.size() - 1;
    out.values.resize(n);
    out.timestamps.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = series.values[i + 1] - series.values[i];
        out.timestamps[i] = series.timestamps[i + 1];
    }
    return out;
}

std::vector<double> restore(const DiffSeries& diff, const std::vector<double>& predicted_diffs) {
    for (double v : predicted_diffs) {
        if (!std::isfinite(v)) {
            raise(ErrorCode::NonFiniteInput, "predicted diff is not finite");
        }
    }
    KahanSum acc;
    acc.add(diff.anchor);
    for (double v : diff.values) acc.add(v);

    std::vector<double> out;
    out.reserve(predicted_diffs.size());
    for (double v : predicted_diffs) {
        acc.add(v);
        out.push_back(acc.value());
    }
    return out;
}

} // namespace fuzconv
