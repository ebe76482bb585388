#ifndef FUZCONV_SERIES_HPP
#define FUZCONV_SERIES_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace fuzconv {

/**
 * @brief A univariate observation sequence with strictly increasing time
 * coordinates.
 *
 * Sources without explicit timestamps get synthetic unit ticks 1..N (see
 * make_with_unit_ticks), so that downstream slope computations are
 * deterministic.
 */
struct RawSeries {
    std::string name;
    std::vector<double> timestamps;
    std::vector<double> values;

    RawSeries() = default;
    RawSeries(std::string name_, std::vector<double> timestamps_, std::vector<double> values_);

    static RawSeries make_with_unit_ticks(std::string name, std::vector<double> values);

    std::size_t length() const { return values.size(); }

    /// Throws on violated invariants (length >= 2, monotone timestamps, finite values).
    void validate() const;
};

/**
 * @brief First-difference sequence plus the anchor needed for exact
 * restoration.
 *
 * values[i] is the step between two adjacent source observations; each
 * timestamp carries the later endpoint's coordinate.
 */
struct DiffSeries {
    double anchor = 0.0;                // first value of the source series
    std::vector<double> timestamps;     // later endpoint of each pair
    std::vector<double> values;

    std::size_t length() const { return values.size(); }

    /// Level of the series after all known diffs are applied (anchor + sum of diffs).
    double last_level() const;
};

/// First-difference a raw series. Pure; the input is untouched.
DiffSeries difference(const RawSeries& series);

/**
 * @brief Turn difference-domain predictions back into levels.
 *
 * The chain anchors once on the last known level and accumulates the
 * predicted diffs; within one multi-step forecast no ground truth beyond the
 * anchor is consumed. Compensated summation keeps long chains accurate.
 */
std::vector<double> restore(const DiffSeries& diff, const std::vector<double>& predicted_diffs);

} // namespace fuzconv

#endif
