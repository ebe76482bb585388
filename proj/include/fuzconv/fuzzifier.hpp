#ifndef FUZCONV_FUZZIFIER_HPP
#define FUZCONV_FUZZIFIER_HPP

#include <cstddef>
#include <vector>

#include "fuzconv/series.hpp"
#include "fuzconv/windowing.hpp"

namespace fuzconv {

/**
 * @brief Value range and interval grid over which window elements are
 * expanded.
 *
 * Bounds are the diff extrema padded by one population standard deviation on
 * each side; the interval count is ceil(log2(n)) floored at 1. The whole
 * construction is a function of the series alone — there are no tunable
 * arguments.
 */
struct UniverseOfDiscourse {
    double lower = 0.0;        // alpha_l = min - sigma
    double upper = 0.0;        // alpha_r = max + sigma
    int interval_count = 0;    // N
    double interval_width = 0; // tau = (upper - lower) / N
    double sigma = 0.0;        // population standard deviation of the diffs

    /// Grid point m in 0..N (lower + m * tau; the last one is exactly upper).
    double grid_point(int m) const;

    /// Interval index of a value: floor((v - lower)/tau), clamped to [0, N-1].
    /// Intervals are half-open with the top one closed.
    int interval_index(double value) const;
};

UniverseOfDiscourse build_universe(const DiffSeries& diff);

/**
 * @brief Slope-weighted average of the gaps between a window element and its
 * in-window predecessors (the element's "tendency").
 *
 * For the element at window position j, sums (v_j - v_q) * dt_next / (t_j -
 * t_q) over q < j and divides by S-1. dt_next is the spacing from the
 * element's time coordinate to the following one; the final coordinate of a
 * series reuses the previous spacing. The first element of a window has no
 * predecessors and gets 0.
 *
 * @param dt_next spacing from the element's coordinate to the next one.
 */
double tendency_accumulation(const std::vector<double>& window_values,
                             const std::vector<double>& window_timestamps,
                             std::size_t element_index, double dt_next);

/// dt_next for position `index` within a timestamp sequence, reusing the last
/// spacing at the right edge.
double next_spacing(const std::vector<double>& timestamps, std::size_t index);

/**
 * @brief A window element expanded against the universe grid: every grid
 * point at or below its interval on the left, the reconstructed value
 * (element + tendency) in the center, every grid point above its interval on
 * the right.
 */
struct ExpandedElement {
    std::vector<double> left;   // grid points 0..phi, ascending
    double center = 0.0;        // value + tendency
    std::vector<double> right;  // grid points phi+1..N, ascending
    double tendency = 0.0;
    int interval = 0;           // phi

    /// Side length after the pad step equalizes both flanks.
    std::size_t padded_side_length() const { return std::max(left.size(), right.size()); }
};

/// Expand a value (plus its tendency) on the universe grid. The value must
/// lie within [lower, upper]; rolled-out predictions are clamped upstream.
ExpandedElement expand_element(const UniverseOfDiscourse& u, double value, double tendency);

/**
 * @brief Rectangular per-window stack of aligned expanded elements.
 *
 * Every row has width 2*SL+1 with the reconstructed element exactly at
 * column SL; flanks hold grid points padded with the universe bounds.
 */
struct FuzzyWindowTensor {
    std::size_t rows = 0;
    std::size_t cols = 0;       // 2*SL + 1
    std::size_t center_col = 0; // SL
    std::vector<double> data;   // row-major

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t side_length() const { return center_col; }
};

/// Pad-then-crop side length for a set of elements: the minimum over the set
/// of each element's equalized side length.
std::size_t compute_side_length(const std::vector<ExpandedElement>& elements);

/**
 * @brief Align expanded elements into a rectangular tensor.
 *
 * Pads each element's shorter flank with the matching universe bound, then
 * crops both flanks to their innermost `side_length` entries. The
 * single-argument overload uses compute_side_length over the given elements;
 * dataset-level callers pass the side length computed over all windows so
 * every tensor has one width.
 */
FuzzyWindowTensor pcp_align(const std::vector<ExpandedElement>& elements);
FuzzyWindowTensor pcp_align(const std::vector<ExpandedElement>& elements, std::size_t side_length);

/// Expand every element of a window (tendencies included). `dt_last` supplies
/// the next-spacing for the final series coordinate when the window ends the
/// series.
std::vector<ExpandedElement> expand_window(const UniverseOfDiscourse& u, const Window& window,
                                           const std::vector<double>& series_timestamps);

/**
 * @brief Fully fuzzified dataset: one aligned tensor per window, all sharing
 * the side length computed across every window of the series.
 */
struct FuzzifiedDataset {
    UniverseOfDiscourse universe;
    std::size_t window_size = 0;
    std::size_t side_length = 0;                 // SL shared by all tensors
    std::vector<FuzzyWindowTensor> tensors;      // one per window, same order as WindowSet
    std::vector<double> targets;                 // next-diff target per supervised window
    std::size_t clamp_count = 0;                 // values clamped into the universe
};

FuzzifiedDataset fuzzify(const DiffSeries& diff, std::size_t window_size);

/// Expand + align one window against a fixed universe and side length,
/// clamping out-of-universe values into the bounds. Used for rolled-out
/// prediction windows; `clamp_count` is incremented per clamped value.
FuzzyWindowTensor fuzzify_window_clamped(const UniverseOfDiscourse& u, const Window& window,
                                         const std::vector<double>& series_timestamps,
                                         std::size_t side_length, std::size_t* clamp_count);

} // namespace fuzconv

#endif
