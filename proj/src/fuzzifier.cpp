#include "fuzconv/fuzzifier.hpp"

#include <algorithm>
#include <cmath>

#include "fuzconv/errors.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

double UniverseOfDiscourse::grid_point(int m) const {
    if (m == interval_count) return upper; // keep the top point exact
    return lower + static_cast<double>(m) * interval_width;
}

int UniverseOfDiscourse::interval_index(double value) const {
    int idx = static_cast<int>(std::floor((value - lower) / interval_width));
    return std::clamp(idx, 0, interval_count - 1);
}

UniverseOfDiscourse build_universe(const DiffSeries& diff) {
    const std::size_t n = diff.length();
    if (n < 2) {
        raise(ErrorCode::SeriesTooShort,
              "universe construction needs at least 2 diff values, got " + std::to_string(n));
    }

    double mean = 0.0;
    for (double v : diff.values) mean += v;
    mean /= static_cast<double>(n);

    double var = 0.0;
    for (double v : diff.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n); // population variance

    const auto [mn_it, mx_it] = std::minmax_element(diff.values.begin(), diff.values.end());
    const double mn = *mn_it;
    const double mx = *mx_it;

    if (mn == mx) {
        raise(ErrorCode::DegenerateSeries,
              "constant diff series (all values " + std::to_string(mn) +
                  "): universe of discourse collapses");
    }

    UniverseOfDiscourse u;
    u.sigma = std::sqrt(var);
    u.lower = mn - u.sigma;
    u.upper = mx + u.sigma;
    u.interval_count = std::max(1, ceil_log2(n));
    u.interval_width = (u.upper - u.lower) / static_cast<double>(u.interval_count);
    return u;
}

double next_spacing(const std::vector<double>& timestamps, std::size_t index) {
    const std::size_t n = timestamps.size();
    if (index + 1 < n) return timestamps[index + 1] - timestamps[index];
    // final coordinate has no successor; reuse the previous spacing
    return timestamps[n - 1] - timestamps[n - 2];
}

double tendency_accumulation(const std::vector<double>& window_values,
                             const std::vector<double>& window_timestamps,
                             std::size_t element_index, double dt_next) {
    const std::size_t s = window_values.size();
    if (s < 2) {
        raise(ErrorCode::WindowTooSmall, "tendency accumulation needs a window of size >= 2");
    }
    if (element_index >= s) {
        raise(ErrorCode::ShapeMismatch, "element index outside window");
    }
    if (element_index == 0) return 0.0; // no predecessors

    const double vj = window_values[element_index];
    const double tj = window_timestamps[element_index];
    double sum = 0.0;
    for (std::size_t q = 0; q < element_index; ++q) {
        sum += (vj - window_values[q]) * dt_next / (tj - window_timestamps[q]);
    }
    return sum / static_cast<double>(s - 1);
}

ExpandedElement expand_element(const UniverseOfDiscourse& u, double value, double tendency) {
    if (value < u.lower || value > u.upper) {
        raise(ErrorCode::OutOfUniverse,
              "value " + std::to_string(value) + " outside universe [" + std::to_string(u.lower) +
                  ", " + std::to_string(u.upper) + "]");
    }
    ExpandedElement e;
    e.interval = u.interval_index(value);
    e.tendency = tendency;
    e.center = value + tendency;
    e.left.reserve(static_cast<std::size_t>(e.interval) + 1);
    for (int m = 0; m <= e.interval; ++m) e.left.push_back(u.grid_point(m));
    e.right.reserve(static_cast<std::size_t>(u.interval_count - e.interval));
    for (int m = e.interval + 1; m <= u.interval_count; ++m) e.right.push_back(u.grid_point(m));
    return e;
}

std::size_t compute_side_length(const std::vector<ExpandedElement>& elements) {
    if (elements.empty()) {
        raise(ErrorCode::EmptyWindow, "cannot align an empty element set");
    }
    std::size_t sl = elements.front().padded_side_length();
    for (const auto& e : elements) sl = std::min(sl, e.padded_side_length());
    return sl;
}

namespace {

// Row layout: SL cropped/padded left entries, the center, SL right entries.
// Cropping keeps the innermost entries of each flank, so grid points nearest
// the element's interval always survive; padding repeats the matching bound.
void write_aligned_row(const ExpandedElement& e, std::size_t sl, double lower, double upper,
                       double* row) {
    const std::ptrdiff_t left_n = static_cast<std::ptrdiff_t>(e.left.size());
    for (std::size_t m = 0; m < sl; ++m) {
        const std::ptrdiff_t idx = left_n - static_cast<std::ptrdiff_t>(sl) + static_cast<std::ptrdiff_t>(m);
        row[m] = (idx >= 0) ? e.left[static_cast<std::size_t>(idx)] : lower;
    }
    row[sl] = e.center;
    for (std::size_t m = 0; m < sl; ++m) {
        row[sl + 1 + m] = (m < e.right.size()) ? e.right[m] : upper;
    }
}

} // namespace

FuzzyWindowTensor pcp_align(const std::vector<ExpandedElement>& elements, std::size_t side_length) {
    if (elements.empty()) {
        raise(ErrorCode::EmptyWindow, "cannot align an empty element set");
    }
    if (side_length < 1) {
        raise(ErrorCode::InvalidConfig, "side length must be >= 1");
    }
    // Bounds are recoverable from any element's flank extremes; take them from
    // the widest flanks present.
    double lower = elements.front().left.front();
    double upper = elements.front().right.back();
    for (const auto& e : elements) {
        lower = std::min(lower, e.left.front());
        upper = std::max(upper, e.right.back());
    }

    FuzzyWindowTensor t;
    t.rows = elements.size();
    t.center_col = side_length;
    t.cols = 2 * side_length + 1;
    t.data.resize(t.rows * t.cols);
    for (std::size_t r = 0; r < t.rows; ++r) {
        write_aligned_row(elements[r], side_length, lower, upper, &t.data[r * t.cols]);
    }
    return t;
}

FuzzyWindowTensor pcp_align(const std::vector<ExpandedElement>& elements) {
    return pcp_align(elements, compute_side_length(elements));
}

std::vector<ExpandedElement> expand_window(const UniverseOfDiscourse& u, const Window& window,
                                           const std::vector<double>& series_timestamps) {
    std::vector<ExpandedElement> out;
    out.reserve(window.values.size());
    for (std::size_t j = 0; j < window.values.size(); ++j) {
        const double dt_next = next_spacing(series_timestamps, window.start + j);
        const double rho = tendency_accumulation(window.values, window.timestamps, j, dt_next);
        out.push_back(expand_element(u, window.values[j], rho));
    }
    return out;
}

FuzzifiedDataset fuzzify(const DiffSeries& diff, std::size_t window_size) {
    FuzzifiedDataset ds;
    ds.universe = build_universe(diff);
    ds.window_size = window_size;

    const WindowSet ws = split(diff, window_size);
    std::vector<std::vector<ExpandedElement>> expanded;
    expanded.reserve(ws.count());

    std::size_t sl = SIZE_MAX;
    for (const auto& w : ws.windows) {
        expanded.push_back(expand_window(ds.universe, w, diff.timestamps));
        sl = std::min(sl, compute_side_length(expanded.back()));
    }
    ds.side_length = sl;

    ds.tensors.reserve(ws.count());
    for (const auto& elems : expanded) {
        ds.tensors.push_back(pcp_align(elems, sl));
    }
    for (const auto& w : ws.windows) {
        if (w.target.has_value()) ds.targets.push_back(*w.target);
    }
    return ds;
}

FuzzyWindowTensor fuzzify_window_clamped(const UniverseOfDiscourse& u, const Window& window,
                                         const std::vector<double>& series_timestamps,
                                         std::size_t side_length, std::size_t* clamp_count) {
    std::vector<ExpandedElement> elems;
    elems.reserve(window.values.size());
    for (std::size_t j = 0; j < window.values.size(); ++j) {
        double v = window.values[j];
        if (v < u.lower) {
            v = u.lower;
            if (clamp_count != nullptr) ++(*clamp_count);
        } else if (v > u.upper) {
            v = u.upper;
            if (clamp_count != nullptr) ++(*clamp_count);
        }
        const double dt_next = next_spacing(series_timestamps, window.start + j);
        const double rho = tendency_accumulation(window.values, window.timestamps, j, dt_next);
        elems.push_back(expand_element(u, v, rho));
    }
    return pcp_align(elems, side_length);
}

} // namespace fuzconv
