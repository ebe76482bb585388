#ifndef FUZCONV_WINDOWING_HPP
#define FUZCONV_WINDOWING_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "fuzconv/series.hpp"

namespace fuzconv {

/// One stride-1 slice of a difference series together with its timestamps.
struct Window {
    std::size_t start = 0;              // index of the first element in the source diff series
    std::vector<double> values;         // exactly window_size entries
    std::vector<double> timestamps;
    std::optional<double> target;       // diff value immediately after the window, if any
};

struct WindowSet {
    std::size_t window_size = 0;
    std::vector<Window> windows;

    std::size_t count() const { return windows.size(); }
    /// Number of (window, next diff) training pairs: every window except the last.
    std::size_t supervised_count() const;
};

/**
 * @brief Split a difference series into overlapping windows of size S,
 * stride 1, pairing each window with the diff that follows it.
 *
 * S must be at least 2 (tendency accumulation divides by S-1) and at most
 * the series length.
 */
WindowSet split(const DiffSeries& diff, std::size_t window_size);

} // namespace fuzconv

#endif
