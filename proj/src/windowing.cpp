#include "fuzconv/windowing.hpp"

#include "fuzconv/errors.hpp"

namespace fuzconv {

std::size_t WindowSet::supervised_count() const {
    std::size_t c = 0;
    for (const auto& w : windows) {
        if (w.target.has_value()) ++c;
    }
    return c;
}

WindowSet split(const DiffSeries& diff, std::size_t window_size) {
    const std::size_t n = diff.length();
    if (window_size < 2) {
        raise(ErrorCode::WindowTooSmall,
              "window size must be >= 2 (tendency accumulation divides by window_size - 1), got " +
                  std::to_string(window_size));
    }
    if (window_size > n) {
        raise(ErrorCode::WindowTooLarge,
              "window size " + std::to_string(window_size) + " exceeds diff series length " +
                  std::to_string(n));
    }

    WindowSet out;
    out.window_size = window_size;
    out.windows.reserve(n - window_size + 1);
    for (std::size_t i = 0; i + window_size <= n; ++i) {
        Window w;
        w.start = i;
        w.values.assign(diff.values.begin() + i, diff.values.begin() + i + window_size);
        w.timestamps.assign(diff.timestamps.begin() + i, diff.timestamps.begin() + i + window_size);
        if (i + window_size < n) {
            w.target = diff.values[i + window_size];
        }
        out.windows.push_back(std::move(w));
    }
    return out;
}

} // namespace fuzconv
