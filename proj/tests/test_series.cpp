#include "doctest.h"

#include <cmath>

#include "fuzconv/errors.hpp"
#include "fuzconv/series.hpp"
#include "fuzconv/util.hpp"

using namespace fuzconv;

TEST_CASE("difference: direct subtraction") {
    auto s = RawSeries::make_with_unit_ticks("s", {5, 7, 4});
    auto d = difference(s);
    CHECK(d.anchor == 5.0);
    REQUIRE(d.values.size() == 2);
    CHECK(d.values[0] == 2.0);
    CHECK(d.values[1] == -3.0);
    // timestamps carry the later endpoint
    CHECK(d.timestamps[0] == 2.0);
    CHECK(d.timestamps[1] == 3.0);
}

TEST_CASE("difference: constant series gives zeros") {
    auto s = RawSeries::make_with_unit_ticks("c", {3, 3, 3, 3});
    auto d = difference(s);
    REQUIRE(d.values.size() == 3);
    for (double v : d.values) CHECK(v == 0.0);
}

TEST_CASE("difference: pairwise subtraction oracle") {
    auto s = RawSeries::make_with_unit_ticks("sq", {0, 1, 4, 9, 16});
    auto d = difference(s);
    REQUIRE(d.values.size() == 4);
    CHECK(d.values == std::vector<double>{1, 3, 5, 7});
}

TEST_CASE("difference: too short") {
    CHECK_THROWS_AS((void)RawSeries::make_with_unit_ticks("x", {1.0}), Error);
    try {
        (void)RawSeries::make_with_unit_ticks("x", {1.0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SeriesTooShort);
    }
}

TEST_CASE("restore: empty horizon") {
    DiffSeries d;
    d.anchor = 5;
    d.values = {2, -3};
    d.timestamps = {2, 3};
    CHECK(restore(d, {}).empty());
}

TEST_CASE("restore: cumulative sum from last level") {
    DiffSeries d;
    d.anchor = 5;
    d.values = {2, -3};
    d.timestamps = {2, 3};
    auto out = restore(d, {1, 1});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(5.0));
    CHECK(out[1] == doctest::Approx(6.0));
}

TEST_CASE("restore: rejects non-finite predictions") {
    DiffSeries d;
    d.anchor = 0;
    d.values = {1};
    d.timestamps = {2};
    CHECK_THROWS_AS((void)restore(d, {std::nan("")}), Error);
}

TEST_CASE("round trip: restore over all diffs reproduces the tail") {
    Rng rng(99);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + uniform_index(rng, 200);
        std::vector<double> y(n);
        y[0] = uniform(rng, -100, 100);
        for (std::size_t i = 1; i < n; ++i) y[i] = y[i - 1] + uniform(rng, -1, 1);
        auto s = RawSeries::make_with_unit_ticks("walk", y);
        auto d = difference(s);

        // split known/predicted at a random point
        const std::size_t k = 1 + uniform_index(rng, d.values.size());
        DiffSeries known;
        known.anchor = d.anchor;
        known.values.assign(d.values.begin(), d.values.begin() + k);
        known.timestamps.assign(d.timestamps.begin(), d.timestamps.begin() + k);
        std::vector<double> rest(d.values.begin() + k, d.values.end());

        auto restored = restore(known, rest);
        REQUIRE(restored.size() == rest.size());
        for (std::size_t i = 0; i < restored.size(); ++i) {
            const double actual = y[k + 1 + i];
            const double rel = std::abs(restored[i] - actual) / std::max(1.0, std::abs(actual));
            CHECK(rel <= 1e-12);
        }
    }
}

TEST_CASE("difference is translation invariant on a shared binary grid") {
    // Values on a common dyadic grid make the translation exact in floating
    // point, so the invariance must hold bit-for-bit.
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + uniform_index(rng, 64);
        std::vector<double> y(n), yc(n);
        const double c = static_cast<double>(static_cast<int>(uniform_index(rng, 4096))) / 16.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<double>(static_cast<int>(uniform_index(rng, 65536)) - 32768) / 16.0;
            yc[i] = y[i] + c;
        }
        auto d1 = difference(RawSeries::make_with_unit_ticks("a", y));
        auto d2 = difference(RawSeries::make_with_unit_ticks("b", yc));
        CHECK(d1.values == d2.values);
    }
}

TEST_CASE("difference length is one less than the source") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 2 + uniform_index(rng, 100);
        std::vector<double> y(n);
        for (auto& v : y) v = uniform(rng, -5, 5);
        auto d = difference(RawSeries::make_with_unit_ticks("len", y));
        CHECK(d.values.size() == n - 1);
    }
}
