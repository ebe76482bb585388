#include "doctest.h"

#include "fuzconv/errors.hpp"
#include "fuzconv/util.hpp"
#include "fuzconv/windowing.hpp"

using namespace fuzconv;

namespace {

DiffSeries make_diff(std::vector<double> values) {
    DiffSeries d;
    d.anchor = 0;
    d.values = std::move(values);
    d.timestamps.resize(d.values.size());
    for (std::size_t i = 0; i < d.timestamps.size(); ++i) {
        d.timestamps[i] = static_cast<double>(i + 2);
    }
    return d;
}

} // namespace

TEST_CASE("split: enumeration") {
    auto d = make_diff({1, 2, 3, 4, 5});
    auto ws = split(d, 3);
    REQUIRE(ws.count() == 3);
    CHECK(ws.windows[0].values == std::vector<double>{1, 2, 3});
    CHECK(ws.windows[1].values == std::vector<double>{2, 3, 4});
    CHECK(ws.windows[2].values == std::vector<double>{3, 4, 5});
    REQUIRE(ws.windows[0].target.has_value());
    CHECK(*ws.windows[0].target == 4.0);
    CHECK(*ws.windows[1].target == 5.0);
    CHECK_FALSE(ws.windows[2].target.has_value());
}

TEST_CASE("split: window equal to series length") {
    auto d = make_diff({1, 2, 3});
    auto ws = split(d, 3);
    REQUIRE(ws.count() == 1);
    CHECK_FALSE(ws.windows[0].target.has_value());
}

TEST_CASE("split: size errors") {
    auto d = make_diff({1, 2, 3});
    CHECK_THROWS_AS((void)split(d, 1), Error);
    CHECK_THROWS_AS((void)split(d, 4), Error);
    try {
        (void)split(d, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WindowTooSmall);
    }
    try {
        (void)split(d, 4);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WindowTooLarge);
    }
}

TEST_CASE("split: matches brute-force slices on a random series") {
    Rng rng(17);
    std::vector<double> v(50);
    for (auto& x : v) x = uniform(rng, -10, 10);
    auto d = make_diff(v);
    auto ws = split(d, 8);
    REQUIRE(ws.count() == 43);
    for (std::size_t i = 0; i < ws.count(); ++i) {
        CHECK(ws.windows[i].start == i);
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(ws.windows[i].values[j] == v[i + j]);
            CHECK(ws.windows[i].timestamps[j] == d.timestamps[i + j]);
        }
    }
}

TEST_CASE("split: first elements reproduce the prefix, supervised count is n - S") {
    Rng rng(18);
    std::vector<double> v(30);
    for (auto& x : v) x = uniform(rng, -1, 1);
    auto d = make_diff(v);
    for (std::size_t s = 2; s <= 10; ++s) {
        auto ws = split(d, s);
        CHECK(ws.count() == v.size() - s + 1);
        CHECK(ws.supervised_count() == v.size() - s);
        for (std::size_t i = 0; i < ws.count(); ++i) {
            CHECK(ws.windows[i].values[0] == v[i]);
        }
    }
}
