#include "doctest.h"

#include <cmath>

#include "fuzconv/errors.hpp"
#include "fuzconv/evaluator.hpp"
#include "fuzconv/util.hpp"
#include "oracles.hpp"

using namespace fuzconv;

TEST_CASE("mae and rmse: identities and arithmetic") {
    std::vector<double> a{1, 2}, b{2, 4};
    CHECK(mae(a, a) == 0.0);
    CHECK(rmse(a, a) == 0.0);
    CHECK(mae(a, b) == doctest::Approx(1.5));
    CHECK(rmse(a, b) == doctest::Approx(std::sqrt(2.5)));
}

TEST_CASE("mae and rmse: errors") {
    std::vector<double> a{1, 2}, b{1};
    CHECK_THROWS_AS((void)mae(a, b), Error);
    CHECK_THROWS_AS((void)rmse(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("metrics match the naive-loop oracle, rmse >= mae") {
    Rng rng(101);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + uniform_index(rng, 50);
        std::vector<double> p(n), a(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = uniform(rng, -100, 100);
            a[i] = uniform(rng, -100, 100);
        }
        const double m = mae(p, a);
        const double r = rmse(p, a);
        CHECK(m == doctest::Approx(oracle::mae(p, a)).epsilon(1e-12));
        CHECK(r == doctest::Approx(oracle::rmse(p, a)).epsilon(1e-12));
        CHECK(r >= m - 1e-12);
    }
}

TEST_CASE("nemenyi_cd: hand arithmetic and scaling laws") {
    CHECK(nemenyi_cd(2, 10, 1.960) == doctest::Approx(0.6198).epsilon(2e-4));
    // doubling the dataset count divides CD by sqrt(2)
    for (int nd : {1, 5, 10, 40}) {
        const double a = nemenyi_cd(3, nd, 2.343);
        const double b = nemenyi_cd(3, 2 * nd, 2.343);
        CHECK(std::abs(a / std::sqrt(2.0) - b) <= 1e-12);
    }
    // monotone to zero in the dataset count
    double prev = nemenyi_cd(4, 1, 2.569);
    for (int nd = 2; nd <= 20000; nd *= 2) {
        const double cd = nemenyi_cd(4, nd, 2.569);
        CHECK(cd < prev);
        prev = cd;
    }
    CHECK(prev < 0.1);
    CHECK_THROWS_AS((void)nemenyi_cd(1, 10, 1.96), Error);
    CHECK_THROWS_AS((void)nemenyi_cd(3, 0, 1.96), Error);
}

TEST_CASE("nemenyi_q05 table endpoints") {
    CHECK(nemenyi_q05(2) == doctest::Approx(1.960));
    CHECK(nemenyi_q05(10) == doctest::Approx(3.164));
    CHECK(nemenyi_q05(20) == doctest::Approx(3.544));
    CHECK_THROWS_AS((void)nemenyi_q05(21), Error);
}

TEST_CASE("persistence and seasonal-naive baselines") {
    std::vector<double> constant{5, 5, 5, 5};
    auto p = persistence_forecast(constant, 3);
    CHECK(p == std::vector<double>{5, 5, 5});
    CHECK(mae(p, std::vector<double>{5, 5, 5}) == 0.0);

    // linear ramp: persistence error grows with the slope
    std::vector<double> ramp{1, 2, 3, 4};
    auto pr = persistence_forecast(ramp, 2);
    CHECK(mae(pr, std::vector<double>{5, 6}) == doctest::Approx(1.5));

    // exact-period sine: seasonal naive is near perfect
    const int period = 8;
    std::vector<double> wave;
    for (int i = 0; i < 4 * period; ++i) {
        wave.push_back(std::sin(2.0 * M_PI * i / period));
    }
    std::vector<double> future;
    for (int i = 4 * period; i < 4 * period + period; ++i) {
        future.push_back(std::sin(2.0 * M_PI * i / period));
    }
    auto sn = seasonal_naive_forecast(wave, period, period);
    CHECK(mae(sn, future) <= 1e-9);

    // degenerate period falls back to persistence
    CHECK(seasonal_naive_forecast(ramp, 2, 1) == persistence_forecast(ramp, 2));
    CHECK(seasonal_naive_forecast(ramp, 2, 99) == persistence_forecast(ramp, 2));
}

TEST_CASE("rank_models: mean ranks with ties and critical distance") {
    std::vector<std::string> models{"a", "b", "c"};
    std::vector<std::vector<double>> rows{
        {1.0, 2.0, 3.0}, // ranks 1,2,3
        {2.0, 1.0, 3.0}, // ranks 2,1,3
        {1.0, 1.0, 2.0}, // ranks 1.5,1.5,3
    };
    auto summary = rank_models(models, rows, 2.343);
    REQUIRE(summary.mean_ranks.size() == 3);
    CHECK(summary.mean_ranks[0] == doctest::Approx((1 + 2 + 1.5) / 3.0));
    CHECK(summary.mean_ranks[1] == doctest::Approx((2 + 1 + 1.5) / 3.0));
    CHECK(summary.mean_ranks[2] == doctest::Approx(3.0));
    CHECK(summary.critical_distance == doctest::Approx(nemenyi_cd(3, 3, 2.343)));
}
