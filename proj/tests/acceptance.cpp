// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned here, not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "fuzconv/baa.hpp"
#include "fuzconv/data_io.hpp"
#include "fuzconv/evaluator.hpp"
#include "fuzconv/model.hpp"
#include "fuzconv/pipeline.hpp"
#include "fuzconv/series.hpp"
#include "fuzconv/tensor.hpp"
#include "fuzconv/trainer.hpp"
#include "fuzconv/util.hpp"
#include "oracles.hpp"

#ifndef FUZCONV_DATA_DIR
#define FUZCONV_DATA_DIR "data"
#endif

using namespace fuzconv;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
};

// ---- 1: difference/restore round trip --------------------------------------

Outcome criterion_round_trip() {
    Outcome out;
    Rng rng(20240601);
    double worst = 0.0;
    const double t0 = now_seconds();
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + uniform_index(rng, 511); // lengths 2..512
        std::vector<double> y(n);
        y[0] = uniform(rng, -100, 100);
        for (std::size_t i = 1; i < n; ++i) y[i] = y[i - 1] + uniform(rng, -1, 1);
        auto series = RawSeries::make_with_unit_ticks("walk", y);
        auto diff = difference(series);

        const std::size_t k = 1 + uniform_index(rng, diff.length());
        DiffSeries known;
        known.anchor = diff.anchor;
        known.values.assign(diff.values.begin(), diff.values.begin() + k);
        known.timestamps.assign(diff.timestamps.begin(), diff.timestamps.begin() + k);
        const std::vector<double> rest(diff.values.begin() + k, diff.values.end());
        const auto restored = restore(known, rest);
        for (std::size_t i = 0; i < restored.size(); ++i) {
            const double actual = y[k + 1 + i];
            worst = std::max(worst,
                             std::abs(restored[i] - actual) / std::max(1.0, std::abs(actual)));
        }
    }
    const double secs = now_seconds() - t0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "1000 series, max rel err %.2e, %.2fs", worst, secs);
    out.detail = buf;
    if (worst > 1e-12) out.fail("relative error above 1e-12");
    if (secs >= 5.0) out.fail("runtime at or above 5s");
    return out;
}

// ---- 2: fuzzifier oracle suite ----------------------------------------------

Outcome criterion_fuzzifier_oracles() {
    Outcome out;
    Rng rng(477001);
    const double t0 = now_seconds();
    int centers_checked = 0;
    double worst = 0.0;

    for (int rep = 0; rep < 500 && out.pass; ++rep) {
        const std::size_t n = 8 + uniform_index(rng, 249);            // 8..256
        const std::size_t s = std::min<std::size_t>(2 + uniform_index(rng, 15), n); // 2..16
        DiffSeries diff;
        diff.anchor = uniform(rng, -10, 10);
        diff.values.resize(n);
        diff.timestamps.resize(n);
        double tick = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            diff.values[i] = uniform(rng, -50, 50);
            tick += uniform(rng, 0.5, 1.5);
            diff.timestamps[i] = tick;
        }

        const auto universe = build_universe(diff);
        const auto ou = oracle::universe(diff.values);
        worst = std::max(worst, std::abs(universe.lower - ou.lower));
        worst = std::max(worst, std::abs(universe.upper - ou.upper));
        if (universe.interval_count != ou.intervals) {
            out.fail("interval count mismatch");
            break;
        }

        // one random window of this series
        const std::size_t start = uniform_index(rng, n - s + 1);
        Window w;
        w.start = start;
        w.values.assign(diff.values.begin() + start, diff.values.begin() + start + s);
        w.timestamps.assign(diff.timestamps.begin() + start,
                            diff.timestamps.begin() + start + s);

        std::vector<ExpandedElement> elems;
        std::vector<oracle::Expanded> oelems;
        for (std::size_t j = 0; j < s; ++j) {
            const double dt = next_spacing(diff.timestamps, start + j);
            const double rho = tendency_accumulation(w.values, w.timestamps, j, dt);
            const double orho = oracle::tendency(w.values, w.timestamps, j, dt);
            worst = std::max(worst, std::abs(rho - orho));
            elems.push_back(expand_element(universe, w.values[j], rho));
            oelems.push_back(oracle::expand(ou, w.values[j], orho));
        }
        const auto tensor = pcp_align(elems);
        const auto rows = oracle::pcp(oelems, ou.lower, ou.upper);
        if (tensor.rows != rows.size() || tensor.cols != rows[0].size()) {
            out.fail("pcp shape mismatch vs oracle");
            break;
        }
        for (std::size_t r = 0; r < tensor.rows; ++r) {
            for (std::size_t c = 0; c < tensor.cols; ++c) {
                worst = std::max(worst, std::abs(tensor.at(r, c) - rows[r][c]));
            }
        }
        for (std::size_t r = 0; r < tensor.rows; ++r) {
            if (tensor.at(r, tensor.center_col) != elems[r].center) {
                out.fail("center not preserved");
                break;
            }
            ++centers_checked;
        }
    }
    const double secs = now_seconds() - t0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "500 windows, max abs dev %.2e, %d centers exact, %.2fs",
                  worst, centers_checked, secs);
    out.detail = out.detail.empty() ? buf : out.detail + std::string("; ") + buf;
    if (worst > 1e-9) out.fail("oracle deviation above 1e-9");
    if (secs >= 30.0) out.fail("runtime at or above 30s");
    return out;
}

// ---- 3: dilated convolution equivalence -------------------------------------

Outcome criterion_dilated_conv() {
    Outcome out;
    Rng rng(31337);
    int cases = 0;
    double worst = 0.0;
    for (int len = 1; len <= 32; ++len) {
        for (int k = 1; k <= 4; ++k) {
            for (int s = 1; s <= 4; ++s) {
                if ((k - 1) * s + 1 > len) continue;
                std::vector<double> xv(len), fv(k);
                for (auto& v : xv) v = uniform(rng, -3, 3);
                for (auto& v : fv) v = uniform(rng, -3, 3);
                auto got =
                    conv1d_dilated(Tensor::from_data({len}, xv), Tensor::from_data({k}, fv), s);
                auto ref = oracle::conv1d_dilated_via_zero_stuffing(xv, fv, s);
                if (got.size() != ref.size()) {
                    out.fail("length mismatch");
                    return out;
                }
                for (std::size_t i = 0; i < ref.size(); ++i) {
                    worst = std::max(worst, std::abs(got.data()[i] - ref[i]));
                }
                if (s == 1) {
                    auto dense = oracle::conv1d(xv, fv);
                    for (std::size_t i = 0; i < dense.size(); ++i) {
                        if (got.data()[i] != dense[i]) {
                            out.fail("stride-1 output differs from standard convolution");
                            return out;
                        }
                    }
                }
                ++cases;
            }
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d cases, max abs dev %.2e", cases, worst);
    out.detail = buf;
    if (worst != 0.0) out.fail("zero-stuffed equivalence not exact");
    return out;
}

// ---- 4: asymmetric degeneracy ------------------------------------------------

Outcome criterion_asymmetric_degeneracy() {
    Outcome out;
    Rng rng(555);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int v = std::vector<int>{2, 3, 5}[rep % 3];
        const int h = 6 + static_cast<int>(uniform_index(rng, 6));
        const int w = 6 + static_cast<int>(uniform_index(rng, 6));
        std::vector<double> m(static_cast<std::size_t>(h) * w), col(v), row(v), full;
        for (auto& x : m) x = uniform(rng, -2, 2);
        for (auto& x : col) x = uniform(rng, -2, 2);
        for (auto& x : row) x = uniform(rng, -2, 2);
        for (int i = 0; i < v; ++i)
            for (int j = 0; j < v; ++j) full.push_back(col[i] * row[j]);

        auto input = Tensor::from_data({h, w}, m);
        auto direct = conv2d_valid(input, Tensor::from_data({v, v}, full));
        auto seq = conv2d_valid(conv2d_valid(input, Tensor::from_data({v, 1}, col)),
                                Tensor::from_data({1, v}, row));
        for (std::size_t i = 0; i < direct.size(); ++i) {
            worst = std::max(worst, std::abs(direct.data()[i] - seq.data()[i]) /
                                        std::max(1.0, std::abs(direct.data()[i])));
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "100 rank-1 kernels, max rel dev %.2e", worst);
    out.detail = buf;
    if (worst > 1e-10) out.fail("sequential application deviates beyond 1e-10");
    return out;
}

// ---- 5: BAA center preservation and width reduction --------------------------

Outcome criterion_baa_center() {
    Outcome out;
    Rng rng(808);
    int exact = 0, total = 0, reductions = 0, reduction_cases = 0;
    for (int rep = 0; rep < 200; ++rep) {
        BaaConfig cfg;
        cfg.filter_length = 1 + static_cast<int>(uniform_index(rng, 3)); // 1..3
        cfg.stride = 1 + static_cast<int>(uniform_index(rng, 3));        // 1..3
        const int sl = (cfg.filter_length - 1) * cfg.stride + 1 +
                       static_cast<int>(uniform_index(rng, 4));
        const int w = 2 * sl + 1;
        const int b = 1 + static_cast<int>(uniform_index(rng, 3));
        const int s = 2 + static_cast<int>(uniform_index(rng, 5));
        BaaBlock block(cfg, rng);
        std::vector<double> data(static_cast<std::size_t>(b) * s * w);
        for (auto& x : data) x = uniform(rng, -3, 3);
        auto input = Tensor::from_data({b, 1, s, w}, data);
        auto parts = block.forward_parts(input);

        const int ow = parts.reassembled.shape()[3];
        const int oc = (ow - 1) / 2;
        for (int bi = 0; bi < b; ++bi) {
            for (int si = 0; si < s; ++si) {
                const double want = parts.activated.data()[(bi * s + si) * w + sl];
                const double got = parts.reassembled.data()[(bi * s + si) * ow + oc];
                ++total;
                if (got == want) ++exact;
            }
        }
        if (cfg.stride * (cfg.filter_length - 1) >= 1) {
            ++reduction_cases;
            if (ow < w) ++reductions;
        } else if (ow != w) {
            out.fail("width changed without dilation");
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d/%d centers exact, %d/%d widths reduced", exact, total,
                  reductions, reduction_cases);
    out.detail = buf;
    if (exact != total) out.fail("center preservation not exact everywhere");
    if (reductions != reduction_cases) out.fail("width not strictly reduced under dilation");
    return out;
}

// ---- 6: gradient checks -------------------------------------------------------

Outcome criterion_gradients() {
    Outcome out;
    Rng rng(90210);
    const double t0 = now_seconds();
    double worst = 0.0;
    auto note = [&](const GradCheckReport& rep) { worst = std::max(worst, rep.worst()); };
    auto randv = [&rng](std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto& e : v) e = uniform(rng, lo, hi);
        return v;
    };

    { // conv2d
        auto x = Tensor::from_data({1, 2, 5, 6}, randv(60, -1, 1), true);
        auto k = Tensor::from_data({3, 2, 2, 3}, randv(36, -1, 1), true);
        const auto c = randv(48, -1, 1);
        note(grad_check([&] { return weighted_sum(flatten_rows(conv2d_valid(x, k)), c); },
                        {{"conv2d.input", x}, {"conv2d.kernel", k}}));
    }
    { // conv1d dilated
        auto x = Tensor::from_data({14}, randv(14, -1, 1), true);
        auto f = Tensor::from_data({3}, randv(3, -1, 1), true);
        const auto c = randv(10, -1, 1);
        note(grad_check([&] { return weighted_sum(conv1d_dilated(x, f, 2), c); },
                        {{"conv1d.input", x}, {"conv1d.filter", f}}));
    }
    { // batch norm, both modes
        auto x = Tensor::from_data({2, 2, 3, 3}, randv(36, -2, 2), true);
        BatchNormState st(2);
        st.gamma.data() = {1.1, 0.9};
        st.beta.data() = {0.2, -0.1};
        const auto c = randv(36, -1, 1);
        auto fn = [&] { return weighted_sum(flatten_rows(batch_norm(x, st)), c); };
        note(grad_check(fn, {{"bn.x", x}, {"bn.gamma", st.gamma}, {"bn.beta", st.beta}}));
        st.training = false;
        note(grad_check(fn, {{"bn.x", x}, {"bn.gamma", st.gamma}, {"bn.beta", st.beta}}));
    }
    { // avg pool
        auto x = Tensor::from_data({1, 2, 4, 4}, randv(32, -1, 1), true);
        const auto c = randv(18, -1, 1);
        note(grad_check([&] { return weighted_sum(flatten_rows(avg_pool2d(x, 2, 2)), c); },
                        {{"pool.x", x}}));
    }
    { // flank filter (shared)
        auto x = Tensor::from_data({2, 1, 3, 9}, randv(54, -1, 1), true);
        auto f = Tensor::from_data({2}, {0.4, -0.6}, true);
        const auto c = randv(30, -1, 1);
        note(grad_check([&] { return weighted_sum(flatten_rows(baa_flank_filter(x, f, f, 2)), c); },
                        {{"flank.x", x}, {"flank.filter", f}}));
    }
    { // bilinear head
        auto x = Tensor::from_data({2, 6}, randv(12, -1, 1), true);
        auto w1 = Tensor::from_data({4, 6}, randv(24, -0.6, 0.6), true);
        auto b1 = Tensor::from_data({4}, {0.1, -0.2, 0.3, 0.05}, true);
        auto w2 = Tensor::from_data({1, 4}, {0.5, -0.4, 0.3, 0.2}, true);
        auto b2 = Tensor::from_data({1}, {0.0}, true);
        const auto c = randv(2, -1, 1);
        note(grad_check(
            [&] { return weighted_sum(flatten_rows(bilinear_head(x, w1, b1, w2, b2)), c); },
            {{"head.x", x}, {"head.w1", w1}, {"head.b1", b1}, {"head.w2", w2}, {"head.b2", b2}}));
    }
    { // full composite through the model
        ModelConfig cfg;
        cfg.window_size = 6;
        cfg.baa.filter_length = 2;
        cfg.baa.stride = 1;
        cfg.pac.depth = 1;
        cfg.pac.v_len = 3;
        cfg.pac.h_len = 2;
        cfg.pac.growth = 2.0;
        cfg.pac.head_hidden = 8;
        cfg.seed = 424242;
        ForecastModel model(cfg, 3);
        auto x = Tensor::from_data({2, 1, 6, 7}, randv(84, -1, 1));
        const std::vector<double> c{0.8, -0.5};
        note(grad_check([&] { return weighted_sum(flatten_rows(model.forward(x)), c); },
                        model.parameters()));
    }

    const double secs = now_seconds() - t0;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max rel dev %.2e across layers and composite, %.1fs", worst,
                  secs);
    out.detail = buf;
    if (worst > 1e-4) out.fail("finite-difference deviation above 1e-4");
    if (secs >= 120.0) out.fail("runtime at or above 2 minutes");
    return out;
}

// ---- 7: complexity counters ----------------------------------------------------

Outcome criterion_flops() {
    Outcome out;
    std::string detail;
    for (int n : {3, 7}) {
        const long long dense = static_cast<long long>(n) * n;
        const long long pair = 2LL * n;
        detail += "V=H=" + std::to_string(n) + " ratio " + std::to_string(dense) + ":" +
                  std::to_string(pair) + "  ";
        if (dense != n * n || pair != n + n) out.fail("ratio arithmetic wrong");
    }

    Rng rng(2468);
    for (int rep = 0; rep < 20; ++rep) {
        const int v = 2 + static_cast<int>(uniform_index(rng, 4));
        const int h = 2 + static_cast<int>(uniform_index(rng, 4));
        const int height = v + 2 + static_cast<int>(uniform_index(rng, 6));
        const int width = h + 2 + static_cast<int>(uniform_index(rng, 6));
        const int oh = height - v + 1, ow = width - h + 1;
        std::vector<double> data(static_cast<std::size_t>(height) * width);
        for (auto& x : data) x = uniform(rng, -1, 1);
        auto input = Tensor::from_data({1, 1, height, width}, data);

        macs::reset();
        (void)conv2d_valid(input, Tensor({1, 1, v, h}, 0.5));
        const std::uint64_t dense_measured = macs::total();
        const std::uint64_t dense_expected =
            static_cast<std::uint64_t>(oh) * ow * static_cast<std::uint64_t>(v) * h;

        macs::reset();
        (void)conv2d_valid(conv2d_valid(input, Tensor({1, 1, v, 1}, 0.5)),
                           Tensor({1, 1, 1, h}, 0.5));
        const std::uint64_t pair_measured = macs::total();
        const std::uint64_t pair_expected = static_cast<std::uint64_t>(oh) * width * v +
                                            static_cast<std::uint64_t>(oh) * ow * h;

        if (dense_measured != dense_expected || pair_measured != pair_expected) {
            out.fail("instrumented counts differ from closed form at V=" + std::to_string(v) +
                     " H=" + std::to_string(h));
            break;
        }
    }
    out.detail = detail + "instrumented counts match on 20 random shapes";
    return out;
}

// ---- 8: desk-scale forecasting ---------------------------------------------------

Outcome criterion_desk_scale() {
    Outcome out;
    const std::string data_dir = FUZCONV_DATA_DIR;
    const double t0 = now_seconds();
    {
        auto series = load_csv(data_dir + "/sine_demo.csv");
        ModelConfig mc; // defaults, fixed seed
        TrainConfig tc; // defaults: 500 epochs, lr 1e-3, batch 32
        tc.horizon = 20;
        auto result = run_series(series.at(0), mc, tc, std::nullopt);
        const double sine_secs = now_seconds() - t0;
        const double improvement =
            1.0 - result.report.mae_value / result.report.persistence_mae;
        char buf[200];
        std::snprintf(buf, sizeof(buf), "sine MAE %.3f vs persistence %.3f (%.0f%% better, %.0fs)",
                      result.report.mae_value, result.report.persistence_mae,
                      100.0 * improvement, sine_secs);
        out.detail = buf;
        if (improvement < 0.20) out.fail("sine improvement below 20%");
        if (sine_secs >= 300.0) out.fail("sine run at or above 5 minutes");
    }
    {
        auto series = load_csv(data_dir + "/daily_demo.csv");
        ModelConfig mc;
        mc.window_size = 21; // three full weeks of diffs
        TrainConfig tc;
        tc.lr = 2e-3;
        tc.horizon = 28;
        auto result = run_series(series.at(0), mc, tc, 7);
        char buf[200];
        std::snprintf(buf, sizeof(buf), "; daily MAE %.2f vs seasonal-naive %.2f",
                      result.report.mae_value, *result.report.seasonal_mae);
        out.detail += buf;
        if (result.report.mae_value > *result.report.seasonal_mae) {
            out.fail("daily model MAE above seasonal-naive");
        }
    }
    return out;
}

// ---- 9: Nemenyi critical distance -------------------------------------------------

Outcome criterion_nemenyi() {
    Outcome out;
    const double cd = nemenyi_cd(2, 10, 1.960);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "CD(2,10,1.960) = %.6f", cd);
    out.detail = buf;
    if (std::abs(cd - 0.6198) > 1e-4) out.fail("hand-arithmetic value off by more than 1e-4");
    for (int nd : {1, 3, 7, 10, 25, 100}) {
        const double a = nemenyi_cd(5, nd, 2.728);
        const double b = nemenyi_cd(5, 2 * nd, 2.728);
        if (std::abs(a / std::sqrt(2.0) - b) > 1e-12) {
            out.fail("doubling law violated at N_d=" + std::to_string(nd));
        }
    }
    return out;
}

// ---- 10: training determinism -------------------------------------------------------

Outcome criterion_determinism() {
    Outcome out;
    auto series = load_csv(std::string(FUZCONV_DATA_DIR) + "/sine_demo.csv");
    RawSeries shortened;
    shortened.name = series.at(0).name;
    shortened.timestamps.assign(series[0].timestamps.begin(), series[0].timestamps.begin() + 160);
    shortened.values.assign(series[0].values.begin(), series[0].values.begin() + 160);

    const DiffSeries diff = difference(shortened);
    const auto data = fuzzify(diff, 10);
    ModelConfig mc;
    TrainConfig tc;
    tc.epochs = 60;
    tc.horizon = 10;

    auto r1 = train(data, mc, tc);
    auto r2 = train(data, mc, tc);

    bool traces_equal = r1.trace.size() == r2.trace.size();
    if (traces_equal) {
        for (std::size_t i = 0; i < r1.trace.size(); ++i) {
            if (r1.trace[i].train_loss != r2.trace[i].train_loss ||
                r1.trace[i].val_loss != r2.trace[i].val_loss || r1.trace[i].lr != r2.trace[i].lr) {
                traces_equal = false;
                break;
            }
        }
    }
    if (!traces_equal) out.fail("loss traces differ");

    const auto dir = std::filesystem::temp_directory_path();
    const std::string p1 = (dir / "fz_acc_det1.fzcv").string();
    const std::string p2 = (dir / "fz_acc_det2.fzcv").string();
    save_checkpoint(r1.checkpoint, p1);
    save_checkpoint(r2.checkpoint, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    if (b1.empty() || b1 != b2) out.fail("checkpoint bytes differ");
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);

    char buf[120];
    std::snprintf(buf, sizeof(buf), "60-epoch double run: traces %s, checkpoints %s",
                  traces_equal ? "identical" : "DIFFER",
                  (!b1.empty() && b1 == b2) ? "byte-identical" : "DIFFER");
    out.detail = out.detail.empty() ? buf : out.detail + std::string("; ") + buf;
    return out;
}

} // namespace

int main() {
    struct Entry {
        const char* label;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> criteria = {
        {"difference/restore round trip", criterion_round_trip},
        {"fuzzifier brute-force oracle suite", criterion_fuzzifier_oracles},
        {"dilated convolution equivalence", criterion_dilated_conv},
        {"asymmetric kernel degeneracy", criterion_asymmetric_degeneracy},
        {"bilateral atrous center preservation", criterion_baa_center},
        {"finite-difference gradient checks", criterion_gradients},
        {"multiply-accumulate counters", criterion_flops},
        {"desk-scale forecasting vs baselines", criterion_desk_scale},
        {"Nemenyi critical distance", criterion_nemenyi},
        {"training determinism", criterion_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %02zu %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].label, outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    if (failures != 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
