// fuzconv command line: preprocess | train | forecast | evaluate | gradcheck | flops
//
// Exit codes: 0 success, 2 validation error, 3 data error, 4 numeric
// divergence. FUZCONV_LOG=error|warn|info|debug controls verbosity.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fuzconv/data_io.hpp"
#include "fuzconv/errors.hpp"
#include "fuzconv/evaluator.hpp"
#include "fuzconv/model.hpp"
#include "fuzconv/pipeline.hpp"
#include "fuzconv/trainer.hpp"
#include "fuzconv/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunOptions {
    std::string manifest_path;
    std::string config_path;
    std::string out_dir = "out";
    std::string checkpoint_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> horizon;
    int workers = 1;

    // direct architecture overrides (applied after the config file)
    std::optional<int> window_size;
    std::optional<std::string> pac_depth; // integer or "auto"
    std::optional<int> pac_v, pac_h, head_hidden;
    std::optional<double> pac_growth;
    std::optional<int> baa_filter, baa_stride;
    std::optional<int> epochs, batch_size;
    std::optional<double> lr;

    fuzconv::ModelConfig model;
    fuzconv::TrainConfig train;
};

void apply_config_file(RunOptions& opt) {
    if (opt.config_path.empty()) return;
    std::ifstream f(opt.config_path);
    if (!f) fuzconv::raise(fuzconv::ErrorCode::IoError, "cannot open config '" + opt.config_path + "'");
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fuzconv::raise(fuzconv::ErrorCode::ParseError,
                       "config '" + opt.config_path + "': " + e.what());
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        opt.model.window_size = m.value("window_size", opt.model.window_size);
        if (m.contains("baa")) {
            const auto& b = m["baa"];
            opt.model.baa.filter_length = b.value("filter_length", opt.model.baa.filter_length);
            opt.model.baa.stride = b.value("stride", opt.model.baa.stride);
            opt.model.baa.shared_filter = b.value("shared_filter", opt.model.baa.shared_filter);
        }
        if (m.contains("pac")) {
            const auto& p = m["pac"];
            if (p.contains("depth")) {
                if (p["depth"].is_string() && p["depth"].get<std::string>() == "auto") {
                    opt.model.pac.depth_auto = true;
                } else {
                    opt.model.pac.depth = p["depth"].get<int>();
                }
            }
            opt.model.pac.v_len = p.value("v_len", opt.model.pac.v_len);
            opt.model.pac.h_len = p.value("h_len", opt.model.pac.h_len);
            opt.model.pac.growth = p.value("growth", opt.model.pac.growth);
            opt.model.pac.head_hidden = p.value("head_hidden", opt.model.pac.head_hidden);
        }
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        opt.train.epochs = t.value("epochs", opt.train.epochs);
        opt.train.lr = t.value("lr", opt.train.lr);
        opt.train.batch_size = t.value("batch_size", opt.train.batch_size);
        if (t.contains("scheduler")) {
            const auto& s = t["scheduler"];
            opt.train.scheduler.factor = s.value("factor", opt.train.scheduler.factor);
            opt.train.scheduler.patience = s.value("patience", opt.train.scheduler.patience);
            opt.train.scheduler.threshold = s.value("threshold", opt.train.scheduler.threshold);
            opt.train.scheduler.eps = s.value("eps", opt.train.scheduler.eps);
        }
    }
    if (j.contains("seed")) {
        opt.model.seed = j["seed"].get<std::uint64_t>();
        opt.train.seed = opt.model.seed;
    }
}

void apply_flag_overrides(RunOptions& opt) {
    if (opt.window_size) opt.model.window_size = *opt.window_size;
    if (opt.pac_depth) {
        if (*opt.pac_depth == "auto") {
            opt.model.pac.depth_auto = true;
        } else {
            opt.model.pac.depth_auto = false;
            opt.model.pac.depth = std::stoi(*opt.pac_depth);
        }
    }
    if (opt.pac_v) opt.model.pac.v_len = *opt.pac_v;
    if (opt.pac_h) opt.model.pac.h_len = *opt.pac_h;
    if (opt.pac_growth) opt.model.pac.growth = *opt.pac_growth;
    if (opt.head_hidden) opt.model.pac.head_hidden = *opt.head_hidden;
    if (opt.baa_filter) opt.model.baa.filter_length = *opt.baa_filter;
    if (opt.baa_stride) opt.model.baa.stride = *opt.baa_stride;
    if (opt.epochs) opt.train.epochs = *opt.epochs;
    if (opt.lr) opt.train.lr = *opt.lr;
    if (opt.batch_size) opt.train.batch_size = *opt.batch_size;
    if (opt.seed) {
        opt.model.seed = *opt.seed;
        opt.train.seed = *opt.seed;
    }
    opt.model.validate();
}

json effective_config_json(const RunOptions& opt) {
    json j;
    j["model"] = {
        {"window_size", opt.model.window_size},
        {"baa",
         {{"filter_length", opt.model.baa.filter_length},
          {"stride", opt.model.baa.stride},
          {"shared_filter", opt.model.baa.shared_filter}}},
        {"pac",
         {{"depth", opt.model.pac.depth_auto ? json("auto") : json(opt.model.pac.depth)},
          {"v_len", opt.model.pac.v_len},
          {"h_len", opt.model.pac.h_len},
          {"growth", opt.model.pac.growth},
          {"head_hidden", opt.model.pac.head_hidden}}},
    };
    j["train"] = {
        {"epochs", opt.train.epochs},
        {"lr", opt.train.lr},
        {"batch_size", opt.train.batch_size},
        {"scheduler",
         {{"factor", opt.train.scheduler.factor},
          {"patience", opt.train.scheduler.patience},
          {"threshold", opt.train.scheduler.threshold},
          {"eps", opt.train.scheduler.eps}}},
    };
    j["seed"] = opt.model.seed;
    return j;
}

void echo_config(const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    std::ofstream f(fs::path(opt.out_dir) / "config.json");
    f << effective_config_json(opt).dump(2) << '\n';
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) {
        out.push_back((std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_')
                          ? c
                          : '_');
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_preprocess(RunOptions& opt) {
    auto manifest = fuzconv::load_manifest(opt.manifest_path);
    auto dataset = fuzconv::load_dataset(manifest, opt.horizon);
    echo_config(opt);
    for (const auto& series : dataset.series) {
        const auto diff = fuzconv::difference(series);
        const auto data =
            fuzconv::fuzzify(diff, static_cast<std::size_t>(opt.model.window_size));
        const fs::path out = fs::path(opt.out_dir) /
                             (sanitize(manifest.name) + "_" + sanitize(series.name) + "_windows.csv");
        fuzconv::write_window_dump(data, out.string());
        std::printf("%s: %zu windows, side length %zu -> %s\n", series.name.c_str(),
                    data.tensors.size(), data.side_length, out.string().c_str());
    }
    return 0;
}

int cmd_train(RunOptions& opt) {
    auto manifest = fuzconv::load_manifest(opt.manifest_path);
    auto dataset = fuzconv::load_dataset(manifest, opt.horizon);
    echo_config(opt);

    std::vector<fuzconv::SeriesRunResult> details;
    auto report = fuzconv::run_dataset(dataset, opt.model, opt.train, opt.workers, &details);
    report.dataset = manifest.name;

    for (std::size_t i = 0; i < details.size(); ++i) {
        const std::string stem = sanitize(dataset.series[i].name);
        fuzconv::save_checkpoint(details[i].checkpoint,
                                 (fs::path(opt.out_dir) / (stem + ".fzcv")).string());
        std::ofstream log(fs::path(opt.out_dir) / (stem + "_train.csv"));
        log << "epoch,train_loss,val_loss,lr\n";
        for (const auto& e : details[i].trace) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                          e.val_loss, e.lr);
            log << buf;
        }
    }
    const std::string forecast_path =
        (fs::path(opt.out_dir) / (sanitize(manifest.name) + "_forecast.csv")).string();
    fuzconv::write_forecast(report, forecast_path);
    std::printf("%s: %zu series, mean MAE %.6g, mean RMSE %.6g -> %s\n", manifest.name.c_str(),
                report.series.size(), report.aggregate_mae(), report.aggregate_rmse(),
                forecast_path.c_str());
    return 0;
}

int cmd_forecast(RunOptions& opt) {
    auto manifest = fuzconv::load_manifest(opt.manifest_path);
    auto dataset = fuzconv::load_dataset(manifest, opt.horizon);
    echo_config(opt);
    const std::string ckpt_dir = opt.checkpoint_dir.empty() ? opt.out_dir : opt.checkpoint_dir;

    fuzconv::ForecastReport report;
    report.dataset = manifest.name;
    for (const auto& series : dataset.series) {
        const std::string path =
            (fs::path(ckpt_dir) / (sanitize(series.name) + ".fzcv")).string();
        auto ckpt = fuzconv::load_checkpoint(path);
        auto rep = fuzconv::forecast_series(series, ckpt, opt.model, dataset.horizon);
        if (report.model_fingerprint.empty()) {
            report.model_fingerprint = fuzconv::to_hex(ckpt.config_fingerprint);
        }
        report.series.push_back(std::move(rep));
    }
    const std::string forecast_path =
        (fs::path(opt.out_dir) / (sanitize(manifest.name) + "_forecast.csv")).string();
    fuzconv::write_forecast(report, forecast_path);
    std::printf("%s: wrote %zu series x %d steps -> %s\n", manifest.name.c_str(),
                report.series.size(), dataset.horizon, forecast_path.c_str());
    return 0;
}

int cmd_evaluate(const std::string& forecast_csv, const std::string& ranks_csv, double alpha_q) {
    if (!forecast_csv.empty()) {
        auto recomputed = fuzconv::recompute_from_forecast_csv(forecast_csv);
        std::printf("series,mae,rmse\n");
        for (std::size_t i = 0; i < recomputed.series.size(); ++i) {
            std::printf("%s,%.10g,%.10g\n", recomputed.series[i].c_str(),
                        recomputed.mae_values[i], recomputed.rmse_values[i]);
        }
    }
    if (!ranks_csv.empty()) {
        auto table = fuzconv::load_metric_table(ranks_csv);
        const double q =
            alpha_q > 0 ? alpha_q : fuzconv::nemenyi_q05(static_cast<int>(table.models.size()));
        auto summary = fuzconv::rank_models(table.models, table.rows, q);
        std::printf("model,mean_rank\n");
        for (std::size_t i = 0; i < summary.models.size(); ++i) {
            std::printf("%s,%.6g\n", summary.models[i].c_str(), summary.mean_ranks[i]);
        }
        std::printf("critical_distance,%.10g\n", summary.critical_distance);
    }
    return 0;
}

int cmd_gradcheck(RunOptions& opt, double tolerance) {
    // probe the configured architecture on a small random input
    fuzconv::ModelConfig cfg = opt.model;
    const int side_length =
        std::max(3, (cfg.baa.filter_length - 1) * cfg.baa.stride + 1);
    fuzconv::ForecastModel model(cfg, side_length);
    fuzconv::Rng rng(cfg.seed ^ 0xabcdef);
    std::vector<double> input(static_cast<std::size_t>(2) * cfg.window_size *
                              (2 * side_length + 1));
    for (auto& v : input) v = fuzconv::uniform(rng, -1, 1);
    auto x = fuzconv::Tensor::from_data({2, 1, cfg.window_size, 2 * side_length + 1}, input);
    std::vector<double> coeffs{0.6, -0.4};
    auto fn = [&]() {
        return fuzconv::weighted_sum(fuzconv::flatten_rows(model.forward(x)), coeffs);
    };
    auto report = fuzconv::grad_check(fn, model.parameters());
    std::printf("layer,max_rel_dev\n");
    for (const auto& e : report.entries) {
        std::printf("%s,%.3e\n", e.name.c_str(), e.max_rel_dev);
    }
    std::printf("worst,%.3e (tolerance %.1e)\n", report.worst(), tolerance);
    if (!report.pass(tolerance)) {
        std::fprintf(stderr, "gradient check FAILED\n");
        return 4;
    }
    std::printf("gradient check passed\n");
    return 0;
}

int cmd_flops(RunOptions& opt, int height, int width) {
    using fuzconv::Tensor;
    const int v = opt.model.pac.v_len;
    const int h = opt.model.pac.h_len;
    if (height <= 0) height = opt.model.window_size;
    if (width <= 0) width = 11;
    if (height < v || width < h) {
        fuzconv::raise(fuzconv::ErrorCode::InvalidConfig,
                       "feature map smaller than the filter pair");
    }
    const int oh = height - v + 1, ow = width - h + 1;

    // per-output-position multiply-accumulates
    const long long dense_per_pos = static_cast<long long>(v) * h;
    const long long pair_per_pos = v + h;
    std::printf("filters V=%d H=%d: per-position MACs dense=%lld decomposed=%lld (ratio %lld:%lld)\n",
                v, h, dense_per_pos, pair_per_pos, dense_per_pos, pair_per_pos);

    // whole-map counts, dense kernel vs decomposed pair, single channel
    const std::uint64_t dense_expected =
        static_cast<std::uint64_t>(oh) * ow * static_cast<std::uint64_t>(v) * h;
    const std::uint64_t pair_expected =
        static_cast<std::uint64_t>(oh) * width * v +       // vertical stage on full width
        static_cast<std::uint64_t>(oh) * ow * h;           // horizontal stage

    fuzconv::Rng rng(opt.model.seed);
    std::vector<double> data(static_cast<std::size_t>(height) * width);
    for (auto& x : data) x = fuzconv::uniform(rng, -1, 1);
    auto input = Tensor::from_data({1, 1, height, width}, data);
    auto dense_kernel = Tensor({1, 1, v, h}, 0.5);
    auto vert = Tensor({1, 1, v, 1}, 0.5);
    auto horiz = Tensor({1, 1, 1, h}, 0.5);

    fuzconv::macs::reset();
    (void)fuzconv::conv2d_valid(input, dense_kernel);
    const std::uint64_t dense_measured = fuzconv::macs::total();

    fuzconv::macs::reset();
    (void)fuzconv::conv2d_valid(fuzconv::conv2d_valid(input, vert), horiz);
    const std::uint64_t pair_measured = fuzconv::macs::total();

    std::printf("map %dx%d -> %dx%d: dense MACs expected=%llu measured=%llu\n", height, width, oh,
                ow, static_cast<unsigned long long>(dense_expected),
                static_cast<unsigned long long>(dense_measured));
    std::printf("map %dx%d -> %dx%d: decomposed MACs expected=%llu measured=%llu\n", height, width,
                oh, ow, static_cast<unsigned long long>(pair_expected),
                static_cast<unsigned long long>(pair_measured));
    if (dense_measured != dense_expected || pair_measured != pair_expected) {
        std::fprintf(stderr, "instrumented counts disagree with the closed-form counts\n");
        return 4;
    }
    std::printf("instrumented counts match\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuzzy-convolutional time series forecaster"};
    app.require_subcommand(1);

    RunOptions opt;
    double tolerance = 1e-4;
    int flops_height = 0, flops_width = 0;
    std::string forecast_csv, ranks_csv;
    double alpha_q = 0.0;

    auto add_common = [&](CLI::App* sub, bool needs_manifest) {
        if (needs_manifest) {
            sub->add_option("--manifest", opt.manifest_path, "dataset manifest (json)")->required();
        }
        sub->add_option("--config", opt.config_path, "json config file");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", opt.seed, "rng seed override");
        sub->add_option("--horizon", opt.horizon, "forecast horizon override");
        sub->add_option("--workers", opt.workers, "parallel series workers");
        sub->add_option("--window-size", opt.window_size, "sliding window size S");
        sub->add_option("--pac-depth", opt.pac_depth, "stage count K, or 'auto'");
        sub->add_option("--pac-v", opt.pac_v, "vertical filter length V");
        sub->add_option("--pac-h", opt.pac_h, "horizontal filter length H");
        sub->add_option("--pac-growth", opt.pac_growth, "channel growth rate");
        sub->add_option("--head-hidden", opt.head_hidden, "head hidden width");
        sub->add_option("--baa-filter", opt.baa_filter, "atrous filter length");
        sub->add_option("--baa-stride", opt.baa_stride, "atrous stride");
        sub->add_option("--epochs", opt.epochs, "training epochs");
        sub->add_option("--lr", opt.lr, "initial learning rate");
        sub->add_option("--batch-size", opt.batch_size, "minibatch size");
    };

    auto* preprocess = app.add_subcommand("preprocess", "dump fuzzified window tensors");
    add_common(preprocess, true);
    auto* train = app.add_subcommand("train", "train one model per series and forecast");
    add_common(train, true);
    auto* forecast = app.add_subcommand("forecast", "forecast from saved checkpoints");
    add_common(forecast, true);
    forecast->add_option("--checkpoints", opt.checkpoint_dir, "checkpoint directory");
    auto* evaluate = app.add_subcommand("evaluate", "recompute metrics / rank models");
    evaluate->add_option("--forecast", forecast_csv, "forecast csv to recompute");
    evaluate->add_option("--ranks", ranks_csv, "wide metric table csv");
    evaluate->add_option("--q", alpha_q, "critical-value override (default: q05 table)");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    add_common(gradcheck, false);
    gradcheck->add_option("--tolerance", tolerance, "max relative deviation");
    auto* flops = app.add_subcommand("flops", "dense vs decomposed MAC accounting");
    add_common(flops, false);
    flops->add_option("--height", flops_height, "probe map height");
    flops->add_option("--width", flops_width, "probe map width");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_config_file(opt);
        apply_flag_overrides(opt);
        if (preprocess->parsed()) return cmd_preprocess(opt);
        if (train->parsed()) return cmd_train(opt);
        if (forecast->parsed()) return cmd_forecast(opt);
        if (evaluate->parsed()) return cmd_evaluate(forecast_csv, ranks_csv, alpha_q);
        if (gradcheck->parsed()) return cmd_gradcheck(opt, tolerance);
        if (flops->parsed()) return cmd_flops(opt, flops_height, flops_width);
    } catch (const fuzconv::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
