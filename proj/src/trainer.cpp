#include "fuzconv/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "fuzconv/errors.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

void TrainConfig::validate() const {
    if (epochs < 1) raise(ErrorCode::InvalidConfig, "epochs must be >= 1");
    if (!(lr > 0)) raise(ErrorCode::InvalidConfig, "learning rate must be positive");
    if (!(scheduler.factor > 0 && scheduler.factor < 1)) {
        raise(ErrorCode::InvalidConfig, "scheduler factor must be in (0, 1)");
    }
    if (scheduler.patience < 0) raise(ErrorCode::InvalidConfig, "scheduler patience must be >= 0");
    if (batch_size < 1) raise(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (horizon < 1) raise(ErrorCode::InvalidConfig, "horizon must be >= 1");
}

// ---------------------------------------------------------------------------
// Scheduler
// ---------------------------------------------------------------------------

PlateauScheduler::PlateauScheduler(const SchedulerConfig& cfg, double initial_lr)
    : cfg_(cfg), lr_(initial_lr), best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::observe(double val_loss) {
    if (!seen_any_ || val_loss < best_ - cfg_.threshold) {
        best_ = std::min(best_, val_loss);
        bad_epochs_ = 0;
        seen_any_ = true;
        return lr_;
    }
    ++bad_epochs_;
    if (bad_epochs_ > cfg_.patience) {
        lr_ = std::max(lr_ * cfg_.factor, cfg_.eps);
        bad_epochs_ = 0;
    }
    return lr_;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

NadamOptimizer::NadamOptimizer(std::vector<NamedParam> params, double beta1, double beta2,
                               double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& p : params) {
        if (!p.value.requires_grad()) continue;
        Slot s;
        s.param = p.value;
        s.m.assign(p.value.size(), 0.0);
        s.v.assign(p.value.size(), 0.0);
        slots_.push_back(std::move(s));
    }
}

void NadamOptimizer::zero_grad() {
    for (auto& s : slots_) s.param.zero_grad();
}

void NadamOptimizer::step(double lr) {
    ++t_;
    const double bc1_t = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc1_next = 1.0 - std::pow(beta1_, static_cast<double>(t_ + 1));
    const double bc2_t = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& s : slots_) {
        const auto& g = s.param.grad();
        if (g.empty()) continue; // no gradient reached this parameter
        auto& x = s.param.data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi)) {
                raise(ErrorCode::NonFiniteGrad, "non-finite gradient in optimizer step");
            }
            s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
            s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
            const double m_hat = s.m[i] / bc1_next;
            const double g_hat = gi / bc1_t;
            const double v_hat = s.v[i] / bc2_t;
            x[i] -= lr * (beta1_ * m_hat + (1.0 - beta1_) * g_hat) / (std::sqrt(v_hat) + eps_);
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) raise(ErrorCode::ParseError, "truncated checkpoint file");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        }
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr char kMagic[4] = {'F', 'Z', 'C', 'V'};

} // namespace

const NamedBlob* Checkpoint::find(const std::string& name) const {
    for (const auto& b : blobs) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string manifest;
    std::string blob;
    for (const auto& b : ckpt.blobs) {
        put_u16(manifest, static_cast<std::uint16_t>(b.name.size()));
        manifest.append(b.name);
        manifest.push_back(static_cast<char>(b.shape.size()));
        for (int d : b.shape) put_u32(manifest, static_cast<std::uint32_t>(d));
        put_u64(manifest, static_cast<std::uint64_t>(blob.size()));
        for (double v : b.data) put_f64(blob, v);
    }

    std::string out;
    out.append(kMagic, 4);
    put_u32(out, ckpt.version);
    put_u64(out, ckpt.config_fingerprint);
    put_u32(out, ckpt.best_epoch);
    put_f64(out, ckpt.best_val_loss);
    put_u32(out, static_cast<std::uint32_t>(ckpt.blobs.size()));
    out += manifest;
    out += blob;

    // atomic write: temp file in place, then rename
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) raise(ErrorCode::IoError, "cannot open '" + tmp + "' for writing");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) raise(ErrorCode::IoError, "write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        raise(ErrorCode::IoError, "cannot rename '" + tmp + "' to '" + path + "'");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open checkpoint '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    if (r.bytes(4) != std::string(kMagic, 4)) {
        raise(ErrorCode::ParseError, "bad checkpoint magic in '" + path + "'");
    }
    Checkpoint ckpt;
    ckpt.version = r.u32();
    if (ckpt.version != 1) {
        raise(ErrorCode::ParseError, "unsupported checkpoint version " + std::to_string(ckpt.version));
    }
    ckpt.config_fingerprint = r.u64();
    ckpt.best_epoch = r.u32();
    ckpt.best_val_loss = r.f64();
    const std::uint32_t count = r.u32();

    struct Entry {
        std::string name;
        Shape shape;
        std::uint64_t offset;
        std::size_t size;
    };
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        const std::uint16_t name_len = r.u16();
        e.name = r.bytes(name_len);
        const int rank = static_cast<std::uint8_t>(r.bytes(1)[0]);
        std::size_t n = 1;
        for (int d = 0; d < rank; ++d) {
            const int dim = static_cast<int>(r.u32());
            e.shape.push_back(dim);
            n *= static_cast<std::size_t>(dim);
        }
        e.offset = r.u64();
        e.size = n;
        entries.push_back(std::move(e));
    }
    const std::size_t blob_start = r.pos;
    for (auto& e : entries) {
        NamedBlob b;
        b.name = std::move(e.name);
        b.shape = std::move(e.shape);
        b.data.resize(e.size);
        Reader br{buf};
        br.pos = blob_start + e.offset;
        for (std::size_t i = 0; i < e.size; ++i) b.data[i] = br.f64();
        ckpt.blobs.push_back(std::move(b));
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

double batch_loss_eval(ForecastModel& model, const FuzzifiedDataset& data,
                       const std::vector<std::size_t>& indices) {
    NoGradGuard guard;
    std::vector<const FuzzyWindowTensor*> windows;
    std::vector<double> targets;
    windows.reserve(indices.size());
    for (std::size_t i : indices) {
        windows.push_back(&data.tensors[i]);
        targets.push_back(data.targets[i]);
    }
    Tensor pred = model.forward(ForecastModel::stack_windows(windows));
    double acc = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        acc += std::abs(pred.data()[i] - targets[i]);
    }
    return acc / static_cast<double>(targets.size());
}

} // namespace

TrainResult train(const FuzzifiedDataset& data, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
    model_cfg.validate();
    train_cfg.validate();

    const std::size_t pairs = data.targets.size();
    if (pairs == 0) {
        raise(ErrorCode::NoTrainingPairs, "no supervised (window, next diff) pairs");
    }

    const std::size_t val_count =
        std::min<std::size_t>(static_cast<std::size_t>(train_cfg.horizon), pairs - 1);
    const std::size_t train_count = pairs - val_count;

    std::vector<std::size_t> train_idx(train_count);
    for (std::size_t i = 0; i < train_count; ++i) train_idx[i] = i;
    std::vector<std::size_t> val_idx(val_count);
    for (std::size_t i = 0; i < val_count; ++i) val_idx[i] = train_count + i;

    ForecastModel model(model_cfg, static_cast<int>(data.side_length));
    NadamOptimizer optimizer(model.parameters());
    PlateauScheduler scheduler(train_cfg.scheduler, train_cfg.lr);
    Rng shuffle_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ull);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<NamedBlob> best_state = model.export_state();
    double lr = train_cfg.lr;

    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        shuffle(train_idx, shuffle_rng);
        model.set_training(true);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t end =
                std::min(start + static_cast<std::size_t>(train_cfg.batch_size), train_idx.size());
            std::vector<const FuzzyWindowTensor*> windows;
            std::vector<double> targets;
            for (std::size_t i = start; i < end; ++i) {
                windows.push_back(&data.tensors[train_idx[i]]);
                targets.push_back(data.targets[train_idx[i]]);
            }
            Tensor pred = model.forward(ForecastModel::stack_windows(windows));
            Tensor loss = l1_loss(pred, targets);
            const double loss_value = loss.scalar();
            if (!std::isfinite(loss_value)) {
                raise(ErrorCode::DivergedLoss,
                      "training loss became non-finite at epoch " + std::to_string(epoch));
            }
            optimizer.zero_grad();
            backward(loss);
            optimizer.step(lr);
            epoch_loss += loss_value * static_cast<double>(targets.size());
            seen += targets.size();
        }
        epoch_loss /= static_cast<double>(seen);

        double val_loss = epoch_loss;
        if (!val_idx.empty()) {
            model.set_training(false);
            val_loss = batch_loss_eval(model, data, val_idx);
        }
        if (!std::isfinite(val_loss)) {
            raise(ErrorCode::DivergedLoss,
                  "validation loss became non-finite at epoch " + std::to_string(epoch));
        }

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = static_cast<std::uint32_t>(epoch);
            best_state = model.export_state();
        }
        result.trace.push_back({epoch, epoch_loss, val_loss, lr});
        lr = scheduler.observe(val_loss);
    }

    Checkpoint ckpt;
    ckpt.config_fingerprint = model.fingerprint();
    ckpt.best_epoch = result.best_epoch;
    ckpt.best_val_loss = result.best_val_loss;
    ckpt.blobs = std::move(best_state);
    ckpt.blobs.push_back({"meta.universe",
                          Shape{5},
                          {data.universe.lower, data.universe.upper,
                           static_cast<double>(data.universe.interval_count),
                           data.universe.interval_width, data.universe.sigma}});
    ckpt.blobs.push_back({"meta.side_length", Shape{1}, {static_cast<double>(data.side_length)}});
    ckpt.blobs.push_back(
        {"meta.window_size", Shape{1}, {static_cast<double>(data.window_size)}});
    result.checkpoint = std::move(ckpt);
    return result;
}

ForecastModel model_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& model_cfg,
                                    UniverseOfDiscourse* universe_out) {
    const NamedBlob* sl = ckpt.find("meta.side_length");
    const NamedBlob* uni = ckpt.find("meta.universe");
    const NamedBlob* ws = ckpt.find("meta.window_size");
    if (sl == nullptr || uni == nullptr || ws == nullptr || uni->data.size() != 5) {
        raise(ErrorCode::CheckpointMismatch, "checkpoint lacks fuzzifier metadata");
    }
    if (static_cast<int>(ws->data[0]) != model_cfg.window_size) {
        raise(ErrorCode::CheckpointMismatch,
              "checkpoint window size " + std::to_string(static_cast<int>(ws->data[0])) +
                  " differs from configured " + std::to_string(model_cfg.window_size));
    }
    ForecastModel model(model_cfg, static_cast<int>(sl->data[0]));
    if (model.fingerprint() != ckpt.config_fingerprint) {
        raise(ErrorCode::CheckpointMismatch,
              "configuration fingerprint " + to_hex(model.fingerprint()) +
                  " does not match checkpoint " + to_hex(ckpt.config_fingerprint));
    }
    model.load_state(ckpt.blobs);
    if (universe_out != nullptr) {
        universe_out->lower = uni->data[0];
        universe_out->upper = uni->data[1];
        universe_out->interval_count = static_cast<int>(uni->data[2]);
        universe_out->interval_width = uni->data[3];
        universe_out->sigma = uni->data[4];
    }
    return model;
}

// ---------------------------------------------------------------------------
// Rollout
// ---------------------------------------------------------------------------

GuardedDiffView::GuardedDiffView(const DiffSeries& diff, std::size_t origin)
    : diff_(diff), origin_(origin) {
    if (origin_ > diff_.length()) {
        raise(ErrorCode::ShapeMismatch, "rollout origin beyond series length");
    }
}

double GuardedDiffView::value(std::size_t i) const {
    if (i >= origin_) {
        raise(ErrorCode::LeakGuardTripped,
              "read of diff index " + std::to_string(i) + " at/after forecast origin " +
                  std::to_string(origin_));
    }
    return diff_.values[i];
}

double GuardedDiffView::timestamp(std::size_t i) const {
    if (i >= origin_) {
        raise(ErrorCode::LeakGuardTripped,
              "read of timestamp index " + std::to_string(i) + " at/after forecast origin " +
                  std::to_string(origin_));
    }
    return diff_.timestamps[i];
}

RolloutResult rollout(ForecastModel& model, const UniverseOfDiscourse& universe,
                      const DiffSeries& diff, std::size_t origin, int horizon) {
    if (horizon < 1) {
        raise(ErrorCode::HorizonZero, "rollout horizon must be >= 1");
    }
    const std::size_t s = static_cast<std::size_t>(model.config().window_size);
    GuardedDiffView guard(diff, origin);
    if (origin < s) {
        raise(ErrorCode::WindowTooLarge,
              "need at least " + std::to_string(s) + " known diffs before the origin");
    }
    if (origin < 2) {
        raise(ErrorCode::SeriesTooShort, "rollout needs at least 2 known diffs");
    }

    // working copy of the known history; predictions are appended to it
    std::vector<double> values(origin), stamps(origin);
    for (std::size_t i = 0; i < origin; ++i) {
        values[i] = guard.value(i);
        stamps[i] = guard.timestamp(i);
    }
    const double spacing = stamps[origin - 1] - stamps[origin - 2];

    RolloutResult result;
    const bool was_training = model.training();
    model.set_training(false);
    for (int step = 0; step < horizon; ++step) {
        Window w;
        w.start = values.size() - s;
        w.values.assign(values.end() - static_cast<std::ptrdiff_t>(s), values.end());
        w.timestamps.assign(stamps.end() - static_cast<std::ptrdiff_t>(s), stamps.end());
        FuzzyWindowTensor t = fuzzify_window_clamped(
            universe, w, stamps, static_cast<std::size_t>(model.side_length()),
            &result.clamp_count);

        double prediction = 0.0;
        {
            NoGradGuard no_grad;
            Tensor pred = model.forward(ForecastModel::stack_windows({&t}));
            prediction = pred.data()[0];
        }
        result.diffs.push_back(prediction);
        values.push_back(prediction);
        stamps.push_back(stamps.back() + spacing);
    }
    model.set_training(was_training);
    return result;
}

} // namespace fuzconv
