#ifndef FUZCONV_TRAINER_HPP
#define FUZCONV_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fuzconv/fuzzifier.hpp"
#include "fuzconv/model.hpp"
#include "fuzconv/series.hpp"
#include "fuzconv/tensor.hpp"

namespace fuzconv {

struct SchedulerConfig {
    double factor = 0.5;
    int patience = 5;
    double threshold = 1e-5;
    double eps = 1e-5; // lower bound on the learning rate
};

struct TrainConfig {
    int epochs = 500;
    double lr = 1e-3;
    SchedulerConfig scheduler;
    int batch_size = 32;
    std::uint64_t seed = 42;
    int horizon = 1;

    void validate() const;
};

/**
 * @brief Reduce-on-plateau learning-rate schedule.
 *
 * An observation improves when it is below best - threshold (absolute).
 * After more than `patience` consecutive non-improving observations the rate
 * is multiplied by `factor`, never dropping below `eps`; the rate is
 * non-increasing over a run.
 */
class PlateauScheduler {
public:
    PlateauScheduler(const SchedulerConfig& cfg, double initial_lr);

    /// Feed one validation loss; returns the learning rate to use next.
    double observe(double val_loss);
    double lr() const { return lr_; }

private:
    SchedulerConfig cfg_;
    double lr_;
    double best_;
    int bad_epochs_ = 0;
    bool seen_any_ = false;
};

/**
 * @brief Adam with Nesterov momentum (beta1 0.9, beta2 0.999, eps 1e-8).
 *
 * Update at step t (1-based), per element:
 *   m_t = b1*m + (1-b1)*g          v_t = b2*v + (1-b2)*g^2
 *   step = lr * (b1*m_t/(1-b1^{t+1}) + (1-b1)*g/(1-b1^t)) / (sqrt(v_t/(1-b2^t)) + eps)
 */
class NadamOptimizer {
public:
    explicit NadamOptimizer(std::vector<NamedParam> params, double beta1 = 0.9,
                            double beta2 = 0.999, double eps = 1e-8);

    void zero_grad();
    /// Apply one update from the accumulated gradients. Throws NonFiniteGrad.
    void step(double lr);
    long steps_taken() const { return t_; }

private:
    struct Slot {
        Tensor param;
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints: versioned binary container. Layout:
//   magic "FZCV", u32 version, u64 config fingerprint, u32 best epoch,
//   f64 best validation loss, u32 entry count, then per entry a manifest
//   record (u16 name length, name bytes, u8 rank, u32 dims..., u64 offset),
//   then the little-endian f64 blob section.
// ---------------------------------------------------------------------------

struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t config_fingerprint = 0;
    std::uint32_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<NamedBlob> blobs;

    const NamedBlob* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint; // best-validation parameters plus fuzzifier metadata
    std::vector<EpochStats> trace;
    std::uint32_t best_epoch = 0;
    double best_val_loss = 0.0;
};

/**
 * @brief Supervised training on window -> next-diff pairs with L1 loss.
 *
 * The last min(horizon, pairs-1) supervised pairs are held out as the
 * validation split; with no validation pairs the schedule monitors the
 * training loss. The checkpoint carries the parameters of the best
 * validation epoch plus the universe, side length and window size needed to
 * forecast.
 */
TrainResult train(const FuzzifiedDataset& data, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

/// Rebuild a model from a checkpoint produced by train().
ForecastModel model_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& model_cfg,
                                    UniverseOfDiscourse* universe_out);

// ---------------------------------------------------------------------------
// Autoregressive rollout
// ---------------------------------------------------------------------------

/**
 * @brief Read guard over a diff series: any access at or past the forecast
 * origin throws, which makes future-truth leakage a hard error instead of a
 * silent bug.
 */
class GuardedDiffView {
public:
    GuardedDiffView(const DiffSeries& diff, std::size_t origin);
    double value(std::size_t i) const;
    double timestamp(std::size_t i) const;
    std::size_t origin() const { return origin_; }

private:
    const DiffSeries& diff_;
    std::size_t origin_;
};

struct RolloutResult {
    std::vector<double> diffs;    // horizon predicted diff values
    std::size_t clamp_count = 0;  // expansions clamped into the universe
};

/**
 * @brief Multi-step forecast: repeatedly fuzzify the most recent S diffs
 * (appending each prediction), predict the next diff, `horizon` times.
 * Only diffs before `origin` are ever read from the source series.
 */
RolloutResult rollout(ForecastModel& model, const UniverseOfDiscourse& universe,
                      const DiffSeries& diff, std::size_t origin, int horizon);

} // namespace fuzconv

#endif
