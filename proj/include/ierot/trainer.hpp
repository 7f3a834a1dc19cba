#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ierot/dataio.hpp"
#include "ierot/model.hpp"
#include "ierot/nn/optim.hpp"
#include "ierot/pretext.hpp"

namespace ierot::trainer {

/// ierot: joint rotation + enhancement prediction.
/// rotation: every image in all four rotations, rotation loss only.
/// rot_da: as rotation, after a random enhancement used as augmentation.
/// ie_only: enhancement loss only, images never rotated.
enum class TrainMode { IeRot, Rotation, RotDa, IeOnly };
enum class AlphaMode { MgdaUb, Fixed };

std::string_view to_string(TrainMode m);
std::string_view to_string(AlphaMode m);

struct RunConfig {
    TrainMode mode = TrainMode::IeRot;
    imgops::IEKind ie_kind = imgops::IEKind::Solarization;
    std::filesystem::path dataset_path;
    dataio::CifarVariant dataset_variant = dataio::CifarVariant::Cifar10;
    std::uint64_t seed = 0;
    int epochs = 100;
    int batch_size = 128;
    double lr0 = 0.01;
    double momentum = 0.9;
    double weight_decay = 5.0e-4;
    AlphaMode alpha_mode = AlphaMode::MgdaUb;
    double alpha_fixed = 0.5;
    std::filesystem::path checkpoint_dir;
    std::filesystem::path metrics_path;

    // Optional keys.
    std::size_t max_images = 0;  // 0: the whole training split
    std::vector<int> lr_milestones{30, 60, 80};
    bool nesterov = true;
    bool decay_norm_params = true;  // weight decay on batch-norm gamma and beta
    bool record_wall_time = false;

    /// `key = value` lines; '#' starts a comment. Throws ConfigError on a
    /// missing required key, an unknown key, or a bad value.
    static RunConfig parse(std::string_view text);
    /// As parse; relative paths are resolved against the file's directory.
    static RunConfig load(const std::filesystem::path& file);
    std::string to_text() const;
    void validate() const;

    nn::OptimizerConfig optimizer() const;
    nn::LrSchedule schedule() const;
};

inline constexpr const char* kRequiredKeys[] = {
    "mode",   "ie_kind",      "dataset_path", "dataset_variant", "seed",           "epochs",      "batch_size",
    "lr0",    "momentum",     "weight_decay", "alpha_mode",      "alpha_fixed",    "checkpoint_dir", "metrics_path"};

/// Closed-form minimizer over a in [0,1] of |a*g_r + (1-a)*g_i|^2:
///   a = clip(((g_i - g_r) . g_i) / |g_r - g_i|^2, 0, 1), or 0.5 when
///   |g_r - g_i|^2 < 1e-12. Computed in double.
double mgda_alpha(std::span<const float> g_rotation, std::span<const float> g_enhancement);

/// alpha * loss_r + (1 - alpha) * loss_i; alpha outside [0,1] throws.
double joint_loss(double loss_rotation, double loss_enhancement, double alpha);

/// Softmax cross-entropy of one head.
nn::Var task_loss(const nn::Var& logits, std::span<const int> labels);

struct TwoHeadOutput {
    nn::Var logits_rotation;
    nn::Var logits_enhancement;
    nn::Var features;
};

/// Features are computed once and shared by both heads.
TwoHeadOutput forward_two_head(TwoHeadModel& model, const nn::Var& x, bool training);

struct EpochMetrics {
    int epoch = 0;
    double lr = 0;
    double train_loss_r = 0;
    double train_loss_i = 0;
    double train_loss_total = 0;
    double val_acc_r = 0;
    double val_acc_i = 0;
    double alpha_mean = 0;
    double alpha_min = 0;
    double alpha_max = 0;
    double wall_seconds = 0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,lr,train_loss_R,train_loss_I,train_loss_total,val_acc_R,val_acc_I,alpha_mean,alpha_min,"
    "alpha_max,wall_seconds";
/// One CSV line without the newline; non-finite values print as "nan".
std::string metrics_row(const EpochMetrics& m);
void write_metrics(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows);
std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path);

/// Everything needed to continue a run bit-exactly.
struct TrainState {
    TwoHeadModel model;
    std::map<std::string, nn::Tensor> momentum;  // by parameter name
    Rng rng;                                      // yields one seed per epoch
    int epoch = 0;                                // completed epochs
    std::uint64_t step = 0;
    dataio::ChannelStats stats;
    std::vector<EpochMetrics> history;
    std::map<std::string, std::string> run_info;  // settings a resume must agree with

    explicit TrainState(Rng init) : model(init) {}
};

/// One optimizer step's worth of data.
struct Batch {
    nn::Tensor x;                 // normalized [N,3,32,32]
    std::vector<int> y_rotation;  // empty when the mode has no rotation loss
    std::vector<int> y_enhancement;
};

/// An epoch's sample order and labels, fixed before the first step.
struct EpochPlan {
    std::uint64_t epoch_seed = 0;
    std::vector<std::size_t> order;              // into the training split
    std::vector<pretext::LabelPair> labels;      // by training-split index
    std::vector<std::pair<std::size_t, std::size_t>> batches;  // [begin, end) into order
};

struct StepStats {
    double loss_r;  // NaN when the mode has no such loss
    double loss_i;
    double alpha;
};

struct TrainOptions {
    bool resume = false;
    int stop_after_epochs = -1;  // stop once this many epochs are complete
    std::function<void(const EpochMetrics&)> on_epoch;
};

class Trainer {
public:
    /// `pool` is the labelled training data before the train/val split;
    /// max_images is applied here.
    Trainer(RunConfig config, const dataio::Dataset& pool);

    const RunConfig& config() const { return config_; }
    TrainState& state() { return state_; }
    const dataio::Dataset& train_split() const { return train_; }
    const dataio::Dataset& val_split() const { return val_; }

    bool trains_rotation_head() const;
    bool trains_enhancement_head() const;

    /// Draws the next epoch seed from the state RNG.
    EpochPlan plan_epoch();
    Batch make_batch(const EpochPlan& plan, std::size_t b) const;
    StepStats step(const Batch& batch, double lr);
    /// Pretext accuracies on the validation split (NaN where not applicable).
    std::pair<double, double> validate();
    EpochMetrics run_epoch();

    /// Runs the remaining epochs, writing metrics and a checkpoint after each.
    /// With options.resume, first restores checkpoint_dir/checkpoint.bin.
    void run(const TrainOptions& options = {});

    std::filesystem::path checkpoint_path() const { return config_.checkpoint_dir / "checkpoint.bin"; }

private:
    RunConfig config_;
    dataio::Dataset train_;
    dataio::Dataset val_;
    std::vector<pretext::LabelPair> val_labels_;
    TrainState state_;
};

/// Loads the training split named by the config and runs it.
void train(const RunConfig& config, const TrainOptions& options = {});

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
/// Overwrites `state` in place; shapes and names must match.
void load_checkpoint(const std::filesystem::path& path, TrainState& state);
/// A fresh state restored from a checkpoint file.
TrainState read_checkpoint(const std::filesystem::path& path);

}  // namespace ierot::trainer
