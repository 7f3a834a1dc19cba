#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ierot/dataio.hpp"
#include "ierot/model.hpp"

namespace ierot::eval {

/// Row-major [rows x cols] pooled activations.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;
    std::string probe_point;

    float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Eval-mode forward at `probe_point`; maps are global-average-pooled.
/// Throws std::invalid_argument for an unknown point (message lists the valid ones).
FeatureMatrix extract_features(TwoHeadModel& model, const dataio::ChannelStats& stats, std::span<const Image> images,
                               std::string_view probe_point);

struct ProbeConfig {
    double l2 = 1e-4;
    int iters = 500;
    double lr = 0.1;
};

/// Multinomial logistic regression on z-scored features.
struct ProbeModel {
    int classes = 0;
    std::size_t features = 0;
    std::vector<double> weight;  // [classes x features]
    std::vector<double> bias;    // [classes]
    std::vector<double> mean;    // per-feature standardization
    std::vector<double> scale;
    std::vector<double> loss_history;  // objective before each accepted step, then the final value

    /// Class scores [rows x classes].
    std::vector<double> scores(const FeatureMatrix& x) const;
    /// Argmax of the scores, ties to the lowest class.
    std::vector<int> predict(const FeatureMatrix& x) const;
};

/// Full-batch gradient descent on mean cross-entropy + l2/2 * |W|^2. A step
/// that would raise the objective is retried at half the rate, so the
/// objective never increases. Throws std::invalid_argument when fewer than
/// two classes are present.
ProbeModel fit_linear_probe(const FeatureMatrix& train, std::span<const int> labels, const ProbeConfig& config = {});

/// Fraction of equal entries; lengths must match.
double top1_accuracy(std::span<const int> predictions, std::span<const int> labels);

struct RunRecord {
    std::string method;
    std::string ie_kind;
    std::uint64_t seed = 0;
    std::string probe_point;
    double top1 = 0.0;
    std::vector<double> val_curve;  // per-epoch validation accuracy, may be empty
};

struct SummaryRow {
    std::string method;
    std::string ie_kind;
    std::string probe_point;
    std::size_t runs = 0;
    double mean = 0.0;
    double std = 0.0;  // population
};

/// One row per (method, ie_kind, probe_point), in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs);

inline constexpr const char* kReportHeader = "method,ie_kind,seed,probe_point,top1";

/// Writes the comparison CSV at `path` (run rows, then "mean" and "std" rows
/// per group) and a line chart of the validation curves next to it with the
/// extension replaced by ".svg".
void emit_report(const std::vector<RunRecord>& runs, const std::filesystem::path& path);

/// Run rows of a report or probe CSV; summary rows are skipped.
std::vector<RunRecord> read_report(const std::filesystem::path& path);

/// Standalone SVG document for the curves of `runs`.
std::string render_svg(const std::vector<RunRecord>& runs);

}  // namespace ierot::eval
