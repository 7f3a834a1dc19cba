#include "ierot/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ierot/errors.hpp"

namespace ierot::trainer {

using nn::Tensor;
using nn::Var;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags for Rng::derive.
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kEpochStreamTag = 2;
constexpr std::uint64_t kValLabelTag = 3;
constexpr std::uint64_t kOrderTag = 10;
constexpr std::uint64_t kLabelTag = 11;

constexpr std::size_t kEvalBatch = 256;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (!in || !in.eof()) throw ConfigError("bad value for '" + key + "': '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = lower(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad value for '" + key + "': '" + value + "' (expected true or false)");
}

TrainMode parse_mode(const std::string& value) {
    const std::string v = lower(value);
    if (v == "ierot") return TrainMode::IeRot;
    if (v == "rotation") return TrainMode::Rotation;
    if (v == "rot_da") return TrainMode::RotDa;
    if (v == "ie_only") return TrainMode::IeOnly;
    throw ConfigError("bad value for 'mode': '" + value + "' (expected ierot, rotation, rot_da or ie_only)");
}

AlphaMode parse_alpha_mode(const std::string& value) {
    const std::string v = lower(value);
    if (v == "mgda_ub") return AlphaMode::MgdaUb;
    if (v == "fixed") return AlphaMode::Fixed;
    throw ConfigError("bad value for 'alpha_mode': '" + value + "' (expected mgda_ub or fixed)");
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

void check_finite(double loss, const char* what) {
    if (!std::isfinite(loss)) throw NumericalError(std::string("non-finite ") + what + " loss");
}

}  // namespace

std::string_view to_string(TrainMode m) {
    switch (m) {
        case TrainMode::IeRot: return "ierot";
        case TrainMode::Rotation: return "rotation";
        case TrainMode::RotDa: return "rot_da";
        case TrainMode::IeOnly: return "ie_only";
    }
    return "?";
}

std::string_view to_string(AlphaMode m) { return m == AlphaMode::MgdaUb ? "mgda_ub" : "fixed"; }

RunConfig RunConfig::parse(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
    }

    for (const char* k : kRequiredKeys)
        if (!kv.count(k)) throw ConfigError(std::string("missing required key '") + k + "'");
    static const std::set<std::string> optional{"max_images", "lr_milestones", "nesterov", "decay_norm_params",
                                                 "record_wall_time"};
    for (const auto& [k, v] : kv) {
        const bool required = std::find_if(std::begin(kRequiredKeys), std::end(kRequiredKeys),
                                           [&](const char* r) { return k == r; }) != std::end(kRequiredKeys);
        if (!required && !optional.count(k)) throw ConfigError("unknown key '" + k + "'");
    }

    RunConfig c;
    c.mode = parse_mode(kv["mode"]);
    if (auto ie = imgops::parse_ie_kind(kv["ie_kind"]))
        c.ie_kind = *ie;
    else
        throw ConfigError("bad value for 'ie_kind': '" + kv["ie_kind"] + "'");
    c.dataset_path = kv["dataset_path"];
    if (auto v = dataio::parse_variant(kv["dataset_variant"]))
        c.dataset_variant = *v;
    else
        throw ConfigError("bad value for 'dataset_variant': '" + kv["dataset_variant"] + "' (expected cifar10 or cifar100)");
    c.seed = parse_number<std::uint64_t>("seed", kv["seed"]);
    c.epochs = parse_number<int>("epochs", kv["epochs"]);
    c.batch_size = parse_number<int>("batch_size", kv["batch_size"]);
    c.lr0 = parse_number<double>("lr0", kv["lr0"]);
    c.momentum = parse_number<double>("momentum", kv["momentum"]);
    c.weight_decay = parse_number<double>("weight_decay", kv["weight_decay"]);
    c.alpha_mode = parse_alpha_mode(kv["alpha_mode"]);
    c.alpha_fixed = parse_number<double>("alpha_fixed", kv["alpha_fixed"]);
    c.checkpoint_dir = kv["checkpoint_dir"];
    c.metrics_path = kv["metrics_path"];

    if (kv.count("max_images")) c.max_images = parse_number<std::size_t>("max_images", kv["max_images"]);
    if (kv.count("nesterov")) c.nesterov = parse_bool("nesterov", kv["nesterov"]);
    if (kv.count("decay_norm_params"))
        c.decay_norm_params = parse_bool("decay_norm_params", kv["decay_norm_params"]);
    if (kv.count("record_wall_time")) c.record_wall_time = parse_bool("record_wall_time", kv["record_wall_time"]);
    if (kv.count("lr_milestones")) {
        c.lr_milestones.clear();
        std::istringstream ms(kv["lr_milestones"]);
        std::string item;
        while (std::getline(ms, item, ',')) {
            item = trim(item);
            if (!item.empty()) c.lr_milestones.push_back(parse_number<int>("lr_milestones", item));
        }
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse(ss.str());
    const auto base = file.parent_path();
    for (auto* p : {&c.dataset_path, &c.checkpoint_dir, &c.metrics_path})
        if (p->is_relative() && !base.empty()) *p = base / *p;
    return c;
}

std::string RunConfig::to_text() const {
    std::ostringstream o;
    o << "mode = " << to_string(mode) << "\n"
      << "ie_kind = " << imgops::to_string(ie_kind) << "\n"
      << "dataset_path = " << dataset_path.string() << "\n"
      << "dataset_variant = " << dataio::to_string(dataset_variant) << "\n"
      << "seed = " << seed << "\n"
      << "epochs = " << epochs << "\n"
      << "batch_size = " << batch_size << "\n"
      << "lr0 = " << fmt(lr0) << "\n"
      << "momentum = " << fmt(momentum) << "\n"
      << "weight_decay = " << fmt(weight_decay) << "\n"
      << "alpha_mode = " << to_string(alpha_mode) << "\n"
      << "alpha_fixed = " << fmt(alpha_fixed) << "\n"
      << "checkpoint_dir = " << checkpoint_dir.string() << "\n"
      << "metrics_path = " << metrics_path.string() << "\n"
      << "max_images = " << max_images << "\n"
      << "lr_milestones = ";
    for (std::size_t i = 0; i < lr_milestones.size(); ++i) o << (i ? "," : "") << lr_milestones[i];
    o << "\n"
      << "nesterov = " << (nesterov ? "true" : "false") << "\n"
      << "decay_norm_params = " << (decay_norm_params ? "true" : "false") << "\n"
      << "record_wall_time = " << (record_wall_time ? "true" : "false") << "\n";
    return o.str();
}

void RunConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(alpha_fixed >= 0.0 && alpha_fixed <= 1.0)) throw ConfigError("alpha_fixed must be in [0, 1]");
    if (checkpoint_dir.empty()) throw ConfigError("checkpoint_dir must not be empty");
    if (metrics_path.empty()) throw ConfigError("metrics_path must not be empty");
    if (!std::is_sorted(lr_milestones.begin(), lr_milestones.end())) throw ConfigError("lr_milestones must ascend");
    optimizer().validate();
}

nn::OptimizerConfig RunConfig::optimizer() const {
    nn::OptimizerConfig o;
    o.lr0 = lr0;
    o.momentum = momentum;
    o.weight_decay = weight_decay;
    o.nesterov = nesterov;
    return o;
}

nn::LrSchedule RunConfig::schedule() const {
    nn::LrSchedule s;
    s.lr0 = lr0;
    s.milestones = lr_milestones;
    s.total_epochs = std::max(epochs, 1);
    return s;
}

double mgda_alpha(std::span<const float> g_rotation, std::span<const float> g_enhancement) {
    if (g_rotation.size() != g_enhancement.size())
        throw std::invalid_argument("mgda_alpha: gradient lengths differ (" + std::to_string(g_rotation.size()) +
                                    " vs " + std::to_string(g_enhancement.size()) + ")");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g_rotation.size(); ++i) {
        const double r = g_rotation[i], e = g_enhancement[i];
        num += (e - r) * e;
        den += (r - e) * (r - e);
    }
    if (den < 1e-12) return 0.5;
    return std::clamp(num / den, 0.0, 1.0);
}

double joint_loss(double loss_rotation, double loss_enhancement, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("joint_loss: alpha outside [0, 1]");
    if (alpha == 1.0) return loss_rotation;
    if (alpha == 0.0) return loss_enhancement;
    return alpha * loss_rotation + (1.0 - alpha) * loss_enhancement;
}

Var task_loss(const Var& logits, std::span<const int> labels) { return nn::softmax_cross_entropy(logits, labels); }

TwoHeadOutput forward_two_head(TwoHeadModel& model, const Var& x, bool training) {
    Var z = model.features(x, training);
    return {model.logits(model.head_rotation(), z), model.logits(model.head_enhancement(), z), z};
}

std::string metrics_row(const EpochMetrics& m) {
    std::string out = std::to_string(m.epoch);
    for (double v : {m.lr, m.train_loss_r, m.train_loss_i, m.train_loss_total, m.val_acc_r, m.val_acc_i, m.alpha_mean,
                     m.alpha_min, m.alpha_max, m.wall_seconds})
        out += "," + fmt(v);
    return out;
}

void write_metrics(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << kMetricsHeader << "\n";
    for (const auto& r : rows) out << metrics_row(r) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMetricsHeader)
        throw FormatError(path.string() + ": unexpected metrics header");
    std::vector<EpochMetrics> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() != 11) throw FormatError(path.string() + ": expected 11 columns in '" + line + "'");
        auto num = [&](std::size_t i) { return cells[i] == "nan" ? kNaN : std::stod(cells[i]); };
        EpochMetrics m;
        m.epoch = std::stoi(cells[0]);
        double* fields[] = {&m.lr, &m.train_loss_r, &m.train_loss_i, &m.train_loss_total, &m.val_acc_r,
                            &m.val_acc_i, &m.alpha_mean, &m.alpha_min, &m.alpha_max, &m.wall_seconds};
        for (std::size_t i = 0; i < 10; ++i) *fields[i] = num(i + 1);
        rows.push_back(m);
    }
    return rows;
}

Trainer::Trainer(RunConfig config, const dataio::Dataset& pool)
    : config_(std::move(config)), state_(Rng::derive(config_.seed, {kInitTag})) {
    config_.validate();
    const dataio::Dataset used = config_.max_images ? pool.head(config_.max_images) : pool;
    used.validate();
    std::tie(train_, val_) = dataio::split_train_val(used, {9, 10, config_.seed});
    if (train_.empty()) throw ConfigError("training split is empty");

    state_.stats = dataio::dataset_stats(train_);
    state_.rng = Rng::derive(config_.seed, {kEpochStreamTag});
    for (const auto& p : state_.model.parameters()) state_.momentum[p.name()] = Tensor(p.shape(), 0.0f);
    state_.run_info = {{"mode", std::string(to_string(config_.mode))},
                       {"ie_kind", std::string(imgops::to_string(config_.ie_kind))},
                       {"seed", std::to_string(config_.seed)},
                       {"batch_size", std::to_string(config_.batch_size)},
                       {"alpha_mode", std::string(to_string(config_.alpha_mode))},
                       {"alpha_fixed", fmt(config_.alpha_fixed)},
                       {"train_images", std::to_string(train_.size())}};

    Rng vr = Rng::derive(config_.seed, {kValLabelTag});
    val_labels_.resize(val_.size());
    for (auto& l : val_labels_) l = pretext::sample_labels(vr);
}

bool Trainer::trains_rotation_head() const {
    switch (config_.mode) {
        case TrainMode::IeOnly: return false;
        case TrainMode::IeRot: return !(config_.alpha_mode == AlphaMode::Fixed && config_.alpha_fixed == 0.0);
        default: return true;
    }
}

bool Trainer::trains_enhancement_head() const {
    switch (config_.mode) {
        case TrainMode::Rotation:
        case TrainMode::RotDa: return false;
        case TrainMode::IeRot: return !(config_.alpha_mode == AlphaMode::Fixed && config_.alpha_fixed == 1.0);
        default: return true;
    }
}

EpochPlan Trainer::plan_epoch() {
    EpochPlan plan;
    plan.epoch_seed = state_.rng.next_u64();
    const std::size_t n = train_.size();

    plan.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) plan.order[i] = i;
    Rng order_rng = Rng::derive(plan.epoch_seed, {kOrderTag});
    for (std::size_t i = n; i > 1; --i) std::swap(plan.order[i - 1], plan.order[order_rng.uniform_index(i)]);

    Rng label_rng = Rng::derive(plan.epoch_seed, {kLabelTag});
    plan.labels.resize(n);
    for (auto& l : plan.labels) {
        switch (config_.mode) {
            case TrainMode::IeRot: l = pretext::sample_labels(label_rng); break;
            case TrainMode::Rotation: l = {0, 0}; break;
            case TrainMode::RotDa: l = {0, static_cast<int>(label_rng.uniform_index(4))}; break;
            case TrainMode::IeOnly: l = {0, static_cast<int>(label_rng.uniform_index(4))}; break;
        }
    }

    // A final batch too small for batch statistics is dropped.
    const std::size_t per_image =
        (config_.mode == TrainMode::Rotation || config_.mode == TrainMode::RotDa) ? 4 : 1;
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    for (std::size_t b = 0; b < n; b += bs) {
        const std::size_t e = std::min(n, b + bs);
        if ((e - b) * per_image >= 2) plan.batches.emplace_back(b, e);
    }
    return plan;
}

Batch Trainer::make_batch(const EpochPlan& plan, std::size_t b) const {
    const auto [begin, end] = plan.batches.at(b);
    std::vector<Image> images;
    std::vector<pretext::LabelPair> labels;
    for (std::size_t i = begin; i < end; ++i) {
        images.push_back(train_.images[plan.order[i]]);
        labels.push_back(plan.labels[plan.order[i]]);
    }

    Batch batch;
    std::vector<const Image*> ptrs;
    switch (config_.mode) {
        case TrainMode::IeRot:
        case TrainMode::IeOnly: {
            const auto samples =
                pretext::build_ierot_batch(images, config_.ie_kind, [&labels](std::size_t i) { return labels[i]; });
            for (const auto& s : samples) {
                ptrs.push_back(&s.image);
                if (config_.mode == TrainMode::IeRot) batch.y_rotation.push_back(s.y_rotation);
                batch.y_enhancement.push_back(s.y_enhancement);
            }
            batch.x = normalize_batch(ptrs, state_.stats);
            break;
        }
        case TrainMode::Rotation:
        case TrainMode::RotDa: {
            const auto samples = config_.mode == TrainMode::Rotation
                                     ? pretext::build_rotation_batch(images)
                                     : pretext::build_rotda_batch(images, config_.ie_kind, [&labels](std::size_t i) {
                                           return labels[i].enhancement;
                                       });
            for (const auto& s : samples) {
                ptrs.push_back(&s.image);
                batch.y_rotation.push_back(s.y_rotation);
            }
            batch.x = normalize_batch(ptrs, state_.stats);
            break;
        }
    }
    return batch;
}

StepStats Trainer::step(const Batch& batch, double lr) {
    auto& model = state_.model;
    Var z = model.features(Var::leaf(batch.x), true);
    // Heads run on a detached copy so each task's gradient at z is available
    // separately.
    Var zd = Var::leaf(z.value(), true);

    StepStats stats{kNaN, kNaN, 0.0};
    Tensor g_r, g_i;
    if (!batch.y_rotation.empty()) {
        Var loss = task_loss(model.logits(model.head_rotation(), zd), batch.y_rotation);
        stats.loss_r = loss.value()[0];
        check_finite(stats.loss_r, "rotation");
        loss.backward();
        g_r = zd.grad();
        zd.zero_grad();
    }
    if (!batch.y_enhancement.empty()) {
        Var loss = task_loss(model.logits(model.head_enhancement(), zd), batch.y_enhancement);
        stats.loss_i = loss.value()[0];
        check_finite(stats.loss_i, "enhancement");
        loss.backward();
        g_i = zd.grad();
        zd.zero_grad();
    }

    if (g_i.empty())
        stats.alpha = 1.0;
    else if (g_r.empty())
        stats.alpha = 0.0;
    else if (config_.alpha_mode == AlphaMode::Fixed)
        stats.alpha = config_.alpha_fixed;
    else
        stats.alpha = mgda_alpha(g_r.data(), g_i.data());

    const auto a = static_cast<float>(stats.alpha);
    Tensor g_z;
    if (a == 1.0f) {
        g_z = std::move(g_r);
    } else if (a == 0.0f) {
        g_z = std::move(g_i);
    } else {
        g_z = Tensor(z.shape());
        for (std::size_t i = 0; i < g_z.numel(); ++i) g_z[i] = a * g_r[i] + (1.0f - a) * g_i[i];
    }
    auto scale_head = [](const TwoHeadModel::Head& head, float w) {
        if (w == 1.0f) return;
        for (auto p : TwoHeadModel::head_parameters(head))
            if (p.has_grad())
                for (float& g : p.grad().data()) g *= w;
    };
    scale_head(model.head_rotation(), a);
    scale_head(model.head_enhancement(), 1.0f - a);
    z.backward(g_z);

    std::vector<Var> active = model.extractor_parameters();
    if (trains_rotation_head())
        for (auto p : TwoHeadModel::head_parameters(model.head_rotation())) active.push_back(p);
    if (trains_enhancement_head())
        for (auto p : TwoHeadModel::head_parameters(model.head_enhancement())) active.push_back(p);
    const auto opt = config_.optimizer();
    auto no_decay = opt;
    no_decay.weight_decay = 0.0;
    for (auto& p : active) {
        const bool norm_param = p.name().ends_with(".gamma") || p.name().ends_with(".beta");
        sgd_nesterov_step(p.mutable_value(), state_.momentum.at(p.name()), p.grad(), lr,
                          norm_param && !config_.decay_norm_params ? no_decay : opt, p.name());
    }
    for (auto p : model.parameters()) p.zero_grad();
    ++state_.step;
    return stats;
}

std::pair<double, double> Trainer::validate() {
    if (val_.empty()) return {kNaN, kNaN};
    nn::NoGradGuard guard;
    auto& model = state_.model;
    std::size_t correct_r = 0, total_r = 0, correct_i = 0, total_i = 0;
    const bool rotation_only = config_.mode == TrainMode::Rotation || config_.mode == TrainMode::RotDa;

    for (std::size_t b = 0; b < val_.size(); b += kEvalBatch) {
        const std::size_t e = std::min(val_.size(), b + kEvalBatch);
        std::vector<Image> images(val_.images.begin() + static_cast<std::ptrdiff_t>(b),
                                  val_.images.begin() + static_cast<std::ptrdiff_t>(e));
        std::vector<const Image*> ptrs;
        std::vector<int> y_r, y_i;
        std::vector<pretext::RotationSample> rot;
        std::vector<pretext::PretextSample> joint;
        if (rotation_only) {
            rot = pretext::build_rotation_batch(images);
            for (const auto& s : rot) {
                ptrs.push_back(&s.image);
                y_r.push_back(s.y_rotation);
            }
        } else {
            const bool rotate = config_.mode == TrainMode::IeRot;
            joint = pretext::build_ierot_batch(images, config_.ie_kind, [&](std::size_t i) {
                auto l = val_labels_[b + i];
                if (!rotate) l.rotation = 0;
                return l;
            });
            for (const auto& s : joint) {
                ptrs.push_back(&s.image);
                if (rotate) y_r.push_back(s.y_rotation);
                y_i.push_back(s.y_enhancement);
            }
        }
        const Var z = model.features(Var::leaf(normalize_batch(ptrs, state_.stats)), false);
        auto count = [&z](const TwoHeadModel::Head& head, const std::vector<int>& y, std::size_t& correct,
                          std::size_t& total) {
            if (y.empty()) return;
            const auto pred = nn::argmax_rows(nn::linear(z, head.weight, head.bias).value());
            for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
            total += y.size();
        };
        count(model.head_rotation(), y_r, correct_r, total_r);
        count(model.head_enhancement(), y_i, correct_i, total_i);
    }
    auto ratio = [](std::size_t c, std::size_t t) { return t ? static_cast<double>(c) / static_cast<double>(t) : kNaN; };
    return {ratio(correct_r, total_r), ratio(correct_i, total_i)};
}

EpochMetrics Trainer::run_epoch() {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = state_.epoch;
    m.lr = config_.schedule().at(state_.epoch);

    const EpochPlan plan = plan_epoch();
    std::vector<double> loss_r, loss_i, total, alpha;
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        const StepStats s = step(make_batch(plan, b), m.lr);
        if (std::isfinite(s.loss_r)) loss_r.push_back(s.loss_r);
        if (std::isfinite(s.loss_i)) loss_i.push_back(s.loss_i);
        const double tr = std::isfinite(s.loss_r) ? s.loss_r : 0.0;
        const double ti = std::isfinite(s.loss_i) ? s.loss_i : 0.0;
        total.push_back(joint_loss(tr, ti, s.alpha));
        alpha.push_back(s.alpha);
    }
    m.train_loss_r = mean_of(loss_r);
    m.train_loss_i = mean_of(loss_i);
    m.train_loss_total = mean_of(total);
    m.alpha_mean = mean_of(alpha);
    m.alpha_min = alpha.empty() ? kNaN : *std::min_element(alpha.begin(), alpha.end());
    m.alpha_max = alpha.empty() ? kNaN : *std::max_element(alpha.begin(), alpha.end());
    std::tie(m.val_acc_r, m.val_acc_i) = validate();
    if (config_.record_wall_time)
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ++state_.epoch;
    state_.history.push_back(m);
    return m;
}

void Trainer::run(const TrainOptions& options) {
    if (options.resume) {
        const auto expected = state_.run_info;
        load_checkpoint(checkpoint_path(), state_);
        for (const auto& [k, v] : expected) {
            const auto it = state_.run_info.find(k);
            if (it == state_.run_info.end() || it->second != v)
                throw ConfigError("checkpoint was written with " + k + " = " +
                                  (it == state_.run_info.end() ? "<unset>" : it->second) + ", config has " + v);
        }
    }
    write_metrics(config_.metrics_path, state_.history);
    if (state_.epoch == 0 && config_.epochs == 0) save_checkpoint(checkpoint_path(), state_);

    while (state_.epoch < config_.epochs) {
        if (options.stop_after_epochs >= 0 && state_.epoch >= options.stop_after_epochs) break;
        EpochMetrics m;
        try {
            m = run_epoch();
        } catch (const NumericalError&) {
            save_checkpoint(config_.checkpoint_dir / "failure.bin", state_);
            throw;
        }
        {
            std::ofstream out(config_.metrics_path, std::ios::app);
            out << metrics_row(m) << "\n";
            if (!out) throw IoError("write failed: " + config_.metrics_path.string());
        }
        save_checkpoint(checkpoint_path(), state_);
        if (options.on_epoch) options.on_epoch(m);
    }
}

void train(const RunConfig& config, const TrainOptions& options) {
    config.validate();
    const auto pool = dataio::load_cifar_split(config.dataset_path, config.dataset_variant, dataio::Split::Train);
    Trainer trainer(config, pool);
    trainer.run(options);
}

}  // namespace ierot::trainer
