#include "ierot/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "ierot/errors.hpp"
#include "ierot/pretext.hpp"
#include "ierot/trainer.hpp"

namespace ierot::cli {

namespace fs = std::filesystem;

namespace {

dataio::CifarVariant variant_or_throw(const std::string& name) {
    if (auto v = dataio::parse_variant(name)) return *v;
    throw ConfigError("unknown dataset variant '" + name + "' (expected cifar10 or cifar100)");
}

std::vector<double> curve_from_metrics(const fs::path& path) {
    std::vector<double> out;
    if (!fs::exists(path)) return out;
    for (const auto& m : trainer::read_metrics(path)) out.push_back(std::isfinite(m.val_acc_r) ? m.val_acc_r : m.val_acc_i);
    return out;
}

// Runs `fn`, mapping exceptions to the exit-code contract.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

int cmd_transform(const std::string& input, const fs::path& dataset, const std::string& variant,
                  const std::string& split, int rotation, const std::string& ie, int degree_index, const fs::path& out,
                  std::ostream& log) {
    const auto kind = imgops::parse_ie_kind(ie);
    if (!kind) throw ConfigError("unknown IE kind '" + ie + "'");
    Image img;
    if (input.size() > 4 && input.substr(input.size() - 4) == ".ppm") {
        img = dataio::read_ppm(input);
    } else {
        std::size_t index = 0;
        try {
            std::size_t used = 0;
            index = std::stoull(input, &used);
            if (used != input.size()) throw std::invalid_argument(input);
        } catch (const std::exception&) {
            throw ConfigError("--input must be a .ppm file or a dataset index, got '" + input + "'");
        }
        if (split != "train" && split != "test") throw ConfigError("--split must be train or test");
        const auto ds = dataio::load_cifar_split(resolve_data_dir(dataset), variant_or_throw(variant),
                                                 split == "train" ? dataio::Split::Train : dataio::Split::Test);
        if (index >= ds.size())
            throw ConfigError("index " + std::to_string(index) + " out of range (" + std::to_string(ds.size()) +
                              " images)");
        img = ds.images[index];
    }
    const Image result = pretext::compose(img, rotation, degree_index, *kind);
    dataio::write_ppm(result, out);
    log << "wrote " << out.string() << " (" << result.width() << "x" << result.height() << ")\n";
    return kSuccess;
}

int cmd_pretrain(const fs::path& config_path, bool resume, int stop_after, std::ostream& log) {
    auto config = trainer::RunConfig::load(config_path);
    config.dataset_path = resolve_data_dir(config.dataset_path);
    trainer::TrainOptions opts;
    opts.resume = resume;
    opts.stop_after_epochs = stop_after;
    opts.on_epoch = [&log](const trainer::EpochMetrics& m) { log << trainer::metrics_row(m) << "\n" << std::flush; };
    trainer::train(config, opts);
    log << "checkpoint: " << (config.checkpoint_dir / "checkpoint.bin").string() << "\n";
    return kSuccess;
}

}  // namespace

fs::path resolve_data_dir(const fs::path& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
    throw ConfigError(std::string("no dataset directory given and ") + kDataDirEnv + " is not set");
}

eval::RunRecord probe_checkpoint(const ProbeOptions& options) {
    if (!fs::exists(options.checkpoint)) throw IoError("checkpoint not found: " + options.checkpoint.string());
    auto state = trainer::read_checkpoint(options.checkpoint);
    // Validate the probe point before the (slow) data loading.
    state.model.probe(nn::Tensor({1, 3, 4, 4}), options.probe_point);

    const fs::path dir = resolve_data_dir(options.dataset);
    auto train = dataio::load_cifar_split(dir, options.variant, dataio::Split::Train);
    auto test = dataio::load_cifar_split(dir, options.variant, dataio::Split::Test);
    if (options.max_train) train = train.head(options.max_train);
    if (options.max_test) test = test.head(options.max_test);

    const auto f_train = eval::extract_features(state.model, state.stats, train.images, options.probe_point);
    const auto f_test = eval::extract_features(state.model, state.stats, test.images, options.probe_point);
    const auto probe = eval::fit_linear_probe(f_train, train.labels, options.probe);

    eval::RunRecord r;
    r.method = options.method.empty() ? state.run_info["mode"] : options.method;
    r.ie_kind = state.run_info.count("ie_kind") ? state.run_info["ie_kind"] : "";
    r.seed = state.run_info.count("seed") ? std::stoull(state.run_info["seed"]) : 0;
    r.probe_point = options.probe_point;
    r.top1 = eval::top1_accuracy(probe.predict(f_test), test.labels);
    for (const auto& m : state.history) r.val_curve.push_back(std::isfinite(m.val_acc_r) ? m.val_acc_r : m.val_acc_i);
    return r;
}

void upsert_report_row(const fs::path& path, const eval::RunRecord& row) {
    std::vector<eval::RunRecord> rows;
    if (fs::exists(path)) rows = eval::read_report(path);
    auto same = [&row](const eval::RunRecord& r) {
        return r.method == row.method && r.ie_kind == row.ie_kind && r.seed == row.seed &&
               r.probe_point == row.probe_point;
    };
    if (auto it = std::find_if(rows.begin(), rows.end(), same); it != rows.end())
        *it = row;
    else
        rows.push_back(row);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << eval::kReportHeader << "\n";
    char buf[32];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", r.top1);
        out << r.method << "," << r.ie_kind << "," << r.seed << "," << r.probe_point << "," << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

CompareResult compare(const CompareOptions& options, std::ostream& log) {
    if (options.seeds < 1) throw ConfigError("--seeds must be >= 1");
    if (!fs::is_directory(options.configs)) throw ConfigError("not a directory: " + options.configs.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(options.configs))
        if (e.is_regular_file() && e.path().extension() == ".cfg") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.size() < 2) throw ConfigError("compare needs at least two .cfg files in " + options.configs.string());

    // Parse everything up front so a bad config fails before any training.
    std::vector<std::pair<std::string, trainer::RunConfig>> jobs;
    for (const auto& f : files) jobs.emplace_back(f.stem().string(), trainer::RunConfig::load(f));
    if (options.include_random_init) {
        auto base = jobs.front().second;
        base.epochs = 0;
        jobs.emplace_back("random_init", base);
    }

    CompareResult result;
    for (const auto& [method, base] : jobs) {
        for (int s = 0; s < options.seeds; ++s) {
            auto cfg = base;
            cfg.seed = base.seed + static_cast<std::uint64_t>(s);
            const fs::path run_dir = options.out / method / ("seed" + std::to_string(cfg.seed));
            cfg.checkpoint_dir = run_dir;
            cfg.metrics_path = run_dir / "metrics.csv";
            const std::string tag = method + " seed " + std::to_string(cfg.seed);
            const int code = guarded(log, [&] {
                cfg.dataset_path = resolve_data_dir(cfg.dataset_path);
                log << "[" << tag << "] pretraining\n" << std::flush;
                trainer::train(cfg);
                ProbeOptions po;
                po.checkpoint = run_dir / "checkpoint.bin";
                po.dataset = cfg.dataset_path;
                po.variant = cfg.dataset_variant;
                po.probe_point = options.probe_point;
                po.method = method;
                po.max_train = options.probe_max_train;
                po.max_test = options.probe_max_test;
                auto record = probe_checkpoint(po);
                upsert_report_row(run_dir / "probe.csv", record);
                log << "[" << tag << "] top1 " << record.top1 << "\n" << std::flush;
                result.runs.push_back(std::move(record));
                return int{kSuccess};
            });
            if (code != kSuccess) {
                result.failures.push_back(tag);
                if (result.exit_code == kSuccess) result.exit_code = code;
            }
        }
    }
    if (!result.failures.empty()) {
        fs::create_directories(options.out);
        std::ofstream f(options.out / "failures.txt", std::ios::trunc);
        for (const auto& t : result.failures) f << t << "\n";
    }
    if (!result.runs.empty()) {
        eval::emit_report(result.runs, options.out / "report.csv");
        log << "report: " << (options.out / "report.csv").string() << "\n";
        for (const auto& s : eval::summarize(result.runs))
            log << s.method << " " << s.probe_point << ": mean " << s.mean << " std " << s.std << " over " << s.runs
                << " runs\n";
    }
    return result;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"IE-Rot self-supervised pretraining and linear-probe evaluation"};
    app.require_subcommand(1, 1);

    std::string t_input, t_variant = "cifar10", t_split = "train", t_ie = "solarization";
    fs::path t_dataset, t_out;
    int t_rotation = 0, t_degree = -1;
    auto* transform = app.add_subcommand("transform", "Write one image rotated and enhanced");
    transform->add_option("--input", t_input, "PPM file, or an index into the dataset split")->required();
    transform->add_option("--dataset", t_dataset, "Dataset directory (default: $IEROT_DATA_DIR)");
    transform->add_option("--variant", t_variant, "cifar10 or cifar100");
    transform->add_option("--split", t_split, "train or test");
    transform->add_option("--rotation", t_rotation, "Quarter turns counter-clockwise")->check(CLI::Range(0, 3));
    transform->add_option("--ie", t_ie, "brightness, contrast, saturation, sharpness or solarization");
    transform->add_option("--degree-index", t_degree, "Index into the enhancement's degree table (default: identity)")
        ->check(CLI::Range(0, 3));
    transform->add_option("--out", t_out, "Output PPM")->required();

    fs::path p_config;
    bool p_resume = false;
    int p_stop = -1;
    auto* pretrain = app.add_subcommand("pretrain", "Run pretext training from a config file");
    pretrain->add_option("--config", p_config, "Run config (key = value lines)")->required();
    pretrain->add_flag("--resume", p_resume, "Continue from checkpoint_dir/checkpoint.bin");
    pretrain->add_option("--stop-after", p_stop, "Stop once this many epochs are complete")->check(CLI::NonNegativeNumber);

    ProbeOptions po;
    std::string po_variant = "cifar10";
    fs::path po_out;
    auto* probe = app.add_subcommand("probe", "Fit a linear probe on frozen features");
    probe->add_option("--checkpoint", po.checkpoint, "Checkpoint file")->required();
    probe->add_option("--dataset", po.dataset, "Labelled dataset directory (default: $IEROT_DATA_DIR)");
    probe->add_option("--variant", po_variant, "cifar10 or cifar100");
    probe->add_option("--probe-point", po.probe_point, "pool1, pool2 or gap");
    probe->add_option("--method", po.method, "Method name for the report row");
    probe->add_option("--max-train", po.max_train, "Use the first N training images (0: all)");
    probe->add_option("--max-test", po.max_test, "Use the first N test images (0: all)");
    probe->add_option("--l2", po.probe.l2, "L2 penalty");
    probe->add_option("--iters", po.probe.iters, "Gradient descent iterations");
    probe->add_option("--lr", po.probe.lr, "Initial step size");
    probe->add_option("--out", po_out, "Report CSV to update")->required();

    CompareOptions co;
    auto* cmp = app.add_subcommand("compare", "Pretrain and probe several configs over seeds");
    cmp->add_option("--configs", co.configs, "Directory of .cfg files")->required();
    cmp->add_option("--seeds", co.seeds, "Seeds per config")->check(CLI::PositiveNumber);
    cmp->add_option("--out", co.out, "Output directory")->required();
    cmp->add_option("--probe-point", co.probe_point, "pool1, pool2 or gap");
    cmp->add_option("--probe-max-train", co.probe_max_train, "Probe on the first N training images (0: all)");
    cmp->add_option("--probe-max-test", co.probe_max_test, "Evaluate on the first N test images (0: all)");
    cmp->add_flag("--include-random-init", co.include_random_init, "Also probe untrained checkpoints");

    std::vector<fs::path> r_inputs;
    fs::path r_from, r_out;
    auto* report = app.add_subcommand("report", "Summarize probe results into a CSV table and an SVG chart");
    report->add_option("--inputs", r_inputs, "Report or probe CSV files");
    report->add_option("--from", r_from, "Directory searched for probe.csv files (curves from sibling metrics.csv)");
    report->add_option("--out", r_out, "Output CSV; the chart is written next to it")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    return guarded(err, [&]() -> int {
        if (*transform) {
            if (t_degree < 0) {
                const auto kind = imgops::parse_ie_kind(t_ie);
                if (!kind) throw ConfigError("unknown IE kind '" + t_ie + "'");
                t_degree = imgops::degree_table(*kind).identity_index();
            }
            return cmd_transform(t_input, t_dataset, t_variant, t_split, t_rotation, t_ie, t_degree, t_out, out);
        }
        if (*pretrain) return cmd_pretrain(p_config, p_resume, p_stop, out);
        if (*probe) {
            po.variant = variant_or_throw(po_variant);
            const auto record = probe_checkpoint(po);
            upsert_report_row(po_out, record);
            out << record.method << " " << record.probe_point << " top1 " << record.top1 << "\n";
            return kSuccess;
        }
        if (*cmp) return compare(co, out).exit_code;
        if (*report) {
            std::vector<eval::RunRecord> runs;
            for (const auto& f : r_inputs)
                for (auto& r : eval::read_report(f)) runs.push_back(std::move(r));
            if (!r_from.empty()) {
                std::vector<fs::path> found;
                for (const auto& e : fs::recursive_directory_iterator(r_from))
                    if (e.is_regular_file() && e.path().filename() == "probe.csv") found.push_back(e.path());
                std::sort(found.begin(), found.end());
                for (const auto& f : found) {
                    const auto curve = curve_from_metrics(f.parent_path() / "metrics.csv");
                    for (auto& r : eval::read_report(f)) {
                        r.val_curve = curve;
                        runs.push_back(std::move(r));
                    }
                }
            }
            if (runs.empty()) throw ConfigError("report: no runs found (use --inputs or --from)");
            eval::emit_report(runs, r_out);
            for (const auto& s : eval::summarize(runs))
                out << s.method << " " << s.probe_point << ": mean " << s.mean << " std " << s.std << "\n";
            return kSuccess;
        }
        return kUsageError;
    });
}

}  // namespace ierot::cli
