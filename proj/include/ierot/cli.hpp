#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ierot/dataio.hpp"
#include "ierot/eval.hpp"

namespace ierot::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsageError = 2, kNumericalFailure = 3 };

/// Environment variable naming the default dataset directory.
inline constexpr const char* kDataDirEnv = "IEROT_DATA_DIR";

/// Entry point shared by the executable and the tests. argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Explicit path, else $IEROT_DATA_DIR; throws ConfigError if neither is set.
std::filesystem::path resolve_data_dir(const std::filesystem::path& explicit_path);

struct ProbeOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path dataset;
    dataio::CifarVariant variant = dataio::CifarVariant::Cifar10;
    std::string probe_point = "gap";
    std::string method;        // default: the checkpoint's training mode
    std::size_t max_train = 0;  // 0: all
    std::size_t max_test = 0;
    eval::ProbeConfig probe;
};

/// Features from both splits, probe fit on train, top-1 on test.
eval::RunRecord probe_checkpoint(const ProbeOptions& options);

/// Replaces the row with the same method, ie_kind, seed and probe point, or
/// appends it; creates the file with a header if needed.
void upsert_report_row(const std::filesystem::path& path, const eval::RunRecord& row);

struct CompareOptions {
    std::filesystem::path configs;  // directory of *.cfg files; method = file stem
    int seeds = 3;
    std::filesystem::path out;
    std::string probe_point = "gap";
    std::size_t probe_max_train = 0;
    std::size_t probe_max_test = 0;
    bool include_random_init = false;
};

struct CompareResult {
    std::vector<eval::RunRecord> runs;
    std::vector<std::string> failures;
    int exit_code = kSuccess;
};

/// Pretrain and probe every (config, seed), then write out/report.csv and out/report.svg.
CompareResult compare(const CompareOptions& options, std::ostream& log);

}  // namespace ierot::cli
