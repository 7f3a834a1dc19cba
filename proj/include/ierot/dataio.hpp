#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ierot/image.hpp"

namespace ierot::dataio {

enum class CifarVariant { Cifar10, Cifar100 };

std::optional<CifarVariant> parse_variant(std::string_view name);
std::string_view to_string(CifarVariant v);

struct Dataset {
    std::vector<Image> images;
    std::vector<int> labels;
    int class_count = 0;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
    /// Checks the length and label-range invariants.
    void validate() const;
    /// Rows picked by index, in the given order.
    Dataset subset(const std::vector<std::size_t>& indices) const;
    /// First n rows (all if n >= size).
    Dataset head(std::size_t n) const;
};

struct SplitSpec {
    // train_fraction = numerator / denominator
    std::uint64_t numerator = 9;
    std::uint64_t denominator = 10;
    std::uint64_t seed = 0;
};

struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> std{};
};

inline constexpr int kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3072;
std::size_t record_size(CifarVariant v);

/// Reads one official binary file. CIFAR-100 keeps the fine label.
Dataset load_cifar(const std::filesystem::path& file, CifarVariant variant);

enum class Split { Train, Test };

/// Standard file names inside an extracted archive directory:
/// CIFAR-10 data_batch_{1..5}.bin / test_batch.bin, CIFAR-100 train.bin / test.bin.
std::vector<std::filesystem::path> split_files(const std::filesystem::path& dir,
                                               CifarVariant variant, Split split);
/// Concatenates the split's files that exist in `dir`; throws IoError if none do.
Dataset load_cifar_split(const std::filesystem::path& dir, CifarVariant variant, Split split);

/// Writes records in the official layout (CIFAR-100 coarse byte written as 0).
void write_cifar(const Dataset& ds, const std::filesystem::path& file, CifarVariant variant);

/// Shuffled partition into floor(n * num / den) and the remainder.
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, const SplitSpec& spec);
/// The index permutation behind split_train_val (train indices first).
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);

inline constexpr double kStdFloor = 1e-6;
/// Per-channel mean and population std of samples scaled to [0, 1].
ChannelStats dataset_stats(const Dataset& ds);

void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

/// Procedural 32x32 scenes for tests and smoke runs: a lit upper region over
/// a darker floor, with a class-dependent colored shape resting on the floor.
/// Scenes have a canonical "up", so rotation is learnable; labels are the
/// shape class.
Dataset make_synthetic(std::size_t count, int class_count, std::uint64_t seed);

}  // namespace ierot::dataio
