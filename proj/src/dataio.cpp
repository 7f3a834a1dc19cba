#include "ierot/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ierot/errors.hpp"
#include "ierot/rng.hpp"

namespace ierot::dataio {

namespace fs = std::filesystem;

std::optional<CifarVariant> parse_variant(std::string_view name) {
    if (name == "cifar10") return CifarVariant::Cifar10;
    if (name == "cifar100") return CifarVariant::Cifar100;
    return std::nullopt;
}

std::string_view to_string(CifarVariant v) {
    return v == CifarVariant::Cifar10 ? "cifar10" : "cifar100";
}

void Dataset::validate() const {
    if (images.size() != labels.size())
        throw std::invalid_argument("Dataset: images and labels differ in length");
    for (int label : labels)
        if (label < 0 || label >= class_count)
            throw std::invalid_argument("Dataset: label out of range");
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.class_count = class_count;
    out.images.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.images.push_back(images.at(i));
        out.labels.push_back(labels.at(i));
    }
    return out;
}

Dataset Dataset::head(std::size_t n) const {
    std::vector<std::size_t> idx(std::min(n, size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return subset(idx);
}

std::size_t record_size(CifarVariant v) {
    return kCifarPixels + (v == CifarVariant::Cifar10 ? 1 : 2);
}

Dataset load_cifar(const fs::path& file, CifarVariant variant) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    const std::size_t rec = record_size(variant);
    if (bytes.size() % rec != 0)
        throw FormatError(file.string() + ": length " + std::to_string(bytes.size()) +
                          " is not a multiple of the " + std::to_string(rec) + "-byte record");
    Dataset ds;
    ds.class_count = variant == CifarVariant::Cifar10 ? 10 : 100;
    const std::size_t n = bytes.size() / rec;
    ds.images.reserve(n);
    ds.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + i * rec);
        const int label = variant == CifarVariant::Cifar10 ? p[0] : p[1];
        if (label >= ds.class_count)
            throw FormatError(file.string() + ": label " + std::to_string(label) +
                              " out of range in record " + std::to_string(i));
        const std::uint8_t* pixels = p + (rec - kCifarPixels);
        ds.images.emplace_back(kCifarSide, kCifarSide,
                               std::vector<std::uint8_t>(pixels, pixels + kCifarPixels));
        ds.labels.push_back(label);
    }
    return ds;
}

std::vector<fs::path> split_files(const fs::path& dir, CifarVariant variant, Split split) {
    if (variant == CifarVariant::Cifar100)
        return {dir / (split == Split::Train ? "train.bin" : "test.bin")};
    if (split == Split::Test) return {dir / "test_batch.bin"};
    std::vector<fs::path> files;
    for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    return files;
}

Dataset load_cifar_split(const fs::path& dir, CifarVariant variant, Split split) {
    Dataset all;
    all.class_count = variant == CifarVariant::Cifar10 ? 10 : 100;
    bool any = false;
    for (const auto& f : split_files(dir, variant, split)) {
        if (!fs::exists(f)) continue;
        any = true;
        Dataset part = load_cifar(f, variant);
        all.images.insert(all.images.end(), std::make_move_iterator(part.images.begin()),
                          std::make_move_iterator(part.images.end()));
        all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
    }
    if (!any)
        throw IoError("no " + std::string(to_string(variant)) + " " +
                      (split == Split::Train ? "train" : "test") + " files in " + dir.string());
    return all;
}

void write_cifar(const Dataset& ds, const fs::path& file, CifarVariant variant) {
    ds.validate();
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Image& img = ds.images[i];
        if (img.height() != kCifarSide || img.width() != kCifarSide)
            throw std::invalid_argument("write_cifar: images must be 32x32");
        if (variant == CifarVariant::Cifar100) out.put(0);
        out.put(static_cast<char>(ds.labels[i]));
        out.write(reinterpret_cast<const char*>(img.data().data()),
                  static_cast<std::streamsize>(img.size()));
    }
    if (!out) throw IoError("write failed: " + file.string());
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    return perm;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, const SplitSpec& spec) {
    if (ds.empty()) throw std::invalid_argument("split_train_val: empty dataset");
    if (spec.denominator == 0 || spec.numerator == 0 || spec.numerator >= spec.denominator)
        throw std::invalid_argument("split_train_val: train fraction must be in (0, 1)");
    const auto perm = split_permutation(ds.size(), spec.seed);
    const std::size_t n_train = ds.size() * spec.numerator / spec.denominator;
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return {ds.subset(train), ds.subset(val)};
}

ChannelStats dataset_stats(const Dataset& ds) {
    if (ds.empty()) throw std::invalid_argument("dataset_stats: empty dataset");
    ChannelStats stats;
    for (int c = 0; c < 3; ++c) {
        // Integer accumulation keeps the result independent of image order.
        std::uint64_t sum = 0;
        std::uint64_t sum_sq = 0;
        std::uint64_t count = 0;
        for (const Image& img : ds.images) {
            for (std::uint8_t v : img.plane(c)) {
                sum += v;
                sum_sq += static_cast<std::uint64_t>(v) * v;
            }
            count += img.plane_size();
        }
        const double n = static_cast<double>(count);
        const double mean = static_cast<double>(sum) / n;
        const double var = std::max(0.0, static_cast<double>(sum_sq) / n - mean * mean);
        stats.mean[c] = mean / 255.0;
        stats.std[c] = std::max(std::sqrt(var) / 255.0, kStdFloor);
    }
    return stats;
}

void write_ppm(const Image& img, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<char> payload(img.size());
    std::size_t k = 0;
    for (int r = 0; r < img.height(); ++r)
        for (int col = 0; col < img.width(); ++col)
            for (int c = 0; c < 3; ++c) payload[k++] = static_cast<char>(img.at(c, r, col));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
    std::string tok;
    while (true) {
        const int ch = in.get();
        if (ch == EOF) break;
        if (ch == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

}  // namespace

Image read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (ppm_token(in) != "P6") throw FormatError(path.string() + ": not a binary PPM (P6)");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(ppm_token(in));
        height = std::stoi(ppm_token(in));
        maxval = std::stoi(ppm_token(in));
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": malformed PPM header");
    }
    if (width <= 0 || height <= 0 || maxval != 255)
        throw FormatError(path.string() + ": unsupported PPM geometry or maxval");
    std::vector<char> payload(static_cast<std::size_t>(width) * height * 3);
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(payload.size()))
        throw FormatError(path.string() + ": truncated PPM payload");
    Image img(height, width);
    std::size_t k = 0;
    for (int r = 0; r < height; ++r)
        for (int col = 0; col < width; ++col)
            for (int c = 0; c < 3; ++c) img.at(c, r, col) = static_cast<std::uint8_t>(payload[k++]);
    return img;
}

namespace {

struct Rgb {
    double r, g, b;
};

constexpr std::array<Rgb, 4> kShapePalettes = {{
    {220, 40, 40}, {40, 80, 220}, {240, 200, 30}, {60, 180, 60},
}};

bool inside_shape(int shape, double dx, double dy, double size) {
    // dx, dy relative to the shape's base-center; dy grows downward.
    switch (shape) {
        case 0:  // disc resting on the floor
            return dx * dx + (dy + size) * (dy + size) <= size * size;
        case 1:  // upright square
            return std::abs(dx) <= size && dy <= 0 && dy >= -2 * size;
        case 2:  // triangle, apex up
            return dy <= 0 && dy >= -2 * size && std::abs(dx) <= (2 * size + dy) * 0.5;
        case 3:  // tall thin pole with a cap
            return (std::abs(dx) <= size * 0.3 && dy <= 0 && dy >= -2.5 * size) ||
                   (std::abs(dx) <= size && dy <= -2.2 * size && dy >= -2.8 * size);
        default:  // wide low box
            return std::abs(dx) <= 1.5 * size && dy <= 0 && dy >= -size;
    }
}

}  // namespace

Dataset make_synthetic(std::size_t count, int class_count, std::uint64_t seed) {
    if (class_count < 1) throw std::invalid_argument("make_synthetic: class_count must be >= 1");
    Dataset ds;
    ds.class_count = class_count;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = Rng::derive(seed, {i});
        const int label = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(class_count)));
        const int shape = label % 5;
        const Rgb tint = kShapePalettes[static_cast<std::size_t>(label / 5) % kShapePalettes.size()];

        const int horizon = 18 + static_cast<int>(rng.uniform_index(7));
        const Rgb sky{150 + 60 * rng.uniform01(), 170 + 60 * rng.uniform01(), 210 + 40 * rng.uniform01()};
        const Rgb ground{60 + 50 * rng.uniform01(), 50 + 40 * rng.uniform01(), 30 + 30 * rng.uniform01()};
        const double cx = 8 + 16 * rng.uniform01();
        const double size = 3.5 + 3.0 * rng.uniform01();
        const double shade = 0.75 + 0.25 * rng.uniform01();

        Image img(kCifarSide, kCifarSide);
        for (int r = 0; r < kCifarSide; ++r) {
            for (int col = 0; col < kCifarSide; ++col) {
                Rgb px;
                if (r < horizon) {
                    const double t = 0.55 + 0.45 * r / horizon;  // brighter toward the horizon
                    px = {sky.r * t, sky.g * t, sky.b * t};
                } else {
                    const double t = 1.0 - 0.4 * (r - horizon) / (kCifarSide - horizon);
                    px = {ground.r * t, ground.g * t, ground.b * t};
                }
                if (inside_shape(shape, col - cx, r - horizon, size)) {
                    const double lit = shade * (1.0 - 0.3 * (col - cx + size) / (4 * size));
                    px = {tint.r * lit, tint.g * lit, tint.b * lit};
                }
                const double noise = 12.0 * (rng.uniform01() - 0.5);
                const std::array<double, 3> ch{px.r + noise, px.g + noise, px.b + noise};
                for (int c = 0; c < 3; ++c)
                    img.at(c, r, col) = static_cast<std::uint8_t>(std::clamp(std::round(ch[c]), 0.0, 255.0));
            }
        }
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
    }
    return ds;
}

}  // namespace ierot::dataio
