#include "ierot/pretext.hpp"

#include <stdexcept>

namespace ierot::pretext {

LabelSpace rotation_space() {
    return {TaskId::Rotation, {0.0, 1.0, 2.0, 3.0}, 0};
}

LabelSpace ie_space(IEKind kind) {
    const auto& table = imgops::degree_table(kind);
    return {TaskId::Enhancement, table.degrees, table.identity_index()};
}

LabelPair sample_labels(Rng& rng) {
    LabelPair p;
    p.rotation = static_cast<int>(rng.uniform_index(kLabelsPerTask));
    p.enhancement = static_cast<int>(rng.uniform_index(kLabelsPerTask));
    return p;
}

Image compose(const Image& img, int y_rotation, int y_enhancement, IEKind ie) {
    if (y_enhancement < 0 || y_enhancement >= kLabelsPerTask)
        throw std::invalid_argument("compose: IE label out of range");
    const double degree = imgops::degree_table(ie).degrees[static_cast<std::size_t>(y_enhancement)];
    return imgops::apply_ie(imgops::rotate90(img, y_rotation), ie, degree);
}

std::vector<PretextSample> build_ierot_batch(std::span<const Image> images, IEKind ie, Rng& rng) {
    if (images.empty()) throw std::invalid_argument("build_ierot_batch: empty input");
    std::vector<LabelPair> drawn(images.size());
    for (auto& p : drawn) p = sample_labels(rng);
    return build_ierot_batch(images, ie, [&](std::size_t i) { return drawn[i]; });
}

std::vector<PretextSample> build_ierot_batch(std::span<const Image> images, IEKind ie,
                                             const LabelSource& labels) {
    if (images.empty()) throw std::invalid_argument("build_ierot_batch: empty input");
    std::vector<PretextSample> out(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const LabelPair p = labels(i);
        out[i].y_rotation = p.rotation;
        out[i].y_enhancement = p.enhancement;
        out[i].source_index = i;
    }
    const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        s.image = compose(images[static_cast<std::size_t>(i)], s.y_rotation, s.y_enhancement, ie);
    }
    return out;
}

std::vector<RotationSample> build_rotation_batch(std::span<const Image> images) {
    if (images.empty()) throw std::invalid_argument("build_rotation_batch: empty input");
    std::vector<RotationSample> out(images.size() * kLabelsPerTask);
    const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto src = static_cast<std::size_t>(i);
        for (int k = 0; k < kLabelsPerTask; ++k) {
            auto& s = out[src * kLabelsPerTask + static_cast<std::size_t>(k)];
            s.image = imgops::rotate90(images[src], k);
            s.y_rotation = k;
            s.source_index = src;
        }
    }
    return out;
}

std::vector<RotationSample> build_rotda_batch(std::span<const Image> images, IEKind ie, Rng& rng) {
    if (images.empty()) throw std::invalid_argument("build_rotda_batch: empty input");
    std::vector<int> drawn(images.size());
    for (auto& d : drawn) d = static_cast<int>(rng.uniform_index(kLabelsPerTask));
    return build_rotda_batch(images, ie, [&](std::size_t i) { return drawn[i]; });
}

std::vector<RotationSample> build_rotda_batch(std::span<const Image> images, IEKind ie,
                                              const DegreeSource& degrees) {
    if (images.empty()) throw std::invalid_argument("build_rotda_batch: empty input");
    const auto& table = imgops::degree_table(ie);
    std::vector<Image> enhanced(images.size());
    std::vector<int> chosen(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        chosen[i] = degrees(i);
        if (chosen[i] < 0 || chosen[i] >= kLabelsPerTask)
            throw std::invalid_argument("build_rotda_batch: degree label out of range");
    }
    const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        enhanced[k] = imgops::apply_ie(images[k], ie, table.degrees[static_cast<std::size_t>(chosen[k])]);
    }
    return build_rotation_batch(enhanced);
}

}  // namespace ierot::pretext
