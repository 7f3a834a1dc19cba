#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ierot/image.hpp"
#include "ierot/imgops.hpp"
#include "ierot/rng.hpp"

namespace ierot::pretext {

using imgops::IEKind;

enum class TaskId { Rotation, Enhancement };

inline constexpr int kLabelsPerTask = 4;

/// Four labels of one pretext task; degree_map[label] is the transform
/// parameter (rotation quarter-turns, or an entry of the IE's DegreeTable).
struct LabelSpace {
    TaskId task;
    std::array<double, kLabelsPerTask> degree_map;
    int identity_label;
};

LabelSpace rotation_space();
LabelSpace ie_space(IEKind kind);

struct LabelPair {
    int rotation = 0;
    int enhancement = 0;
};

struct PretextSample {
    Image image;
    int y_rotation = 0;
    int y_enhancement = 0;
    std::size_t source_index = 0;
};

struct RotationSample {
    Image image;
    int y_rotation = 0;
    std::size_t source_index = 0;
};

/// Independent uniform draws over {0..3} for each task.
LabelPair sample_labels(Rng& rng);

/// Rotate by y_rotation quarter-turns, then apply the IE at degree_map[y_enhancement].
Image compose(const Image& img, int y_rotation, int y_enhancement, IEKind ie);

/// Labels for the image at a given position of the input list.
using LabelSource = std::function<LabelPair(std::size_t)>;

/// One sample per image with a fresh (y_R, y_I) pair drawn from `rng` in input order.
std::vector<PretextSample> build_ierot_batch(std::span<const Image> images, IEKind ie, Rng& rng);
std::vector<PretextSample> build_ierot_batch(std::span<const Image> images, IEKind ie,
                                             const LabelSource& labels);

/// Every image in all four rotations: entry 4*i + k is rotate90(images[i], k).
std::vector<RotationSample> build_rotation_batch(std::span<const Image> images);

/// Degree label for the image at a given position.
using DegreeSource = std::function<int(std::size_t)>;

/// As build_rotation_batch, after giving each image a uniformly drawn IE
/// degree. The IE label is not emitted.
std::vector<RotationSample> build_rotda_batch(std::span<const Image> images, IEKind ie, Rng& rng);
std::vector<RotationSample> build_rotda_batch(std::span<const Image> images, IEKind ie,
                                              const DegreeSource& degrees);

}  // namespace ierot::pretext
