#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "ierot/pretext.hpp"
#include "test_util.hpp"

using namespace ierot;
using namespace ierot::pretext;
using ierot::testing::random_image;

namespace {

std::vector<Image> random_images(std::size_t n, std::uint64_t seed, int side = 6) {
    Rng rng(seed);
    std::vector<Image> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_image(rng, side, side));
    return out;
}

}  // namespace

TEST_CASE("label spaces have four labels and one identity") {
    const auto rot = rotation_space();
    CHECK(rot.task == TaskId::Rotation);
    CHECK(rot.degree_map == std::array<double, 4>{0, 1, 2, 3});
    CHECK(rot.identity_label == 0);
    for (IEKind k : imgops::kAllIEKinds) {
        const auto s = ie_space(k);
        CHECK(s.task == TaskId::Enhancement);
        CHECK(s.degree_map == imgops::degree_table(k).degrees);
    }
    CHECK(ie_space(IEKind::Solarization).identity_label == 3);
    CHECK(ie_space(IEKind::Contrast).identity_label == 2);
}

TEST_CASE("sample_labels: range, determinism, and uniformity") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        const auto pa = sample_labels(a);
        const auto pb = sample_labels(b);
        CHECK(pa.rotation == pb.rotation);
        CHECK(pa.enhancement == pb.enhancement);
    }

    // 40000 draws over 16 cells: expected 2500, sd ~ 48.4, bound 200 is > 4 sd.
    Rng rng(7);
    std::array<int, 16> counts{};
    for (int i = 0; i < 40000; ++i) {
        const auto p = sample_labels(rng);
        REQUIRE((p.rotation >= 0 && p.rotation < 4));
        REQUIRE((p.enhancement >= 0 && p.enhancement < 4));
        ++counts[static_cast<std::size_t>(p.rotation * 4 + p.enhancement)];
    }
    for (int c : counts) CHECK(std::abs(c - 2500) <= 200);
}

TEST_CASE("compose examples") {
    Rng rng(1);
    const Image img = random_image(rng, 5, 7);
    for (IEKind k : imgops::kAllIEKinds) CHECK(compose(img, 0, ie_space(k).identity_label, k) == img);

    for (int r = 0; r < 4; ++r)
        for (int d = 0; d < 4; ++d) {
            const int t = static_cast<int>(imgops::degree_table(IEKind::Solarization).degrees[static_cast<std::size_t>(d)]);
            CHECK(compose(img, r, d, IEKind::Solarization) ==
                  imgops::rotate90(imgops::solarize(img, t), r));
        }

    const Image px(1, 1, {10, 10, 10});
    CHECK(compose(px, 2, 0, IEKind::Solarization) == Image(1, 1, {245, 245, 245}));
}

TEST_CASE("composition order is immaterial for pointwise enhancements") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const Image img = random_image(rng, 4, 6);
        for (IEKind k : {IEKind::Brightness, IEKind::Saturation, IEKind::Solarization})
            for (int r = 0; r < 4; ++r)
                for (int d = 0; d < 4; ++d) {
                    const double deg = imgops::degree_table(k).degrees[static_cast<std::size_t>(d)];
                    CHECK(compose(img, r, d, k) == imgops::rotate90(imgops::apply_ie(img, k, deg), r));
                }
    }
}

TEST_CASE("build_ierot_batch") {
    const auto images = random_images(9, 3);
    Rng rng(5);
    const auto batch = build_ierot_batch(images, IEKind::Solarization, rng);
    REQUIRE(batch.size() == images.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(batch[i].source_index == i);
        CHECK((batch[i].y_rotation >= 0 && batch[i].y_rotation < 4));
        CHECK((batch[i].y_enhancement >= 0 && batch[i].y_enhancement < 4));
        CHECK(batch[i].image == compose(images[i], batch[i].y_rotation, batch[i].y_enhancement,
                                        IEKind::Solarization));
    }

    const auto stubbed = build_ierot_batch(images, IEKind::Solarization,
                                           [](std::size_t) { return LabelPair{0, 3}; });
    for (std::size_t i = 0; i < images.size(); ++i) CHECK(stubbed[i].image == images[i]);

    Rng again(5);
    const auto batch2 = build_ierot_batch(images, IEKind::Solarization, again);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(batch2[i].image == batch[i].image);

    CHECK_THROWS_AS(build_ierot_batch(std::vector<Image>{}, IEKind::Solarization, rng),
                    std::invalid_argument);
}

TEST_CASE("build_ierot_batch: label marginals stay uniform across epochs") {
    const auto images = random_images(100, 4, 2);
    std::array<int, 4> rot{}, ie{};
    for (std::uint64_t epoch = 0; epoch < 100; ++epoch) {
        Rng rng = Rng::derive(17, {epoch});
        for (const auto& s : build_ierot_batch(images, IEKind::Brightness, rng)) {
            ++rot[static_cast<std::size_t>(s.y_rotation)];
            ++ie[static_cast<std::size_t>(s.y_enhancement)];
        }
    }
    // 10000 draws per task: expected 2500 per label, sd ~ 43.3.
    for (int c : rot) CHECK(std::abs(c - 2500) <= 200);
    for (int c : ie) CHECK(std::abs(c - 2500) <= 200);
}

TEST_CASE("build_rotation_batch enumerates all four rotations") {
    const auto images = random_images(5, 6, 5);
    const auto batch = build_rotation_batch(images);
    REQUIRE(batch.size() == 20);
    std::array<int, 4> counts{};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        ++counts[static_cast<std::size_t>(batch[i].y_rotation)];
        CHECK(batch[i].source_index == i / 4);
        CHECK(batch[i].image == imgops::rotate90(images[i / 4], batch[i].y_rotation));
    }
    for (int c : counts) CHECK(c == 5);

    const auto single = build_rotation_batch(std::vector<Image>{images[0]});
    REQUIRE(single.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(single[static_cast<std::size_t>(k)].y_rotation == k);
    CHECK_THROWS_AS(build_rotation_batch(std::vector<Image>{}), std::invalid_argument);
}

TEST_CASE("build_rotda_batch") {
    const auto images = random_images(6, 7);
    const auto identity = build_rotda_batch(images, IEKind::Solarization,
                                            [](std::size_t) { return 3; });
    const auto plain = build_rotation_batch(images);
    REQUIRE(identity.size() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(identity[i].image == plain[i].image);
        CHECK(identity[i].y_rotation == plain[i].y_rotation);
    }

    // Degrees are drawn uniformly: recover them by matching against each table entry.
    const auto many = random_images(400, 8, 4);
    Rng rng(9);
    const auto batch = build_rotda_batch(many, IEKind::Solarization, rng);
    std::array<int, 4> counts{};
    for (std::size_t i = 0; i < many.size(); ++i) {
        const Image& unrotated = batch[i * 4].image;  // k = 0 entry
        int found = -1;
        for (int d = 0; d < 4; ++d)
            if (imgops::solarize(many[i], static_cast<int>(imgops::degree_table(IEKind::Solarization)
                                                               .degrees[static_cast<std::size_t>(d)])) ==
                unrotated) {
                found = d;
                break;
            }
        REQUIRE(found >= 0);
        ++counts[static_cast<std::size_t>(found)];
    }
    // Threshold 0 and 85 can coincide on 4x4 images only if no sample lies in [0,85): negligible.
    // 400 draws, expected 100 each, sd ~ 8.7.
    for (int c : counts) CHECK(std::abs(c - 100) <= 45);
    CHECK_THROWS_AS(build_rotda_batch(std::vector<Image>{}, IEKind::Solarization, rng),
                    std::invalid_argument);
}
