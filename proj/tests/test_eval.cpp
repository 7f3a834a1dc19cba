#include "doctest.h"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ierot/eval.hpp"
#include "test_util.hpp"

using namespace ierot;
using namespace ierot::eval;
using ierot::testing::scratch_dir;

namespace {

FeatureMatrix matrix(std::size_t rows, std::size_t cols, std::vector<float> values) {
    FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = std::move(values);
    m.probe_point = "gap";
    return m;
}

// Tag-balance check: every element closes in order, attribute quotes are
// balanced, and '&' only starts one of the predefined entities.
bool well_formed_xml(const std::string& doc) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool root_seen = false;
    while (i < doc.size()) {
        if (doc[i] == '&') {
            static const char* entities[] = {"&amp;", "&lt;", "&gt;", "&quot;", "&apos;"};
            if (std::none_of(std::begin(entities), std::end(entities),
                             [&](const char* e) { return doc.compare(i, std::strlen(e), e) == 0; }))
                return false;
            ++i;
            continue;
        }
        if (doc[i] == '>') return false;
        if (doc[i] != '<') {
            ++i;
            continue;
        }
        if (doc.compare(i, 2, "<?") == 0) {
            const auto end = doc.find("?>", i);
            if (end == std::string::npos) return false;
            i = end + 2;
            continue;
        }
        std::size_t j = i + 1;
        char quote = 0;
        while (j < doc.size() && (quote || doc[j] != '>')) {
            if (quote && doc[j] == quote) quote = 0;
            else if (!quote && (doc[j] == '"' || doc[j] == '\'')) quote = doc[j];
            else if (doc[j] == '<') return false;
            ++j;
        }
        if (j == doc.size()) return false;
        std::string tag = doc.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.starts_with("/")) {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.ends_with("/");
        const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
        if (name.empty()) return false;
        if (stack.empty()) {
            if (root_seen) return false;
            root_seen = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    return root_seen && stack.empty();
}

}  // namespace

TEST_CASE("xml oracle sanity") {
    CHECK(well_formed_xml("<svg><g a=\"1\"><line/></g></svg>"));
    CHECK(well_formed_xml("<?xml version=\"1.0\"?><svg><text>a &amp; b</text></svg>"));
    CHECK_FALSE(well_formed_xml("<svg><g></svg></g>"));
    CHECK_FALSE(well_formed_xml("<svg><text>a & b</text></svg>"));
    CHECK_FALSE(well_formed_xml("<svg><text>a < b</text></svg>"));
    CHECK_FALSE(well_formed_xml("<svg></svg><svg></svg>"));
}

TEST_CASE("feature extraction dimensions and purity") {
    Rng init(3);
    TwoHeadModel model(init);
    const auto ds = dataio::make_synthetic(6, 10, 4);
    const auto stats = dataio::dataset_stats(ds);
    const auto before = model.checksum();

    const auto gap = extract_features(model, stats, ds.images, "gap");
    CHECK(gap.rows == 6);
    CHECK(gap.cols == 128);
    CHECK(gap.values.size() == 6 * 128);
    CHECK(gap.probe_point == "gap");
    const auto pool1 = extract_features(model, stats, ds.images, "pool1");
    CHECK(pool1.cols == 64);
    const auto pool2 = extract_features(model, stats, ds.images, "pool2");
    CHECK(pool2.cols == 128);
    CHECK(model.checksum() == before);

    // Eval mode: a row does not depend on the rest of the batch.
    std::vector<Image> dup{ds.images[2], ds.images[2], ds.images[0]};
    const auto d = extract_features(model, stats, dup, "gap");
    for (std::size_t c = 0; c < d.cols; ++c) {
        CHECK(d.at(0, c) == d.at(1, c));
        CHECK(d.at(0, c) == gap.at(2, c));
    }

    try {
        extract_features(model, stats, ds.images, "conv9");
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (const char* p : {"pool1", "pool2", "gap"}) CHECK(msg.find(p) != std::string::npos);
    }
}

TEST_CASE("linear probe separates a separable toy problem") {
    Rng rng(8);
    const std::size_t n = 90;
    std::vector<float> values;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % 3);
        labels.push_back(k);
        values.push_back(static_cast<float>(4.0 * (k == 1) + 0.3 * rng.normal()));
        values.push_back(static_cast<float>(4.0 * (k == 2) + 0.3 * rng.normal()));
        values.push_back(static_cast<float>(rng.normal()));
    }
    const auto x = matrix(n, 3, values);
    const auto probe = fit_linear_probe(x, labels);
    CHECK(probe.classes == 3);
    CHECK(top1_accuracy(probe.predict(x), labels) == 1.0);

    for (std::size_t i = 1; i < probe.loss_history.size(); ++i) CHECK(probe.loss_history[i] <= probe.loss_history[i - 1]);
    CHECK(probe.loss_history.back() < probe.loss_history.front());

    // Doubling the features leaves predictions unchanged (z-scoring).
    auto doubled = x;
    for (auto& v : doubled.values) v *= 2.0f;
    CHECK(fit_linear_probe(doubled, labels).predict(doubled) == probe.predict(x));

    // Permuting feature columns gives the same predictions.
    auto permuted = x;
    for (std::size_t r = 0; r < n; ++r) {
        permuted.values[r * 3 + 0] = x.at(r, 2);
        permuted.values[r * 3 + 1] = x.at(r, 0);
        permuted.values[r * 3 + 2] = x.at(r, 1);
    }
    const auto pp = fit_linear_probe(permuted, labels);
    CHECK(pp.predict(permuted) == probe.predict(x));
    const auto s0 = probe.scores(x), s1 = pp.scores(permuted);
    for (std::size_t i = 0; i < s0.size(); ++i) CHECK(s1[i] == doctest::Approx(s0[i]).epsilon(1e-9));
}

TEST_CASE("linear probe on constant features predicts the majority class") {
    const std::vector<int> labels{0, 1, 1, 2, 1, 0, 1, 2, 1, 1};
    const auto x = matrix(labels.size(), 4, std::vector<float>(labels.size() * 4, 0.7f));
    const auto probe = fit_linear_probe(x, labels);
    const auto pred = probe.predict(x);
    CHECK(std::all_of(pred.begin(), pred.end(), [](int p) { return p == 1; }));
    CHECK(top1_accuracy(pred, labels) == doctest::Approx(0.6));
}

TEST_CASE("linear probe rejects degenerate input") {
    const auto x = matrix(3, 2, {1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS(fit_linear_probe(x, std::vector<int>{1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(fit_linear_probe(x, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST_CASE("top1_accuracy examples") {
    CHECK(top1_accuracy(std::vector<int>{1, 2, 3, 4}, std::vector<int>{1, 2, 0, 4}) == 0.75);
    CHECK(top1_accuracy(std::vector<int>{0}, std::vector<int>{0}) == 1.0);
    CHECK(top1_accuracy(std::vector<int>{0, 0}, std::vector<int>{1, 1}) == 0.0);
    CHECK_THROWS_AS(top1_accuracy(std::vector<int>{0}, std::vector<int>{0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(top1_accuracy(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("summaries and report files") {
    std::vector<RunRecord> runs;
    const double top[3][3] = {{0.5, 0.6, 0.7}, {0.4, 0.4, 0.4}, {0.9, 0.1, 0.5}};
    const char* methods[3] = {"ierot", "rotation", "rot_da"};
    for (int m = 0; m < 3; ++m)
        for (int s = 0; s < 3; ++s)
            runs.push_back({methods[m], "brightness", static_cast<std::uint64_t>(s), "gap", top[m][s],
                            {0.1 * s, 0.2 + 0.1 * m, 0.5}});

    const auto summary = summarize(runs);
    REQUIRE(summary.size() == 3);
    CHECK(summary[0].method == "ierot");
    CHECK(summary[0].runs == 3);
    CHECK(summary[0].mean == doctest::Approx(0.6));
    CHECK(summary[0].std == doctest::Approx(std::sqrt(0.02 / 3)));
    CHECK(summary[1].std == doctest::Approx(0.0));
    CHECK(summary[2].mean == doctest::Approx(0.5));
    CHECK(summary[2].std == doctest::Approx(std::sqrt(0.32 / 3)));

    const auto dir = scratch_dir("report");
    emit_report(runs, dir / "report.csv");
    std::ifstream in(dir / "report.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == kReportHeader);
    int run_rows = 0, mean_rows = 0, std_rows = 0;
    while (std::getline(in, line)) {
        if (line.find(",mean,") != std::string::npos) ++mean_rows;
        else if (line.find(",std,") != std::string::npos) ++std_rows;
        else ++run_rows;
    }
    CHECK(run_rows == 9);
    CHECK(mean_rows == 3);
    CHECK(std_rows == 3);

    const auto back = read_report(dir / "report.csv");
    REQUIRE(back.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(back[i].method == runs[i].method);
        CHECK(back[i].seed == runs[i].seed);
        CHECK(back[i].top1 == runs[i].top1);
    }

    REQUIRE(std::filesystem::exists(dir / "report.svg"));
    std::ifstream svg_in(dir / "report.svg");
    std::stringstream svg;
    svg << svg_in.rdbuf();
    CHECK(well_formed_xml(svg.str()));
    CHECK(svg.str().find("epoch") != std::string::npos);
    CHECK(svg.str().find("accuracy") != std::string::npos);
}

TEST_CASE("svg escapes labels and tolerates missing curves") {
    std::vector<RunRecord> runs{{"a<b&c", "\"x\"", 0, "gap", 0.5, {0.1, 0.2}}, {"plain", "none", 1, "gap", 0.3, {}}};
    const auto doc = render_svg(runs);
    CHECK(well_formed_xml(doc));
    CHECK(doc.find("a<b") == std::string::npos);
    CHECK(well_formed_xml(render_svg({})));
}
