#include "ierot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ierot/errors.hpp"

namespace ierot::eval {

namespace {

constexpr std::size_t kExtractBatch = 256;

std::string fmt(double v, const char* spec = "%.6f") {
    if (!std::isfinite(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

// Mean cross-entropy plus the L2 term, and optionally its gradient.
double objective(const std::vector<double>& z, std::size_t rows, std::size_t cols, std::span<const int> labels,
                 int classes, const std::vector<double>& w, const std::vector<double>& b, double l2,
                 std::vector<double>* gw, std::vector<double>* gb) {
    const auto k = static_cast<std::size_t>(classes);
    if (gw) {
        gw->assign(w.size(), 0.0);
        gb->assign(b.size(), 0.0);
    }
    std::vector<double> s(k);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = z.data() + r * cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            double v = b[c];
            const double* wc = w.data() + c * cols;
            for (std::size_t j = 0; j < cols; ++j) v += wc[j] * x[j];
            s[c] = v;
            mx = std::max(mx, v);
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(s[c] - mx);
        const auto y = static_cast<std::size_t>(labels[r]);
        loss += mx + std::log(sum) - s[y];
        if (gw) {
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (std::exp(s[c] - mx) / sum - (c == y ? 1.0 : 0.0)) / static_cast<double>(rows);
                double* gc = gw->data() + c * cols;
                for (std::size_t j = 0; j < cols; ++j) gc[j] += d * x[j];
                (*gb)[c] += d;
            }
        }
    }
    double reg = 0.0;
    for (double v : w) reg += v * v;
    if (gw)
        for (std::size_t i = 0; i < w.size(); ++i) (*gw)[i] += l2 * w[i];
    return loss / static_cast<double>(rows) + 0.5 * l2 * reg;
}

std::vector<double> standardize(const FeatureMatrix& x, const std::vector<double>& mean, const std::vector<double>& scale) {
    std::vector<double> z(x.rows * x.cols);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c)
            z[r * x.cols + c] = (static_cast<double>(x.at(r, c)) - mean[c]) / scale[c];
    return z;
}

}  // namespace

FeatureMatrix extract_features(TwoHeadModel& model, const dataio::ChannelStats& stats, std::span<const Image> images,
                               std::string_view probe_point) {
    FeatureMatrix out;
    out.probe_point = std::string(probe_point);
    if (images.empty()) {
        // Still validate the name.
        model.probe(nn::Tensor({1, 3, 4, 4}), probe_point);
        return out;
    }
    for (std::size_t b = 0; b < images.size(); b += kExtractBatch) {
        const std::size_t e = std::min(images.size(), b + kExtractBatch);
        std::vector<const Image*> ptrs;
        for (std::size_t i = b; i < e; ++i) ptrs.push_back(&images[i]);
        const nn::Tensor f = model.probe(normalize_batch(ptrs, stats), probe_point);
        out.cols = f.dim(1);
        out.values.insert(out.values.end(), f.data().begin(), f.data().end());
    }
    out.rows = images.size();
    for (float v : out.values)
        if (!std::isfinite(v)) throw NumericalError("non-finite feature at probe point " + out.probe_point);
    return out;
}

std::vector<double> ProbeModel::scores(const FeatureMatrix& x) const {
    if (x.cols != features)
        throw std::invalid_argument("probe expects " + std::to_string(features) + " features, got " +
                                    std::to_string(x.cols));
    const auto z = standardize(x, mean, scale);
    const auto k = static_cast<std::size_t>(classes);
    std::vector<double> out(x.rows * k);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            double v = bias[c];
            for (std::size_t j = 0; j < features; ++j) v += weight[c * features + j] * z[r * features + j];
            out[r * k + c] = v;
        }
    return out;
}

std::vector<int> ProbeModel::predict(const FeatureMatrix& x) const {
    const auto s = scores(x);
    const auto k = static_cast<std::size_t>(classes);
    std::vector<int> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (s[r * k + c] > s[r * k + best]) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

ProbeModel fit_linear_probe(const FeatureMatrix& train, std::span<const int> labels, const ProbeConfig& config) {
    if (labels.size() != train.rows)
        throw std::invalid_argument("fit_linear_probe: " + std::to_string(train.rows) + " rows but " +
                                    std::to_string(labels.size()) + " labels");
    if (config.iters < 0 || !(config.lr > 0) || !(config.l2 >= 0)) throw std::invalid_argument("fit_linear_probe: bad config");
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) throw std::invalid_argument("fit_linear_probe: negative label");
        max_label = std::max(max_label, y);
    }
    std::vector<int> seen(static_cast<std::size_t>(max_label + 1), 0);
    for (int y : labels) seen[static_cast<std::size_t>(y)] = 1;
    if (std::count(seen.begin(), seen.end(), 1) < 2)
        throw std::invalid_argument("fit_linear_probe: need at least two classes");

    ProbeModel m;
    m.classes = max_label + 1;
    m.features = train.cols;
    m.mean.assign(train.cols, 0.0);
    m.scale.assign(train.cols, 1.0);
    const double n = static_cast<double>(train.rows);
    for (std::size_t c = 0; c < train.cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < train.rows; ++r) s += train.at(r, c);
        const double mu = s / n;
        double v = 0.0;
        for (std::size_t r = 0; r < train.rows; ++r) {
            const double d = train.at(r, c) - mu;
            v += d * d;
        }
        const double sd = std::sqrt(v / n);
        m.mean[c] = mu;
        m.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    const auto z = standardize(train, m.mean, m.scale);
    const auto k = static_cast<std::size_t>(m.classes);
    m.weight.assign(k * train.cols, 0.0);
    m.bias.assign(k, 0.0);

    std::vector<double> gw, gb, w2, b2;
    double lr = config.lr;
    double loss = objective(z, train.rows, train.cols, labels, m.classes, m.weight, m.bias, config.l2, &gw, &gb);
    for (int it = 0; it < config.iters; ++it) {
        m.loss_history.push_back(loss);
        for (int attempt = 0; attempt < 30; ++attempt) {
            w2 = m.weight;
            b2 = m.bias;
            for (std::size_t i = 0; i < w2.size(); ++i) w2[i] -= lr * gw[i];
            for (std::size_t i = 0; i < b2.size(); ++i) b2[i] -= lr * gb[i];
            const double next = objective(z, train.rows, train.cols, labels, m.classes, w2, b2, config.l2, nullptr, nullptr);
            if (next <= loss) {
                m.weight.swap(w2);
                m.bias.swap(b2);
                loss = objective(z, train.rows, train.cols, labels, m.classes, m.weight, m.bias, config.l2, &gw, &gb);
                break;
            }
            lr *= 0.5;
        }
    }
    m.loss_history.push_back(loss);
    return m;
}

double top1_accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("top1_accuracy: " + std::to_string(predictions.size()) + " predictions but " +
                                    std::to_string(labels.size()) + " labels");
    if (labels.empty()) throw std::invalid_argument("top1_accuracy: empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> values;
    for (const auto& r : runs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
            return s.method == r.method && s.ie_kind == r.ie_kind && s.probe_point == r.probe_point;
        });
        if (it == out.end()) {
            out.push_back({r.method, r.ie_kind, r.probe_point, 0, 0.0, 0.0});
            values.emplace_back();
            it = out.end() - 1;
        }
        values[static_cast<std::size_t>(it - out.begin())].push_back(r.top1);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        const auto& v = values[g];
        double s = 0.0;
        for (double x : v) s += x;
        const double mu = s / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mu) * (x - mu);
        out[g].runs = v.size();
        out[g].mean = mu;
        out[g].std = std::sqrt(ss / static_cast<double>(v.size()));
    }
    return out;
}

std::string render_svg(const std::vector<RunRecord>& runs) {
    constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 170, kTop = 20, kBottom = 50;
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    std::size_t max_epochs = 1;
    for (const auto& r : runs) max_epochs = std::max(max_epochs, r.val_curve.size());
    const double xspan = std::max<double>(1.0, static_cast<double>(max_epochs - 1));
    auto px = [&](double epoch) { return kLeft + pw * epoch / xspan; };
    auto py = [&](double acc) { return kTop + ph * (1.0 - std::clamp(acc, 0.0, 1.0)); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
      << kW << " " << kH << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "  <g stroke=\"black\" stroke-width=\"1\">\n"
      << "    <line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\"/>\n"
      << "    <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n"
      << "  </g>\n"
      << "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double acc = t / 4.0;
        o << "    <text x=\"" << kLeft - 6 << "\" y=\"" << fmt(py(acc) + 4, "%.1f") << "\" text-anchor=\"end\">"
          << fmt(acc, "%.2f") << "</text>\n";
    }
    o << "    <text x=\"" << kLeft << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">0</text>\n"
      << "    <text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
      << max_epochs - 1 << "</text>\n"
      << "    <text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">epoch</text>\n"
      << "    <text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">accuracy</text>\n"
      << "  </g>\n";

    std::size_t shown = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        std::string pts;
        for (std::size_t e = 0; e < r.val_curve.size(); ++e) {
            if (!std::isfinite(r.val_curve[e])) continue;
            pts += (pts.empty() ? "" : " ") + fmt(px(static_cast<double>(e)), "%.1f") + "," +
                   fmt(py(r.val_curve[e]), "%.1f");
        }
        if (pts.empty()) continue;
        const char* color = palette[shown % (sizeof palette / sizeof *palette)];
        const std::string label = r.method + " seed " + std::to_string(r.seed);
        o << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\">"
          << "<title>" << xml_escape(label) << "</title></polyline>\n";
        const double ly = kTop + 14.0 * static_cast<double>(shown);
        o << "  <text x=\"" << kLeft + pw + 10 << "\" y=\"" << fmt(ly + 4, "%.1f")
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << xml_escape(label)
          << "</text>\n";
        ++shown;
    }
    o << "</svg>\n";
    return o.str();
}

void emit_report(const std::vector<RunRecord>& runs, const std::filesystem::path& path) {
    if (runs.empty()) throw std::invalid_argument("emit_report: no runs");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << kReportHeader << "\n";
        for (const auto& r : runs)
            out << r.method << "," << r.ie_kind << "," << r.seed << "," << r.probe_point << "," << fmt(r.top1) << "\n";
        for (const auto& s : summarize(runs)) {
            out << s.method << "," << s.ie_kind << ",mean," << s.probe_point << "," << fmt(s.mean) << "\n";
            out << s.method << "," << s.ie_kind << ",std," << s.probe_point << "," << fmt(s.std) << "\n";
        }
        if (!out) throw IoError("write failed: " + path.string());
    }
    auto svg_path = path;
    svg_path.replace_extension(".svg");
    std::ofstream svg(svg_path, std::ios::trunc);
    if (!svg) throw IoError("cannot write " + svg_path.string());
    svg << render_svg(runs);
    if (!svg) throw IoError("write failed: " + svg_path.string());
}

std::vector<RunRecord> read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind(kReportHeader, 0) != 0)
        throw FormatError(path.string() + ": unexpected report header");
    std::vector<RunRecord> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 5) throw FormatError(path.string() + ": short row '" + line + "'");
        if (cells[2] == "mean" || cells[2] == "std") continue;
        RunRecord r;
        r.method = cells[0];
        r.ie_kind = cells[1];
        try {
            r.seed = std::stoull(cells[2]);
            r.top1 = cells[4] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[4]);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": bad number in '" + line + "'");
        }
        r.probe_point = cells[3];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ierot::eval
