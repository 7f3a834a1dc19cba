#include <cstring>
#include <fstream>
#include <type_traits>

#include "ierot/errors.hpp"
#include "ierot/trainer.hpp"

namespace ierot::trainer {

namespace {

constexpr char kMagic[8] = {'I', 'E', 'R', 'O', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void tensor(const std::string& name, const nn::Tensor& t) {
        str(name);
        u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) u64(d);
        for (float v : t.data()) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            u32(bits);
        }
    }
    const std::string& buffer() const { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    Reader(std::string data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

    const char* take(std::size_t n) {
        if (data_.size() - pos_ < n) throw FormatError(origin_ + ": truncated checkpoint");
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint32_t u32() {
        const auto* p = reinterpret_cast<const unsigned char*>(take(4));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* p = reinterpret_cast<const unsigned char*>(take(8));
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        const char* p = take(n);
        return {p, n};
    }
    std::pair<std::string, nn::Tensor> tensor() {
        std::string name = str();
        const std::uint32_t rank = u32();
        if (rank > 8) throw FormatError(origin_ + ": bad tensor rank for " + name);
        nn::Shape shape(rank);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = u64();
            if (d > (std::size_t{1} << 32)) throw FormatError(origin_ + ": bad tensor extent for " + name);
            numel *= d;
        }
        std::vector<float> values(numel);
        for (auto& v : values) {
            const std::uint32_t bits = u32();
            std::memcpy(&v, &bits, sizeof v);
        }
        return {std::move(name), nn::Tensor(std::move(shape), std::move(values))};
    }
    bool done() const { return pos_ == data_.size(); }
    const std::string& origin() const { return origin_; }

private:
    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

// Parameters, then BN running statistics, in a fixed order.
template <class State>
auto named_buffers(State& state) {
    using T = std::conditional_t<std::is_const_v<State>, const nn::Tensor, nn::Tensor>;
    std::vector<std::pair<std::string, T*>> out;
    for (auto p : state.model.parameters()) {
        if constexpr (std::is_const_v<State>)
            out.emplace_back(p.name(), &p.value());
        else
            out.emplace_back(p.name(), &p.mutable_value());
    }
    auto& bn = state.model.bn_states();
    for (std::size_t i = 0; i < bn.size(); ++i) {
        const std::string tag = "bn" + std::to_string(i + 1);
        out.emplace_back(tag + ".running_mean", &bn[i].running_mean);
        out.emplace_back(tag + ".running_var", &bn[i].running_var);
    }
    return out;
}

void assign(nn::Tensor& dst, const std::string& name, nn::Tensor src, const std::string& origin) {
    if (src.shape() != dst.shape())
        throw FormatError(origin + ": " + name + " has shape " + nn::shape_str(src.shape()) + ", expected " +
                          nn::shape_str(dst.shape()));
    dst = std::move(src);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kVersion);

    w.u32(static_cast<std::uint32_t>(state.run_info.size()));
    for (const auto& [k, v] : state.run_info) {
        w.str(k);
        w.str(v);
    }
    const auto buffers = named_buffers(state);
    w.u32(static_cast<std::uint32_t>(buffers.size()));
    for (const auto& [name, t] : buffers) w.tensor(name, *t);
    w.u32(static_cast<std::uint32_t>(state.momentum.size()));
    for (const auto& [name, t] : state.momentum) w.tensor(name, t);

    w.str(state.rng.serialize());
    w.u64(static_cast<std::uint64_t>(state.epoch));
    w.u64(state.step);
    for (double v : state.stats.mean) w.f64(v);
    for (double v : state.stats.std) w.f64(v);

    w.u32(static_cast<std::uint32_t>(state.history.size()));
    for (const auto& m : state.history) {
        w.u64(static_cast<std::uint64_t>(m.epoch));
        for (double v : {m.lr, m.train_loss_r, m.train_loss_i, m.train_loss_total, m.val_acc_r, m.val_acc_i,
                         m.alpha_mean, m.alpha_min, m.alpha_max, m.wall_seconds})
            w.f64(v);
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void load_checkpoint(const std::filesystem::path& path, TrainState& state) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path.string());

    if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0)
        throw FormatError(path.string() + ": not a checkpoint");
    if (const auto v = r.u32(); v != kVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(v));

    std::map<std::string, std::string> info;
    for (std::uint32_t n = r.u32(); n > 0; --n) {
        std::string k = r.str();
        info[k] = r.str();
    }

    auto buffers = named_buffers(state);
    const std::uint32_t count = r.u32();
    if (count != buffers.size())
        throw FormatError(path.string() + ": expected " + std::to_string(buffers.size()) + " tensors, found " +
                          std::to_string(count));
    for (auto& [name, dst] : buffers) {
        auto [stored, t] = r.tensor();
        if (stored != name) throw FormatError(path.string() + ": expected tensor " + name + ", found " + stored);
        assign(*dst, name, std::move(t), r.origin());
    }

    std::map<std::string, nn::Tensor> momentum;
    for (std::uint32_t n = r.u32(); n > 0; --n) {
        auto [name, t] = r.tensor();
        momentum[name] = std::move(t);
    }

    Rng rng;
    try {
        rng.deserialize(r.str());
    } catch (const std::exception& e) {
        throw FormatError(path.string() + ": bad RNG state (" + e.what() + ")");
    }
    const auto epoch = static_cast<int>(r.u64());
    const std::uint64_t step = r.u64();
    dataio::ChannelStats stats;
    for (double& v : stats.mean) v = r.f64();
    for (double& v : stats.std) v = r.f64();

    std::vector<EpochMetrics> history(r.u32());
    for (auto& m : history) {
        m.epoch = static_cast<int>(r.u64());
        for (double* v : {&m.lr, &m.train_loss_r, &m.train_loss_i, &m.train_loss_total, &m.val_acc_r, &m.val_acc_i,
                          &m.alpha_mean, &m.alpha_min, &m.alpha_max, &m.wall_seconds})
            *v = r.f64();
    }
    if (!r.done()) throw FormatError(path.string() + ": trailing bytes");

    state.run_info = std::move(info);
    state.momentum = std::move(momentum);
    state.rng = rng;
    state.epoch = epoch;
    state.step = step;
    state.stats = stats;
    state.history = std::move(history);
}

TrainState read_checkpoint(const std::filesystem::path& path) {
    TrainState state(Rng(0));
    load_checkpoint(path, state);
    return state;
}

}  // namespace ierot::trainer
