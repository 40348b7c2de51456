// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <set>
#include <sstream>

#include "sscse/config.hpp"
#include "sscse/errors.hpp"

namespace sscse {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) throw LoadError(std::string("checkpoint truncated while reading ") + what);
        const auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint64_t le(std::size_t width, const char* what) {
        const auto raw = take(width, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
        return v;
    }

    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
    std::uint64_t u64(const char* what) { return le(8, what); }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

const std::set<std::string> kEncoderKeys = {
    "vocab_size",   "d_model",      "n_layers",     "n_heads",       "d_ff",          "max_seq_len", "pooling",
    "dropout_kind", "dropout_low",  "dropout_high", "rate_scope",    "sentence_wise", "scaling",
};

}  // namespace

std::string encoder_config_to_text(const EncoderConfig& c) {
    const auto& dist = c.dropout.distribution;
    std::ostringstream os;
    os << "vocab_size = " << c.vocab_size << "\n"
       << "d_model = " << c.d_model << "\n"
       << "n_layers = " << c.n_layers << "\n"
       << "n_heads = " << c.n_heads << "\n"
       << "d_ff = " << c.d_ff << "\n"
       << "max_seq_len = " << c.max_seq_len << "\n"
       << "pooling = " << to_string(c.pooling) << "\n"
       << "dropout_kind = " << (dist.kind() == DropoutDistribution::Kind::degenerate ? "degenerate" : "uniform") << "\n"
       << "dropout_low = " << format_double(dist.low()) << "\n"
       << "dropout_high = " << format_double(dist.high()) << "\n"
       << "rate_scope = " << to_string(c.dropout.rate_scope) << "\n"
       << "sentence_wise = " << (c.dropout.sentence_wise ? "true" : "false") << "\n"
       << "scaling = " << to_string(c.dropout.scaling) << "\n";
    return os.str();
}

EncoderConfig encoder_config_from_text(std::string_view text) {
    EncoderConfig c;
    std::set<std::string> seen;
    std::string kind = "uniform";
    double low = 0.0, high = 0.2;
    for (const auto& e : parse_key_values(text, "checkpoint config")) {
        if (!kEncoderKeys.count(e.key)) throw LoadError("unknown encoder config key '" + e.key + "'");
        seen.insert(e.key);
        if (e.key == "vocab_size") c.vocab_size = parse_u64(e.key, e.value);
        else if (e.key == "d_model") c.d_model = parse_u64(e.key, e.value);
        else if (e.key == "n_layers") c.n_layers = parse_u64(e.key, e.value);
        else if (e.key == "n_heads") c.n_heads = parse_u64(e.key, e.value);
        else if (e.key == "d_ff") c.d_ff = parse_u64(e.key, e.value);
        else if (e.key == "max_seq_len") c.max_seq_len = parse_u64(e.key, e.value);
        else if (e.key == "pooling") c.pooling = parse_pooling(e.value);
        else if (e.key == "dropout_kind") kind = e.value;
        else if (e.key == "dropout_low") low = parse_double(e.key, e.value);
        else if (e.key == "dropout_high") high = parse_double(e.key, e.value);
        else if (e.key == "rate_scope") c.dropout.rate_scope = parse_rate_scope(e.value);
        else if (e.key == "sentence_wise") c.dropout.sentence_wise = parse_bool(e.key, e.value);
        else if (e.key == "scaling") c.dropout.scaling = parse_scaling(e.value);
    }
    if (seen.size() != kEncoderKeys.size()) throw LoadError("checkpoint config block is incomplete");
    if (kind == "degenerate") {
        c.dropout.distribution = DropoutDistribution::degenerate(low);
    } else if (kind == "uniform") {
        c.dropout.distribution = DropoutDistribution::uniform(low, high);
    } else {
        throw LoadError("unknown dropout distribution kind '" + kind + "'");
    }
    c.validate();
    return c;
}

std::string serialize_checkpoint(const EncoderConfig& config, const EncoderWeights& weights) {
    std::string out(kCheckpointMagic);
    put_u32(out, kCheckpointVersion);
    const std::string cfg = encoder_config_to_text(config);
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    const auto params = weights.named_parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) put_u64(out, d);
        for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    Reader r(bytes);
    if (r.take(kCheckpointMagic.size(), "magic") != kCheckpointMagic) {
        throw LoadError("not a checkpoint: bad magic string");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw LoadError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t cfg_len = r.u32("config length");
    Checkpoint ck;
    ck.config = encoder_config_from_text(r.take(cfg_len, "config"));
    const std::uint32_t count = r.u32("tensor count");
    std::vector<NamedTensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32("name length");
        std::string name(r.take(name_len, "name"));
        const std::uint32_t rank = r.u32("rank");
        if (rank == 0 || rank > 8) throw LoadError("tensor '" + name + "' has invalid rank " + std::to_string(rank));
        Shape shape;
        std::uint64_t numel = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            const std::uint64_t d = r.u64("dims");
            if (d == 0 || d > (std::uint64_t{1} << 32)) throw LoadError("tensor '" + name + "' has invalid dims");
            shape.push_back(d);
            numel *= d;
            if (numel > (std::uint64_t{1} << 34)) throw LoadError("tensor '" + name + "' is implausibly large");
        }
        std::vector<double> values(numel);
        for (auto& v : values) v = std::bit_cast<double>(r.u64("values"));
        tensors.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values), true)});
    }
    if (!r.done()) throw LoadError("trailing bytes after the last tensor");
    ck.weights = EncoderWeights::from_named(ck.config, tensors);
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderConfig& config, const EncoderWeights& weights) {
    const std::string bytes = serialize_checkpoint(config, weights);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw LoadError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw LoadError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open checkpoint " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return deserialize_checkpoint(os.str());
}

}  // namespace sscse
