// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "sscse/errors.hpp"

namespace sscse {

Batch Batch::from_sequences(const std::vector<std::vector<std::int32_t>>& sequences, std::size_t pad_to) {
    if (sequences.empty()) throw DataError("cannot build an empty batch");
    Batch b;
    b.size = sequences.size();
    b.width = pad_to;
    for (const auto& s : sequences) {
        if (s.empty()) throw DataError("cannot batch an empty sequence");
        b.width = std::max(b.width, s.size());
    }
    b.token_ids.assign(b.size * b.width, kPadId);
    b.attention_mask.assign(b.size * b.width, 0);
    for (std::size_t i = 0; i < b.size; ++i) {
        const auto& s = sequences[i];
        std::copy(s.begin(), s.end(), b.token_ids.begin() + static_cast<std::ptrdiff_t>(i * b.width));
        std::fill_n(b.attention_mask.begin() + static_cast<std::ptrdiff_t>(i * b.width), s.size(), 1);
        b.lengths.push_back(s.size());
    }
    return b;
}

void Batch::validate() const {
    if (size == 0 || width == 0) throw DataError("batch has no rows or no columns");
    if (token_ids.size() != size * width || attention_mask.size() != size * width || lengths.size() != size) {
        throw DataError("batch buffers do not match its " + std::to_string(size) + "x" + std::to_string(width) +
                        " shape");
    }
    for (std::size_t i = 0; i < size; ++i) {
        std::size_t ones = 0;
        for (std::size_t t = 0; t < width; ++t) {
            const auto m = attention_mask[i * width + t];
            if (m > 1) throw DataError("attention mask must be 0/1");
            if (m == 1 && t != ones) throw DataError("attention mask of row " + std::to_string(i) + " is not a prefix");
            ones += m;
        }
        if (ones != lengths[i]) throw DataError("length of row " + std::to_string(i) + " disagrees with its mask");
        if (ones == 0) throw DataError("row " + std::to_string(i) + " has zero length");
    }
}

namespace {

// Length in bytes of a UTF-8 whitespace code point starting at s[i], or 0.
std::size_t whitespace_width(std::string_view s, std::size_t i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
    auto at = [&](std::size_t k) { return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u; };
    if (c == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
    if (c == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
    if (c == 0xE2 && at(1) == 0x80 && ((at(2) >= 0x80 && at(2) <= 0x8A) || at(2) == 0xA8 || at(2) == 0xA9 ||
                                       at(2) == 0xAF)) {
        return 3;
    }
    if (c == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;
    if (c == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
    return 0;
}

std::string trim_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < text.size();) {
        if (const std::size_t w = whitespace_width(text, i)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
            i += w;
        } else {
            current.push_back(text[i++]);
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<unk>");
}

void Vocabulary::add(std::string token) {
    const auto id = static_cast<std::int32_t>(tokens_.size());
    if (!index_.emplace(token, id).second) throw DataError("duplicate vocabulary token '" + token + "'");
    tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& lines, std::size_t min_count, std::size_t max_size) {
    if (min_count < 1) throw ContractError("min_count must be at least 1");
    if (max_size < kReserved) throw ContractError("max_size must leave room for PAD and UNK");
    std::map<std::string, std::size_t> counts;
    std::size_t n_tokens = 0;
    for (const auto& line : lines) {
        for (auto& tok : split_whitespace(to_lower_ascii(line))) {
            ++counts[tok];
            ++n_tokens;
        }
    }
    if (n_tokens == 0) throw DataError("cannot build a vocabulary from an empty corpus");

    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (const auto& [tok, n] : counts) {
        if (n >= min_count) ranked.emplace_back(tok, n);
    }
    // counts is already sorted by token, so a stable sort on frequency gives
    // the (frequency desc, token asc) order.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size - kReserved) ranked.resize(max_size - kReserved);

    Vocabulary v;
    for (auto& [tok, n] : ranked) {
        if (tok == "<pad>" || tok == "<unk>") continue;
        v.add(std::move(tok));
    }
    return v;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
    Vocabulary v;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim_cr(std::move(line));
        if (line.empty()) throw DataError("vocabulary line " + std::to_string(line_no) + " is empty");
        v.add(std::move(line));
    }
    return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

std::string Vocabulary::serialize() const {
    std::string out;
    for (std::size_t i = kReserved; i < tokens_.size(); ++i) {
        out += tokens_[i];
        out += '\n';
    }
    return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << serialize();
}

std::int32_t Vocabulary::id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw DataError("token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

CorpusStats compute_corpus_stats(const std::vector<std::string>& lines, const Vocabulary& vocab) {
    CorpusStats stats;
    stats.vocab_size = vocab.size();
    for (const auto& line : lines) {
        const std::size_t n = split_whitespace(line).size();
        ++stats.n_sentences;
        stats.n_tokens += n;
        stats.max_length = std::max(stats.max_length, n);
    }
    return stats;
}

std::vector<std::int32_t> tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_seq_len) {
    std::vector<std::int32_t> ids;
    for (const auto& tok : split_whitespace(to_lower_ascii(text))) {
        if (ids.size() == max_seq_len) break;
        ids.push_back(vocab.id(tok));
    }
    if (ids.empty()) ids.push_back(kUnkId);
    return ids;
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        line = trim_cr(std::move(line));
        if (!split_whitespace(line).empty()) lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<StsExample> parse_sts_tsv(std::string_view text, const std::string& source) {
    std::vector<StsExample> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim_cr(std::move(line));
        if (split_whitespace(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != 3) {
            throw DataError(where + ": expected 3 tab-separated fields, found " + std::to_string(fields.size()));
        }
        double score = 0.0;
        const auto& s = fields[2];
        const auto first = s.find_first_not_of(" ");
        const auto last = s.find_last_not_of(" ");
        const char* b = first == std::string::npos ? s.data() : s.data() + first;
        const char* e = last == std::string::npos ? s.data() : s.data() + last + 1;
        const auto [ptr, ec] = std::from_chars(b, e, score);
        if (ec != std::errc{} || ptr != e || b == e || !std::isfinite(score)) {
            throw DataError(where + ": score '" + s + "' is not a finite number");
        }
        out.push_back(StsExample{fields[0], fields[1], score, line_no});
    }
    return out;
}

std::vector<StsExample> parse_sts_tsv(const std::filesystem::path& path) {
    return parse_sts_tsv(read_file(path), path.string());
}

void write_sts_tsv(const std::filesystem::path& path, const std::vector<StsExample>& examples) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.precision(17);
    for (const auto& ex : examples) out << ex.sentence_a << '\t' << ex.sentence_b << '\t' << ex.gold_score << '\n';
}

std::vector<std::size_t> epoch_order(std::size_t n, const RngStream& shuffle_stream) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngGenerator gen(shuffle_stream);
    shuffle_in_place(order, gen);
    return order;
}

std::vector<Batch> make_batches(const std::vector<std::vector<std::int32_t>>& sequences, std::size_t batch_size,
                                const RngStream& shuffle_stream) {
    if (batch_size < 1) throw ContractError("batch_size must be at least 1");
    const auto order = epoch_order(sequences.size(), shuffle_stream);
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::vector<std::vector<std::int32_t>> rows;
        for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
            rows.push_back(sequences[order[i]]);
        }
        batches.push_back(Batch::from_sequences(rows));
    }
    return batches;
}

std::vector<Batch> make_batches(const std::vector<std::string>& sentences, const Vocabulary& vocab,
                                std::size_t batch_size, std::size_t max_seq_len, const RngStream& shuffle_stream) {
    std::vector<std::vector<std::int32_t>> sequences;
    sequences.reserve(sentences.size());
    for (const auto& s : sentences) sequences.push_back(tokenize(s, vocab, max_seq_len));
    return make_batches(sequences, batch_size, shuffle_stream);
}

}  // namespace sscse
