// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Corpus and dataset ingestion: whitespace tokenizer with a frequency-built
// vocabulary, STS TSV files, and shuffled padded batches.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sscse/batch.hpp"
#include "sscse/rng.hpp"

namespace sscse {

// Splits on ASCII and Unicode (UTF-8 encoded) whitespace.
std::vector<std::string> split_whitespace(std::string_view text);
// ASCII lowercasing; bytes >= 0x80 pass through untouched.
std::string to_lower_ascii(std::string_view text);

class Vocabulary {
public:
    static constexpr std::size_t kReserved = 2;

    // Tokens with frequency >= min_count, ordered by (frequency desc, token
    // asc), truncated to max_size - 2 entries, after PAD=0 and UNK=1.
    static Vocabulary build(const std::vector<std::string>& lines, std::size_t min_count = 1,
                            std::size_t max_size = 50000);

    // One token per line; line n (0-based) holds id n + 2.
    static Vocabulary deserialize(std::string_view text);
    static Vocabulary load(const std::filesystem::path& path);
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

    std::size_t size() const noexcept { return tokens_.size(); }
    // UNK for unknown tokens. The token must already be lowercased.
    std::int32_t id(std::string_view token) const;
    const std::string& token(std::int32_t id) const;
    bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

private:
    Vocabulary();
    void add(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> index_;
};

struct CorpusStats {
    std::size_t n_sentences = 0;
    std::size_t n_tokens = 0;
    std::size_t vocab_size = 0;
    std::size_t max_length = 0;
};

CorpusStats compute_corpus_stats(const std::vector<std::string>& lines, const Vocabulary& vocab);

// Lowercase, split, map unknowns to UNK, truncate to max_seq_len. Empty text
// becomes a single UNK so sequences are never empty.
std::vector<std::int32_t> tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_seq_len);

// Non-blank lines of a UTF-8 text file, without line terminators.
std::vector<std::string> read_corpus(const std::filesystem::path& path);

struct StsExample {
    std::string sentence_a;
    std::string sentence_b;
    double gold_score = 0.0;
    std::size_t line = 0;
};

// sentence_a TAB sentence_b TAB score per line; blank lines are skipped.
std::vector<StsExample> parse_sts_tsv(std::string_view text, const std::string& source = "<memory>");
std::vector<StsExample> parse_sts_tsv(const std::filesystem::path& path);
void write_sts_tsv(const std::filesystem::path& path, const std::vector<StsExample>& examples);

// Permutation of [0, n) used by make_batches for the given stream.
std::vector<std::size_t> epoch_order(std::size_t n, const RngStream& shuffle_stream);

// Shuffles sentence order with shuffle_stream, then cuts consecutive batches
// (the last may be partial). Each batch is padded to its own longest row.
std::vector<Batch> make_batches(const std::vector<std::string>& sentences, const Vocabulary& vocab,
                                std::size_t batch_size, std::size_t max_seq_len, const RngStream& shuffle_stream);

// Same, over pre-tokenised sequences.
std::vector<Batch> make_batches(const std::vector<std::vector<std::int32_t>>& sequences, std::size_t batch_size,
                                const RngStream& shuffle_stream);

}  // namespace sscse
