// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sscse/synthetic.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "sscse/errors.hpp"

namespace sscse {

namespace {

constexpr std::array kDeterminers = {"the", "a", "every", "one", "that"};
constexpr std::array kAdjectives = {"quick", "lazy", "small", "large", "red", "green", "old", "young",
                                    "happy", "quiet", "bright", "dark"};
constexpr std::array kNouns = {"fox",    "dog",   "cat",  "bird",  "child", "farmer", "teacher", "river",
                               "garden", "house", "tree", "horse", "boat",  "city",   "road",    "student"};
constexpr std::array kVerbs = {"chases", "sees", "follows", "likes", "watches", "finds",
                               "helps",  "paints", "visits", "leaves", "carries", "hears"};
constexpr std::array kAdverbs = {"slowly", "quickly", "often", "rarely", "gladly", "quietly"};
constexpr std::array kPrepositions = {"near", "behind", "under", "beside", "across"};

template <std::size_t N>
std::string pick(const std::array<const char*, N>& words, RngGenerator& gen) {
    return words[gen.next_below(N)];
}

std::map<std::string, std::size_t> bag(std::string_view text) {
    std::map<std::string, std::size_t> out;
    for (auto& tok : split_whitespace(to_lower_ascii(text))) ++out[tok];
    return out;
}

}  // namespace

double jaccard_gold(std::string_view a, std::string_view b) {
    const auto ba = bag(a);
    const auto bb = bag(b);
    std::size_t inter = 0, uni = 0;
    for (const auto& [tok, n] : ba) {
        const auto it = bb.find(tok);
        const std::size_t m = it == bb.end() ? 0 : it->second;
        inter += std::min(n, m);
        uni += std::max(n, m);
    }
    for (const auto& [tok, m] : bb) {
        if (!ba.count(tok)) uni += m;
    }
    if (uni == 0) return 5.0;
    return 5.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> make_synthetic_corpus(const RngStream& stream, std::size_t n_sentences) {
    RngGenerator gen(stream);
    std::vector<std::string> out;
    out.reserve(n_sentences);
    for (std::size_t i = 0; i < n_sentences; ++i) {
        auto noun_phrase = [&] {
            std::string np = pick(kDeterminers, gen);
            if (gen.next_below(2) == 0) np += " " + pick(kAdjectives, gen);
            return np + " " + pick(kNouns, gen);
        };
        std::string s = noun_phrase() + " ";
        if (gen.next_below(3) == 0) s += pick(kAdverbs, gen) + " ";
        s += pick(kVerbs, gen) + " " + noun_phrase();
        if (gen.next_below(2) == 0) s += " " + pick(kPrepositions, gen) + " " + noun_phrase();
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<StsExample> make_synthetic_sts(const RngStream& stream, std::size_t n_pairs, const Vocabulary& vocab) {
    if (vocab.size() <= Vocabulary::kReserved) throw DataError("synthetic STS needs a non-empty vocabulary");
    const std::size_t usable = vocab.size() - Vocabulary::kReserved;
    RngGenerator gen(stream);
    auto word = [&] { return vocab.token(static_cast<std::int32_t>(Vocabulary::kReserved + gen.next_below(usable))); };
    auto join = [](const std::vector<std::string>& words) {
        std::string s;
        for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
        return s;
    };
    std::vector<StsExample> out;
    out.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const std::size_t len = 4 + gen.next_below(5);
        std::vector<std::string> a;
        for (std::size_t k = 0; k < len; ++k) a.push_back(word());
        std::vector<std::string> b = a;
        std::vector<std::size_t> positions(len);
        for (std::size_t k = 0; k < len; ++k) positions[k] = k;
        shuffle_in_place(positions, gen);
        const std::size_t replaced = gen.next_below(len + 1);
        for (std::size_t k = 0; k < replaced; ++k) b[positions[k]] = word();
        StsExample ex{join(a), join(b), 0.0, i + 1};
        ex.gold_score = jaccard_gold(ex.sentence_a, ex.sentence_b);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace sscse
