// Copyright 2026 The sscse Authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale stand-ins for a training corpus and an STS test set.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sscse/data_io.hpp"
#include "sscse/rng.hpp"

namespace sscse {

// 5 * |A ∩ B| / |A ∪ B| over lowercased whitespace-token multisets
// (intersection and union take min/max counts). Two empty texts score 5.
double jaccard_gold(std::string_view a, std::string_view b);

// Template sentences ("the quick fox chases a lazy dog", ...) drawn from a
// fixed English lexicon.
std::vector<std::string> make_synthetic_corpus(const RngStream& stream, std::size_t n_sentences);

// Pairs built from vocabulary tokens: A has 4-8 tokens, B copies A and then
// replaces a uniformly chosen number of its positions with fresh tokens.
// Gold is jaccard_gold(A, B).
std::vector<StsExample> make_synthetic_sts(const RngStream& stream, std::size_t n_pairs, const Vocabulary& vocab);

}  // namespace sscse
