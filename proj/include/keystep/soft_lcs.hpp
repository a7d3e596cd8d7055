#pragma once
// Soft and classic longest-common-subsequence over action sequences.
//
// The soft variant replaces exact equality in the LCS recursion with a
// graded match weight in [0, 1]:
//
//   S(i, j) = max{ S(i-1, j-1) + match(a_i, b_j), S(i-1, j), S(i, j-1) }
//
// where match() scores free-text actions by text similarity, gives NOTHING
// pairs a reduced weight, and is 0/1 equality for everything else.

#include "keystep/trajectory.hpp"

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace keystep {

// Pluggable text similarity. Implementations must be symmetric, return
// values in [0, 1] and score any non-empty string as 1 against itself.
class TextSimilarity {
public:
    using Fn = std::function<double(std::string_view, std::string_view)>;

    TextSimilarity(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    double operator()(std::string_view a, std::string_view b) const { return fn_(a, b); }
    const std::string& id() const { return id_; }

private:
    std::string id_;
    Fn fn_;
};

// Cosine similarity of lowercase whitespace-token count vectors.
TextSimilarity token_cosine_similarity();

// Checks range, symmetry and self-similarity over all pairs of `samples`.
// Returns a human-readable line per failed check.
std::vector<std::string> text_similarity_conformance(const TextSimilarity& ts, std::span<const std::string> samples);

inline constexpr double kDefaultNothingWeight = 0.4;

// Soft match function over actions with a configurable NOTHING weight.
class ActionMatcher {
public:
    explicit ActionMatcher(TextSimilarity ts = token_cosine_similarity(), double nothing_weight = kDefaultNothingWeight);

    double operator()(const Action& a, const Action& b) const;

    const TextSimilarity& text_similarity() const { return ts_; }
    double nothing_weight() const { return nothing_weight_; }

private:
    TextSimilarity ts_;
    double nothing_weight_;
};

double soft_match(const Action& a, const Action& b, const ActionMatcher& matcher);

struct AlignedPair {
    std::size_t i = 0; // index into A
    std::size_t j = 0; // index into B
    double contribution = 0.0;

    bool operator==(const AlignedPair&) const = default;
};

struct Alignment {
    double score = 0.0;
    std::vector<AlignedPair> pairs;
};

// DP values closer than this are treated as ties during backtrace.
inline constexpr double kTieTolerance = 1e-12;

double soft_lcs(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher);

// Backtrace of soft_lcs. On ties the backtrace prefers a match, then
// skipping in A, then skipping in B. Only positive-weight matches appear in
// `pairs`, and `score` is their sum accumulated front to back.
Alignment soft_lcs_align(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher);

std::size_t classic_lcs_len(std::span<const Action> a, std::span<const Action> b);

// SoftLCS normalized by the shorter trajectory. Both must be non-empty.
double similarity(const Trajectory& ti, const Trajectory& tj, const ActionMatcher& matcher);
double similarity(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher);

// Left fold of pairwise soft-LCS extraction. Matched elements are copied
// from the left operand.
std::vector<Action> fold_lcs(std::span<const std::vector<Action>> sequences, const ActionMatcher& matcher);

} // namespace keystep
