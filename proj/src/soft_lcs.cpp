#include "keystep/soft_lcs.hpp"

#include "keystep/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace keystep {

namespace {

// Row-major (rows x cols) table of doubles.
class Table {
public:
    Table(std::size_t rows, std::size_t cols) : cols_(cols), data_(rows * cols, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t cols_;
    std::vector<double> data_;
};

Table fill_soft_table(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher) {
    Table dp(a.size() + 1, b.size() + 1);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const double diag = dp(i - 1, j - 1) + matcher(a[i - 1], b[j - 1]);
            dp(i, j) = std::max({diag, dp(i - 1, j), dp(i, j - 1)});
        }
    }
    return dp;
}

} // namespace

TextSimilarity token_cosine_similarity() {
    return TextSimilarity("token-cosine/1", [](std::string_view x, std::string_view y) -> double {
        if (x == y) return 1.0;
        std::map<std::string, long long> cx, cy;
        for (auto& t : tokenize_lower_whitespace(x)) ++cx[t];
        for (auto& t : tokenize_lower_whitespace(y)) ++cy[t];
        if (cx.empty() && cy.empty()) return 1.0;
        if (cx.empty() || cy.empty()) return 0.0;
        long long dot = 0, nx = 0, ny = 0;
        for (const auto& [tok, n] : cx) {
            nx += n * n;
            auto it = cy.find(tok);
            if (it != cy.end()) dot += n * it->second;
        }
        for (const auto& [tok, n] : cy) ny += n * n;
        // sqrt of the integer product keeps the result symmetric bit-for-bit.
        const double v = static_cast<double>(dot) / std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
        return std::clamp(v, 0.0, 1.0);
    });
}

std::vector<std::string> text_similarity_conformance(const TextSimilarity& ts, std::span<const std::string> samples) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& a = samples[i];
        if (!a.empty() && ts(a, a) != 1.0) out.push_back("self-similarity != 1 for \"" + a + "\"");
        for (std::size_t j = 0; j < samples.size(); ++j) {
            const auto& b = samples[j];
            const double ab = ts(a, b);
            if (!(ab >= 0.0 && ab <= 1.0)) {
                std::ostringstream ss;
                ss << "out of range " << ab << " for (\"" << a << "\", \"" << b << "\")";
                out.push_back(ss.str());
            }
            if (ab != ts(b, a)) out.push_back("asymmetric for (\"" + a + "\", \"" + b + "\")");
        }
    }
    return out;
}

ActionMatcher::ActionMatcher(TextSimilarity ts, double nothing_weight)
    : ts_(std::move(ts)), nothing_weight_(nothing_weight) {
    if (!(nothing_weight >= 0.0 && nothing_weight <= 1.0)) {
        throw std::invalid_argument("NOTHING match weight must lie in [0, 1]");
    }
}

double ActionMatcher::operator()(const Action& a, const Action& b) const {
    if (a.kind != b.kind) return 0.0;
    switch (a.kind) {
    case ActionKind::Input:
    case ActionKind::Answer: return ts_(a.text.value_or(""), b.text.value_or(""));
    case ActionKind::Nothing: return nothing_weight_;
    default:
        return a.element_id == b.element_id && a.direction == b.direction ? 1.0 : 0.0;
    }
}

double soft_match(const Action& a, const Action& b, const ActionMatcher& matcher) { return matcher(a, b); }

double soft_lcs(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher) {
    if (a.empty() || b.empty()) return 0.0;
    // Two rolling rows are enough for the value.
    std::vector<double> prev(b.size() + 1, 0.0), cur(b.size() + 1, 0.0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = 0.0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const double diag = prev[j - 1] + matcher(a[i - 1], b[j - 1]);
            cur[j] = std::max({diag, prev[j], cur[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

Alignment soft_lcs_align(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher) {
    Alignment out;
    if (a.empty() || b.empty()) return out;
    const Table dp = fill_soft_table(a, b, matcher);
    std::size_t i = a.size(), j = b.size();
    while (i > 0 && j > 0) {
        const double here = dp(i, j);
        const double w = matcher(a[i - 1], b[j - 1]);
        if (w > 0.0 && std::abs(here - (dp(i - 1, j - 1) + w)) <= kTieTolerance) {
            out.pairs.push_back({i - 1, j - 1, w});
            --i;
            --j;
        } else if (std::abs(here - dp(i - 1, j)) <= kTieTolerance) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(out.pairs.begin(), out.pairs.end());
    for (const auto& p : out.pairs) out.score += p.contribution;
    return out;
}

std::size_t classic_lcs_len(std::span<const Action> a, std::span<const Action> b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double similarity(std::span<const Action> a, std::span<const Action> b, const ActionMatcher& matcher) {
    if (a.empty() || b.empty()) throw std::invalid_argument("similarity requires non-empty sequences");
    const double denom = static_cast<double>(std::min(a.size(), b.size()));
    return std::clamp(soft_lcs(a, b, matcher) / denom, 0.0, 1.0);
}

double similarity(const Trajectory& ti, const Trajectory& tj, const ActionMatcher& matcher) {
    const auto a = ti.actions();
    const auto b = tj.actions();
    return similarity(a, b, matcher);
}

std::vector<Action> fold_lcs(std::span<const std::vector<Action>> sequences, const ActionMatcher& matcher) {
    if (sequences.empty()) throw std::invalid_argument("fold_lcs requires at least one sequence");
    std::vector<Action> acc = sequences.front();
    for (std::size_t k = 1; k < sequences.size(); ++k) {
        const Alignment al = soft_lcs_align(acc, sequences[k], matcher);
        std::vector<Action> next;
        next.reserve(al.pairs.size());
        for (const auto& p : al.pairs) next.push_back(acc[p.i]);
        acc = std::move(next);
    }
    return acc;
}

} // namespace keystep
