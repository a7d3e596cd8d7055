#pragma once
// Test fixtures and reference implementations that do not share code with
// the library.

#include "keystep/random.hpp"
#include "keystep/trajectory.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace testkit {

using keystep::Action;
using keystep::ActionKind;
using keystep::Direction;
using keystep::Trajectory;

inline Trajectory make_traj(const std::string& id, const std::string& goal, const std::vector<Action>& actions,
                            bool success = true, const std::string& instruction = "do the task") {
    Trajectory t;
    t.traj_id = id;
    t.goal_id = goal;
    t.instruction = instruction;
    t.success = success;
    for (const auto& a : actions) t.steps.push_back({a, "", std::nullopt});
    return t;
}

inline std::vector<Action> clicks(std::initializer_list<std::int64_t> ids) {
    std::vector<Action> out;
    for (auto id : ids) out.push_back(Action::click(id));
    return out;
}

// Cosine of lowercase whitespace-token count vectors, computed from scratch.
inline double cosine_oracle(const std::string& a, const std::string& b) {
    auto counts = [](const std::string& s) {
        std::map<std::string, double> c;
        std::istringstream in(s);
        std::string tok;
        while (in >> tok) {
            for (auto& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            c[tok] += 1.0;
        }
        return c;
    };
    const auto ca = counts(a), cb = counts(b);
    if (ca.empty() && cb.empty()) return 1.0;
    if (ca.empty() || cb.empty()) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (auto& [k, v] : ca) {
        na += v * v;
        auto it = cb.find(k);
        if (it != cb.end()) dot += v * it->second;
    }
    for (auto& [k, v] : cb) nb += v * v;
    return std::min(1.0, dot / std::sqrt(na * nb));
}

// Match weight written directly from the case analysis.
inline double match_oracle(const Action& a, const Action& b, double nothing_weight = 0.4) {
    if (a.kind != b.kind) return 0.0;
    if (a.kind == ActionKind::Input || a.kind == ActionKind::Answer) return cosine_oracle(*a.text, *b.text);
    if (a.kind == ActionKind::Nothing) return nothing_weight;
    return a.element_id == b.element_id && a.direction == b.direction ? 1.0 : 0.0;
}

// Maximum summed weight over every order-consistent matching, found by
// enumerating all index subsets of A and of B of equal size.
inline double exhaustive_soft_lcs(const std::vector<Action>& a, const std::vector<Action>& b,
                                  double nothing_weight = 0.4) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<double>> f(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) f[i][j] = match_oracle(a[i], b[j], nothing_weight);
    std::vector<std::vector<unsigned>> by_size_b(m + 1);
    for (unsigned mask = 0; mask < (1u << m); ++mask) by_size_b[std::popcount(mask)].push_back(mask);
    double best = 0.0;
    for (unsigned ma = 0; ma < (1u << n); ++ma) {
        const auto k = static_cast<std::size_t>(std::popcount(ma));
        if (k > m) continue;
        std::vector<std::size_t> ia;
        for (std::size_t i = 0; i < n; ++i)
            if (ma >> i & 1u) ia.push_back(i);
        for (unsigned mb : by_size_b[k]) {
            double sum = 0.0;
            std::size_t pos = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (mb >> j & 1u) sum += f[ia[pos++]][j];
            }
            best = std::max(best, sum);
        }
    }
    return best;
}

// Weighted LCS by the plain three-way recurrence over match_oracle.
inline double dp_soft_lcs(const std::vector<Action>& a, const std::vector<Action>& b, double nothing_weight = 0.4) {
    std::vector<std::vector<double>> t(a.size() + 1, std::vector<double>(b.size() + 1, 0.0));
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            t[i][j] = std::max({t[i - 1][j - 1] + match_oracle(a[i - 1], b[j - 1], nothing_weight), t[i - 1][j],
                                t[i][j - 1]});
    return t[a.size()][b.size()];
}

// Textbook quadratic LCS over exact action equality.
inline std::size_t textbook_lcs(const std::vector<Action>& a, const std::vector<Action>& b) {
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    return t[a.size()][b.size()];
}

inline const std::vector<std::string>& words() {
    static const std::vector<std::string> w = {"open", "the", "settings", "menu", "search", "recipe", "apple", "pie"};
    return w;
}

// Mixed-kind action from a deliberately small alphabet so matches are common.
inline Action random_action(keystep::Rng& rng, bool discrete_only = false) {
    const auto& w = words();
    auto text = [&] {
        std::string s;
        const auto n = 1 + keystep::uniform_index(rng, 3);
        for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w[keystep::uniform_index(rng, w.size())];
        return s;
    };
    const auto roll = keystep::uniform_index(rng, discrete_only ? 4 : 7);
    const auto element = static_cast<std::int64_t>(keystep::uniform_index(rng, 4));
    switch (roll) {
    case 0: return Action::click(element);
    case 1: return Action::long_click(element);
    case 2: return Action::scroll(static_cast<Direction>(keystep::uniform_index(rng, 2)));
    case 3: return Action::go_back();
    case 4: return Action::nothing();
    case 5: return Action::input(element, text());
    default: return Action::answer(text());
    }
}

inline std::vector<Action> random_actions(keystep::Rng& rng, std::size_t max_len, bool discrete_only = false) {
    std::vector<Action> out(keystep::uniform_index(rng, max_len + 1));
    for (auto& a : out) a = random_action(rng, discrete_only);
    return out;
}

// Nearest-preceding-key inheritance, 0 before the first key step.
inline std::vector<double> inherit(std::size_t steps, const std::vector<std::pair<std::size_t, double>>& keys) {
    std::vector<double> out(steps, 0.0);
    double cur = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        while (k < keys.size() && keys[k].first == i) cur = keys[k++].second;
        out[i] = cur;
    }
    return out;
}

} // namespace testkit
