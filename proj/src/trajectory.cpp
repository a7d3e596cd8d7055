#include "keystep/trajectory.hpp"

#include <array>
#include <cctype>
#include <cmath>

namespace keystep {

namespace {

constexpr std::array<std::string_view, kActionKindCount> kKindNames = {
    "INPUT", "CLICK", "LONG_CLICK", "SCROLL", "ANSWER", "GOBACK", "NOTHING"};

constexpr std::array<std::string_view, 4> kDirectionNames = {"UP", "DOWN", "LEFT", "RIGHT"};

bool blank(std::string_view s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

struct FieldRule {
    bool element;
    bool text;
    bool direction;
};

FieldRule rule_for(ActionKind kind) {
    switch (kind) {
    case ActionKind::Input: return {true, true, false};
    case ActionKind::Click:
    case ActionKind::LongClick: return {true, false, false};
    case ActionKind::Scroll: return {false, false, true};
    case ActionKind::Answer: return {false, true, false};
    case ActionKind::GoBack:
    case ActionKind::Nothing: return {false, false, false};
    }
    return {false, false, false};
}

} // namespace

std::string_view to_string(ActionKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string_view to_string(Direction dir) { return kDirectionNames[static_cast<std::size_t>(dir)]; }

std::optional<ActionKind> parse_action_kind(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == s) return static_cast<ActionKind>(i);
    }
    return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
    for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
        if (kDirectionNames[i] == s) return static_cast<Direction>(i);
    }
    return std::nullopt;
}

Direction opposite(Direction dir) {
    switch (dir) {
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
    }
    return dir;
}

Action Action::input(std::int64_t element, std::string text) {
    return {ActionKind::Input, element, std::move(text), std::nullopt};
}
Action Action::click(std::int64_t element) { return {ActionKind::Click, element, std::nullopt, std::nullopt}; }
Action Action::long_click(std::int64_t element) {
    return {ActionKind::LongClick, element, std::nullopt, std::nullopt};
}
Action Action::scroll(Direction dir) { return {ActionKind::Scroll, std::nullopt, std::nullopt, dir}; }
Action Action::answer(std::string text) { return {ActionKind::Answer, std::nullopt, std::move(text), std::nullopt}; }
Action Action::go_back() { return {ActionKind::GoBack, std::nullopt, std::nullopt, std::nullopt}; }
Action Action::nothing() { return {ActionKind::Nothing, std::nullopt, std::nullopt, std::nullopt}; }

bool Action::is_discrete() const {
    return kind != ActionKind::Input && kind != ActionKind::Answer && kind != ActionKind::Nothing;
}

std::string describe(const Action& a) {
    std::string out(to_string(a.kind));
    std::string args;
    if (a.element_id) args += std::to_string(*a.element_id);
    if (a.text) {
        if (!args.empty()) args += ", ";
        args += '"' + *a.text + '"';
    }
    if (a.direction) {
        if (!args.empty()) args += ", ";
        args += to_string(*a.direction);
    }
    if (!args.empty()) out += "(" + args + ")";
    return out;
}

std::vector<Action> Trajectory::actions() const {
    std::vector<Action> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.action);
    return out;
}

std::string describe(const Violation& v) {
    std::string out;
    if (v.step_index) out += "step " + std::to_string(*v.step_index) + ": ";
    out += v.field + ": " + v.message;
    return out;
}

std::vector<Violation> validate_action(const Action& a, std::optional<std::size_t> step_index) {
    std::vector<Violation> out;
    const FieldRule rule = rule_for(a.kind);
    const std::string kind(to_string(a.kind));
    auto check = [&](bool required, bool present, const char* field) {
        if (required && !present) out.push_back({step_index, field, "required for " + kind});
        if (!required && present) out.push_back({step_index, field, "not allowed for " + kind});
    };
    check(rule.element, a.element_id.has_value(), "action.element_id");
    check(rule.text, a.text.has_value(), "action.text");
    check(rule.direction, a.direction.has_value(), "action.direction");
    if (a.element_id && *a.element_id < 0) out.push_back({step_index, "action.element_id", "negative"});
    if (a.text && blank(*a.text)) out.push_back({step_index, "action.text", "empty after trimming"});
    return out;
}

std::vector<Violation> validate_trajectory(const Trajectory& t) {
    std::vector<Violation> out;
    if (t.traj_id.empty()) out.push_back({std::nullopt, "traj_id", "empty"});
    if (t.steps.empty()) out.push_back({std::nullopt, "steps", "steps empty"});
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const Step& s = t.steps[i];
        auto v = validate_action(s.action, i);
        out.insert(out.end(), v.begin(), v.end());
        if (s.milestone_reward && (!std::isfinite(*s.milestone_reward) || *s.milestone_reward < 0.0)) {
            out.push_back({i, "milestone_reward", "must be finite and non-negative"});
        }
    }
    return out;
}

} // namespace keystep
