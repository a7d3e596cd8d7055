#pragma once
// Trajectory data model shared by every stage of the labeling pipeline.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace keystep {

enum class ActionKind { Input, Click, LongClick, Scroll, Answer, GoBack, Nothing };

inline constexpr std::size_t kActionKindCount = 7;

enum class Direction { Up, Down, Left, Right };

std::string_view to_string(ActionKind kind);
std::string_view to_string(Direction dir);
std::optional<ActionKind> parse_action_kind(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);
Direction opposite(Direction dir);

// A typed GUI action. Which optional fields are present depends on `kind`;
// see validate_action().
struct Action {
    ActionKind kind = ActionKind::Nothing;
    std::optional<std::int64_t> element_id;
    std::optional<std::string> text;
    std::optional<Direction> direction;

    static Action input(std::int64_t element, std::string text);
    static Action click(std::int64_t element);
    static Action long_click(std::int64_t element);
    static Action scroll(Direction dir);
    static Action answer(std::string text);
    static Action go_back();
    static Action nothing();

    // INPUT, ANSWER and NOTHING carry soft match weights; the rest match
    // exactly or not at all.
    bool is_discrete() const;

    bool operator==(const Action&) const = default;
};

// Compact human-readable rendering, e.g. CLICK(3), SCROLL(DOWN).
std::string describe(const Action& a);

struct Step {
    Action action;
    // Screen representation after the action was executed.
    std::string observation;
    std::optional<double> milestone_reward;

    bool operator==(const Step&) const = default;
};

struct Trajectory {
    std::string traj_id;
    std::string goal_id;
    std::string instruction;
    std::vector<Step> steps;
    bool success = false;

    std::vector<Action> actions() const;
    bool operator==(const Trajectory&) const = default;
};

struct LabeledStep {
    std::size_t step_index = 0;
    double progress = 0.0;
    bool is_key = false;
    std::optional<std::size_t> recipe_position; // 1-based, present iff is_key for LCS labels

    bool operator==(const LabeledStep&) const = default;
};

struct Violation {
    std::optional<std::size_t> step_index;
    std::string field;
    std::string message;

    bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

std::vector<Violation> validate_action(const Action& a, std::optional<std::size_t> step_index = std::nullopt);
std::vector<Violation> validate_trajectory(const Trajectory& t);

} // namespace keystep
