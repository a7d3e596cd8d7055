#include "support.hpp"

#include "keystep/errors.hpp"
#include "keystep/io.hpp"
#include "keystep/trajectory.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace keystep;
using testkit::make_traj;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "keystep-unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Trajectory three_step() {
    auto t = make_traj("a", "g", {Action::click(1), Action::input(2, "apple pie"), Action::scroll(Direction::Down)});
    t.steps[1].milestone_reward = 1.0;
    return t;
}

} // namespace

TEST_CASE("validate_trajectory accepts a well-formed trajectory") {
    CHECK(validate_trajectory(three_step()).empty());
}

TEST_CASE("CLICK with text is reported at its step and field") {
    auto t = three_step();
    t.steps[0].action.text = "oops";
    const auto v = validate_trajectory(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].step_index == 0u);
    CHECK(v[0].field.find("text") != std::string::npos);
}

TEST_CASE("empty trajectory yields a single steps-empty violation") {
    auto t = three_step();
    t.steps.clear();
    const auto v = validate_trajectory(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "steps empty");
}

TEST_CASE("field presence rules per kind") {
    CHECK_FALSE(validate_action(Action{ActionKind::Click, std::nullopt, std::nullopt, std::nullopt}).empty());
    CHECK_FALSE(validate_action(Action{ActionKind::Scroll, std::nullopt, std::nullopt, std::nullopt}).empty());
    CHECK_FALSE(validate_action(Action{ActionKind::Input, 1, std::string("   "), std::nullopt}).empty());
    CHECK_FALSE(validate_action(Action{ActionKind::Click, -1, std::nullopt, std::nullopt}).empty());
    CHECK_FALSE(validate_action(Action{ActionKind::Nothing, 3, std::nullopt, std::nullopt}).empty());
    CHECK(validate_action(Action::answer("done")).empty());
    CHECK(validate_action(Action::go_back()).empty());
}

TEST_CASE("negative or non-finite milestone rewards are violations") {
    auto t = three_step();
    t.steps[2].milestone_reward = -0.5;
    CHECK(validate_trajectory(t).size() == 1);
    t.steps[2].milestone_reward = std::nan("");
    CHECK(validate_trajectory(t).size() == 1);
}

TEST_CASE("dataset round trip preserves trajectories and order") {
    auto b = make_traj("b", "g2", {Action::answer("it is 42"), Action::nothing(), Action::long_click(0)}, false);
    b.steps[0].observation = "screen \"quoted\" é";
    const std::vector<Trajectory> ds = {three_step(), b};
    const auto path = temp_path("roundtrip.jsonl");
    write_dataset(path, ds);
    CHECK(read_dataset(path) == ds);
}

TEST_CASE("random valid trajectories survive serialization") {
    Rng rng(5);
    std::vector<Trajectory> ds;
    for (int i = 0; i < 200; ++i) {
        auto actions = testkit::random_actions(rng, 6);
        if (actions.empty()) actions.push_back(Action::nothing());
        auto t = make_traj("t" + std::to_string(i), "g", actions, bernoulli(rng, 0.5));
        for (auto& s : t.steps) {
            if (bernoulli(rng, 0.5)) s.milestone_reward = uniform_unit(rng) * 3.0;
            s.observation = "obs " + std::to_string(uniform_index(rng, 100));
        }
        ds.push_back(t);
    }
    CHECK(parse_dataset(serialize_dataset(ds)) == ds);
}

TEST_CASE("invalid enum on line 3 is reported with its line number") {
    const auto good = serialize_dataset({three_step(), make_traj("b", "g", {Action::go_back()})});
    std::string bad = trajectory_to_json(make_traj("c", "g", {Action::go_back()})).dump();
    bad.replace(bad.find("GOBACK"), 6, "JUMP");
    try {
        parse_dataset(good + bad + "\n");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        REQUIRE(e.line().has_value());
        CHECK(*e.line() == 3u);
    }
}

TEST_CASE("duplicate traj_id is rejected on read and write") {
    const auto t = three_step();
    CHECK_THROWS_AS(parse_dataset(serialize_dataset({t}) + serialize_dataset({t})), DataError);
    CHECK_THROWS_AS(write_dataset(temp_path("dup.jsonl"), {t, t}), DataError);
}

TEST_CASE("unknown JSON fields are rejected") {
    auto j = trajectory_to_json(three_step());
    j["extra"] = 1;
    CHECK_THROWS_AS(trajectory_from_json(j), DataError);
    auto a = action_to_json(Action::click(1));
    a["color"] = "red";
    CHECK_THROWS_AS(action_from_json(a), DataError);
}

TEST_CASE("ANSWER element_id is normalized away") {
    Json j = {{"kind", "ANSWER"}, {"element_id", 7}, {"text", "yes"}};
    const auto a = action_from_json(j);
    CHECK_FALSE(a.element_id.has_value());
    CHECK(validate_action(a).empty());
}

TEST_CASE("missing file is an I/O error") {
    CHECK_THROWS_AS(read_dataset(temp_path("does-not-exist.jsonl")), IoError);
}

TEST_CASE("blank lines are skipped but count toward line numbers") {
    const auto line = trajectory_to_json(three_step()).dump();
    const auto ds = parse_dataset("\n" + line + "\n\n");
    CHECK(ds.size() == 1);
    try {
        parse_dataset("\n\n{not json\n");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(e.line() == std::optional<std::size_t>(3));
    }
}
