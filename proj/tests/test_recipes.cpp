#include "support.hpp"

#include "keystep/errors.hpp"
#include "keystep/recipes.hpp"
#include "keystep/simenv.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace keystep;
using testkit::clicks;
using testkit::make_traj;

namespace {

const ActionMatcher matcher;

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "keystep-unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

// Every pair inside every group must clear the threshold.
std::size_t linkage_violations(const std::vector<Trajectory>& ds, const RecipeLibrary& lib, double theta) {
    std::map<std::string, const Trajectory*> by_id;
    for (const auto& t : ds) by_id[t.traj_id] = &t;
    std::size_t bad = 0;
    for (const auto& [goal, recipes] : lib.by_goal) {
        for (const auto& r : recipes) {
            for (std::size_t a = 0; a < r.source_traj_ids.size(); ++a) {
                for (std::size_t b = a + 1; b < r.source_traj_ids.size(); ++b) {
                    const auto& x = *by_id.at(r.source_traj_ids[a]);
                    const auto& y = *by_id.at(r.source_traj_ids[b]);
                    if (similarity(x, y, matcher) < theta) ++bad;
                }
            }
        }
    }
    return bad;
}

} // namespace

TEST_CASE("group_trajectories examples") {
    const auto t1 = make_traj("t1", "g", clicks({1, 2, 3, 4}));
    const auto t1b = make_traj("t1b", "g", clicks({1, 2, 3, 4}));
    auto groups = group_trajectories({t1, t1b}, 0.6, matcher);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == std::vector<std::string>{"t1", "t1b"});

    groups = group_trajectories({make_traj("a", "g", clicks({1, 2})), make_traj("b", "g", clicks({3, 4}))}, 0.6, matcher);
    CHECK(groups.size() == 2);

    CHECK(group_trajectories({}, 0.6, matcher).empty());
}

TEST_CASE("greedy complete linkage splits a non-transitive triple") {
    const auto x = make_traj("t1", "g", clicks({1, 2, 3, 4, 5}));
    const auto y = make_traj("t2", "g", clicks({1, 2, 3, 20, 21}));
    const auto z = make_traj("t3", "g", clicks({3, 4, 5, 30, 31}));
    // Oracle similarities by textbook LCS.
    auto sim = [](const Trajectory& p, const Trajectory& q) {
        return static_cast<double>(testkit::textbook_lcs(p.actions(), q.actions())) /
               static_cast<double>(std::min(p.steps.size(), q.steps.size()));
    };
    REQUIRE(sim(x, y) >= 0.6);
    REQUIRE(sim(x, z) >= 0.6);
    REQUIRE(sim(y, z) < 0.6);
    const auto groups = group_trajectories({z, y, x}, 0.6, matcher);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<std::string>{"t1", "t2"});
    CHECK(groups[1] == std::vector<std::string>{"t3"});
}

TEST_CASE("grouping rejects failures and mixed goals") {
    CHECK_THROWS(group_trajectories({make_traj("a", "g", clicks({1}), false)}, 0.6, matcher));
    CHECK_THROWS(group_trajectories({make_traj("a", "g", clicks({1})), make_traj("b", "h", clicks({1}))}, 0.6, matcher));
}

TEST_CASE("extract_recipe examples") {
    const auto single = make_traj("s", "g", clicks({5, 6, 7}));
    const auto r = extract_recipe({single}, matcher);
    CHECK(r.actions == single.actions());
    CHECK(r.group_size == 1);
    CHECK(r.recipe_id == "g/s");

    const auto twin = make_traj("r", "g", clicks({5, 6, 7}));
    CHECK(extract_recipe({single, twin}, matcher).actions == single.actions());
    CHECK(extract_recipe({single, twin}, matcher).source_traj_ids == std::vector<std::string>{"r", "s"});
}

TEST_CASE("extract_recipe recovers a planted core and reports empty folds") {
    const auto core = clicks({10, 11, 12});
    const auto a = make_traj("a", "g", {Action::click(10), Action::click(90), Action::click(11), Action::click(12)});
    const auto b = make_traj("b", "g", {Action::click(80), Action::click(10), Action::click(11), Action::click(81), Action::click(12)});
    const auto c = make_traj("c", "g", {Action::click(10), Action::click(11), Action::click(70), Action::click(12), Action::click(71)});
    CHECK(extract_recipe({c, a, b}, matcher).actions == core);

    try {
        extract_recipe({make_traj("p", "g", clicks({1})), make_traj("q", "g", clicks({2}))}, matcher);
        FAIL("expected an empty recipe error");
    } catch (const EmptyRecipeError& e) {
        CHECK(e.group() == std::vector<std::string>{"p", "q"});
    }
}

TEST_CASE("build_library examples") {
    CHECK(build_library({make_traj("f", "g", clicks({1}), false)}, 0.6, matcher).recipe_count() == 0);
    const auto lib = build_library({make_traj("s", "g", clicks({1, 2})), make_traj("f", "g", clicks({1}), false)}, 0.6, matcher);
    REQUIRE(lib.recipe_count() == 1);
    CHECK(lib.recipes_for("g")->front().actions == clicks({1, 2}));
    CHECK(lib.recipes_for("h") == nullptr);
}

TEST_CASE("recipes are ordered by group size then id") {
    const std::vector<Trajectory> ds = {
        make_traj("z1", "g", clicks({7, 8})), make_traj("a1", "g", clicks({1, 2, 3})),
        make_traj("z2", "g", clicks({7, 8})), make_traj("m1", "g", clicks({4, 5, 6}))};
    const auto lib = build_library(ds, 0.6, matcher);
    const auto& rs = *lib.recipes_for("g");
    REQUIRE(rs.size() == 3);
    CHECK(rs[0].recipe_id == "g/z1");
    CHECK(rs[1].recipe_id == "g/a1");
    CHECK(rs[2].recipe_id == "g/m1");
}

TEST_CASE("simenv goals with distinct policies yield several recipes and respect linkage") {
    const auto tasks = generate_tasks(12, 4, {});
    PolicyMix mix;
    mix.optimal = 1.0;
    mix.noisy = mix.early_stop = mix.random = 0.0;
    const auto corpus = generate_corpus(tasks, mix, 12, 4);
    const auto lib = build_library(corpus.dataset, 0.6, matcher, 2);
    CHECK(linkage_violations(corpus.dataset, lib, 0.6) == 0);
    std::size_t multi = 0;
    for (const auto& task : tasks) {
        std::set<std::size_t> used;
        for (const auto& t : corpus.dataset) {
            if (t.goal_id != task.goal_id) continue;
            for (std::size_t r = 0; r < task.core_recipes.size(); ++r) {
                if (t.actions() == task.core_recipes[r]) used.insert(r);
            }
        }
        if (used.size() >= 2) {
            ++multi;
            CHECK(lib.recipes_for(task.goal_id)->size() >= 2);
        }
        for (const auto& r : *lib.recipes_for(task.goal_id)) {
            std::size_t min_len = SIZE_MAX;
            for (const auto& t : corpus.dataset) {
                if (std::find(r.source_traj_ids.begin(), r.source_traj_ids.end(), t.traj_id) != r.source_traj_ids.end()) {
                    min_len = std::min(min_len, t.steps.size());
                }
            }
            CHECK(r.actions.size() <= min_len);
        }
    }
    CHECK(multi > 0);
}

TEST_CASE("library save/load round trip, schema check and config warnings") {
    const auto tasks = generate_tasks(3, 8, {});
    const auto corpus = generate_corpus(tasks, PolicyMix{}, 8, 8);
    const auto lib = build_library(corpus.dataset, 0.6, matcher);
    const auto path = temp_path("lib.json");
    save_library(path, lib);
    const auto loaded = load_library(path, library_config(matcher, 0.6));
    CHECK(loaded.library == lib);
    CHECK(loaded.warnings.empty());
    CHECK(serialize_library(build_library(corpus.dataset, 0.6, matcher, 3)) == serialize_library(lib));

    const auto other = load_library(path, library_config(ActionMatcher(token_cosine_similarity(), 0.3), 0.6));
    CHECK(other.warnings.size() == 1);

    auto text = serialize_library(lib);
    text.replace(text.find(kLibrarySchemaVersion), std::string(kLibrarySchemaVersion).size(), "keystep.recipe-library/99");
    CHECK_THROWS_AS(parse_library(text), DataError);
}
