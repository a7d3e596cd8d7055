#include "support.hpp"

#include "keystep/errors.hpp"
#include "keystep/estimator.hpp"
#include "keystep/io.hpp"
#include "keystep/labeling.hpp"
#include "keystep/remote.hpp"
#include "keystep/rewards.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cmath>
#include <thread>

using namespace keystep;
using testkit::make_traj;

TEST_CASE("progress_rewards examples") {
    const std::vector<double> p = {0.25, 0.5, 0.75, 1.0};
    CHECK(progress_rewards(p, 1, 0.0) == std::vector<double>{0.25, 0.25, 0.25, 0.25});

    // r1 = p1 - p0, r2 = p2 - p0, r3 = p3 - p1
    const std::vector<double> q = {0.3, 0.3, 0.6};
    const auto r = progress_rewards(q, 2, 0.0);
    const std::vector<double> want = {0.3 - 0.0, 0.3 - 0.0, 0.6 - 0.3};
    CHECK(r == want);

    for (double x : progress_rewards(std::vector<double>{0.0, 0.2, 0.2, 0.9}, 1, 0.0)) CHECK(x >= 0.0);
    CHECK_THROWS(progress_rewards(p, 0, 0.0));
    CHECK_THROWS(progress_rewards(std::vector<double>{1.2}, 1, 0.0));
}

TEST_CASE("outcome_reward examples") {
    CHECK(outcome_reward(true, 3) == std::vector<double>{0, 0, 1});
    CHECK(outcome_reward(false, 3) == std::vector<double>{0, 0, 0});
    CHECK(outcome_reward(true, 1) == std::vector<double>{1});
}

TEST_CASE("telescoping and k-composition on random series") {
    Rng rng(31);
    for (int n = 0; n < 200; ++n) {
        const std::size_t len = 1 + uniform_index(rng, 20);
        std::vector<double> p(len);
        double cur = uniform_unit(rng) * 0.2;
        const double p0 = cur * uniform_unit(rng);
        for (auto& v : p) v = cur = std::min(1.0, cur + uniform_unit(rng) * 0.1);
        const auto r1 = progress_rewards(p, 1, p0);
        double sum = 0.0;
        for (double x : r1) sum += x;
        CHECK(std::abs(sum - (p.back() - p0)) < 1e-9);
        for (std::size_t k : {2u, 3u}) {
            const auto rk = progress_rewards(p, k, p0);
            for (std::size_t t = 0; t < len; ++t) {
                // Sum of the k one-step rewards ending at t; terms before the
                // first step contribute p0 - p0 = 0.
                double acc = 0.0;
                for (std::size_t d = 0; d < k && d <= t; ++d) acc += r1[t - d];
                CHECK(std::abs(rk[t] - acc) < 1e-12);
            }
        }
    }
}

TEST_CASE("reward_trajectory from labels telescopes") {
    const auto t = make_traj("t", "g", {Action::click(1), Action::click(2), Action::click(3)});
    const auto lt = assign_progress_linear(t);
    RewardConfig cfg;
    cfg.source = RewardSource::Labels;
    cfg.labels = &lt;
    const auto s = reward_trajectory(t, cfg);
    double sum = 0.0;
    for (double x : s.rewards) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(s.source == RewardSource::Labels);

    RewardConfig none;
    none.source = RewardSource::Estimator;
    CHECK_THROWS_AS(reward_trajectory(t, none), DataError);
}

TEST_CASE("reward_trajectory from the estimator uses the initial-state score") {
    const auto t = make_traj("t", "g", {Action::click(1), Action::nothing()});
    ProgressModel m = ProgressModel::initial(kFeatureCount);
    m.weights[kHistoryLength] = 3.0;
    m.bias = -1.0;
    RewardConfig cfg;
    cfg.source = RewardSource::Estimator;
    cfg.model = &m;
    const auto s = reward_trajectory(t, cfg);
    const double p0 = predict_progress(m, StateView{t.instruction, {}, ""});
    const double p1 = predict_progress(m, state_at(t, 0));
    const double p2 = predict_progress(m, state_at(t, 1));
    CHECK(s.rewards == std::vector<double>{p1 - p0, p2 - p1});
    cfg.clip = 0.0;
    CHECK(reward_trajectory(t, cfg).rewards == std::vector<double>{0.0, 0.0});
}

TEST_CASE("reward series JSON layout") {
    RewardSeries s{"t", 2, {0.5, 0.25}, RewardSource::Remote};
    CHECK(reward_series_to_json(s).dump() == R"({"traj_id":"t","k":2,"source":"remote","rewards":[0.5,0.25]})");
}

namespace {

// Local scorer stub; answers with a fixed body or echoes history length.
class StubServer {
public:
    explicit StubServer(std::string body) {
        server_.Post("/score", [body](const httplib::Request& req, httplib::Response& res) {
            if (body == "echo") {
                const auto j = Json::parse(req.body);
                const double p = static_cast<double>(j.at("actions").size()) / 10.0;
                res.set_content(Json{{"progress", p}}.dump(), "application/json");
            } else if (body == "500") {
                res.status = 500;
            } else {
                res.set_content(body, "application/json");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    Endpoint endpoint() const { return Endpoint::parse("http://127.0.0.1:" + std::to_string(port_) + "/score"); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

RemoteError::Kind kind_of(const Endpoint& ep) {
    try {
        score_remote(ep, StateView{"i", {}, "o"}, std::chrono::milliseconds(500));
    } catch (const RemoteError& e) {
        return e.kind();
    }
    FAIL("expected a remote error");
    return RemoteError::Kind::Protocol;
}

} // namespace

TEST_CASE("Endpoint parsing") {
    const auto e = Endpoint::parse("http://localhost:8123/v1/score");
    CHECK(e.host == "localhost");
    CHECK(e.port == 8123);
    CHECK(e.path == "/v1/score");
    CHECK(Endpoint::parse("http://example.org").port == 80);
    CHECK_THROWS(Endpoint::parse("ftp://x"));
}

TEST_CASE("remote request body carries instruction, actions and observation") {
    const auto j = remote_request_body(StateView{"do it", {Action::click(3)}, "screen"});
    CHECK(j.at("instruction") == "do it");
    CHECK(j.at("actions").size() == 1);
    CHECK(j.at("actions")[0].at("kind") == "CLICK");
    CHECK(j.at("observation") == "screen");
}

TEST_CASE("remote scorer contract against a local stub") {
    {
        StubServer stub(R"({"progress": 0.42})");
        const auto s = score_remote(stub.endpoint(), StateView{"i", {}, "o"}, std::chrono::seconds(2));
        CHECK(s.progress == 0.42);
        CHECK(s.latency.count() >= 0.0);
    }
    {
        StubServer stub(R"({"progress": 1.7})");
        CHECK(kind_of(stub.endpoint()) == RemoteError::Kind::Range);
    }
    {
        StubServer stub(R"({"progress": "high"})");
        CHECK(kind_of(stub.endpoint()) == RemoteError::Kind::Protocol);
    }
    {
        StubServer stub("500");
        CHECK(kind_of(stub.endpoint()) == RemoteError::Kind::HttpStatus);
    }
    int closed_port = 0;
    {
        httplib::Server probe;
        closed_port = probe.bind_to_any_port("127.0.0.1");
    }
    CHECK(kind_of(Endpoint::parse("http://127.0.0.1:" + std::to_string(closed_port) + "/score")) ==
          RemoteError::Kind::Timeout);
}

TEST_CASE("remote rewards equal the stub's progress differences") {
    StubServer stub("echo");
    const auto t = make_traj("t", "g", {Action::click(1), Action::click(2), Action::click(3)});
    RewardConfig cfg;
    cfg.source = RewardSource::Remote;
    cfg.endpoint = stub.endpoint();
    cfg.max_in_flight = 2;
    const auto s = reward_trajectory(t, cfg);
    // Stub progress is history length / 10: 0, 0.1, 0.2; p0 = 0.
    const std::vector<double> want = {0.0 - 0.0, 0.1 - 0.0, 0.2 - 0.1};
    REQUIRE(s.rewards.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.rewards[i] == doctest::Approx(want[i]).epsilon(1e-15));
}
