#pragma once
// HTTP client for an external progress scorer.
//
// Request:  POST {"instruction": str, "actions": [action...], "observation": str}
// Response: {"progress": number in [0, 1]}

#include "keystep/errors.hpp"
#include "keystep/estimator.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace keystep {

class RemoteError : public Error {
public:
    enum class Kind {
        Timeout,   // no answer before the deadline, including unreachable hosts
        HttpStatus,
        Protocol,  // unparsable body or missing/non-numeric progress
        Range,     // progress outside [0, 1]
    };

    RemoteError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct Endpoint {
    std::string host;
    int port = 80;
    std::string path = "/";

    // Accepts http://host[:port][/path].
    static Endpoint parse(const std::string& url);
};

struct RemoteScore {
    double progress = 0.0;
    std::chrono::duration<double> latency{0.0};
};

Json remote_request_body(const StateView& sv);

RemoteScore score_remote(const Endpoint& endpoint, const StateView& sv, std::chrono::duration<double> timeout);

// Scores every state with at most `max_in_flight` concurrent requests.
// Results are in input order.
std::vector<RemoteScore> score_remote_batch(const Endpoint& endpoint, const std::vector<StateView>& states,
                                            std::chrono::duration<double> timeout, unsigned max_in_flight);

} // namespace keystep
