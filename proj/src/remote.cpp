#include "keystep/remote.hpp"

#include "keystep/parallel.hpp"

#include <httplib.h>

#include <cmath>

namespace keystep {

Endpoint Endpoint::parse(const std::string& url) {
    constexpr std::string_view scheme = "http://";
    if (url.rfind(scheme, 0) != 0) throw std::invalid_argument("endpoint must start with http://: " + url);
    std::string rest = url.substr(scheme.size());
    Endpoint e;
    const auto slash = rest.find('/');
    if (slash != std::string::npos) {
        e.path = rest.substr(slash);
        rest = rest.substr(0, slash);
    }
    const auto colon = rest.rfind(':');
    if (colon != std::string::npos) {
        try {
            e.port = std::stoi(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad port in endpoint: " + url);
        }
        rest = rest.substr(0, colon);
    }
    if (rest.empty()) throw std::invalid_argument("missing host in endpoint: " + url);
    e.host = rest;
    return e;
}

Json remote_request_body(const StateView& sv) {
    Json body;
    body["instruction"] = sv.instruction;
    Json actions = Json::array();
    for (const auto& a : sv.action_history) actions.push_back(action_to_json(a));
    body["actions"] = std::move(actions);
    body["observation"] = sv.observation;
    return body;
}

RemoteScore score_remote(const Endpoint& endpoint, const StateView& sv, std::chrono::duration<double> timeout) {
    using Kind = RemoteError::Kind;
    httplib::Client client(endpoint.host, endpoint.port);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint.path, remote_request_body(sv).dump(), "application/json");
    const std::chrono::duration<double> latency = std::chrono::steady_clock::now() - start;

    if (!res) {
        throw RemoteError(Kind::Timeout, "no response from " + endpoint.host + ":" + std::to_string(endpoint.port) +
                                             " (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        throw RemoteError(Kind::HttpStatus, "scorer returned HTTP " + std::to_string(res->status));
    }
    Json reply;
    try {
        reply = Json::parse(res->body);
    } catch (const Json::exception&) {
        throw RemoteError(Kind::Protocol, "scorer reply is not JSON");
    }
    if (!reply.is_object() || !reply.contains("progress") || !reply.at("progress").is_number()) {
        throw RemoteError(Kind::Protocol, "scorer reply lacks a numeric 'progress'");
    }
    const double p = reply.at("progress").get<double>();
    if (!(p >= 0.0 && p <= 1.0)) {
        throw RemoteError(Kind::Range, "scorer progress " + std::to_string(p) + " outside [0, 1]");
    }
    return {p, latency};
}

std::vector<RemoteScore> score_remote_batch(const Endpoint& endpoint, const std::vector<StateView>& states,
                                            std::chrono::duration<double> timeout, unsigned max_in_flight) {
    std::vector<RemoteScore> out(states.size());
    parallel_for(states.size(), std::max(1u, max_in_flight),
                 [&](std::size_t i) { out[i] = score_remote(endpoint, states[i], timeout); });
    return out;
}

} // namespace keystep
