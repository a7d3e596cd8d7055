#include "keystep/text.hpp"

#include <cctype>

namespace keystep {

namespace {
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
} // namespace

std::vector<std::string> tokenize_lower_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(lower(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::set<std::string> token_set(std::string_view s) {
    std::set<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            out.insert(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(std::move(cur));
    return out;
}

double token_coverage(const std::set<std::string>& reference, const std::set<std::string>& other) {
    if (reference.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& t : reference) shared += other.count(t);
    return static_cast<double>(shared) / static_cast<double>(reference.size());
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace keystep
