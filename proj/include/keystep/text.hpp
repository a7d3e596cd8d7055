#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace keystep {

// ASCII lowercase, split on whitespace.
std::vector<std::string> tokenize_lower_whitespace(std::string_view s);

// ASCII lowercase, split on anything non-alphanumeric, deduplicated.
std::set<std::string> token_set(std::string_view s);

// Fraction of `reference` tokens that also occur in `other`; 0 when
// `reference` has no tokens.
double token_coverage(const std::set<std::string>& reference, const std::set<std::string>& other);

std::string trim(std::string_view s);

} // namespace keystep
