#pragma once

#include "hsvi/bounds.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hsvi {

/// Serialized lower bound: one action-tagged alpha vector per entry.
struct PolicyFile {
    int num_states = 0;
    std::vector<AlphaVector> vectors;

    bool operator==(const PolicyFile&) const = default;
};

PolicyFile make_policy(const LowerBound& lb, int num_states);
LowerBound to_lower_bound(const PolicyFile& policy);

/// Format: `alpha-policy v1 |S|=<n>`, then per vector an action line and a
/// line of n values printed with 17 significant digits.
void save_policy(const PolicyFile& policy, std::ostream& out);
void save_policy(const PolicyFile& policy, const std::filesystem::path& path);

/// Throws ParseError on malformed input and IoError when the file cannot be read.
PolicyFile load_policy(std::istream& in);
PolicyFile load_policy(const std::filesystem::path& path);

} // namespace hsvi
