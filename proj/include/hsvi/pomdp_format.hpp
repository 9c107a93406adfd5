#pragma once

#include "hsvi/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace hsvi {

struct ParseOptions {
    /// Row-sum tolerance used when validating T, O and the start belief.
    double tolerance = kStochasticTolerance;
    /// Rescale T and O rows (and the start belief) to sum to one before validation.
    bool renormalize = false;
};

/**
 * Reads the supported subset of the Cassandra `.pomdp` format:
 *   discount, values: reward, states/actions/observations (count or names),
 *   start (floats or `uniform`), T and O entries in full, row and matrix form
 *   (`uniform`, `identity` for T, `uniform` for O), and full R entries.
 * `*` is accepted in every index position; later entries override earlier ones.
 *
 * Rewards are folded into R(s,a) = sum_{s',o} T(s,a,s') O(s',a,o) R(a,s,s',o).
 */
PomdpModel parse_pomdp(std::istream& in, const ParseOptions& options = {});
PomdpModel parse_pomdp(std::string_view text, const ParseOptions& options = {});
PomdpModel load_pomdp(const std::filesystem::path& path, const ParseOptions& options = {});

/// Writes a file that parse_pomdp reads back to an equal model.
void write_pomdp(const PomdpModel& model, std::ostream& out);
void save_pomdp(const PomdpModel& model, const std::filesystem::path& path);

} // namespace hsvi
