/**
 * @file config_io.hpp
 * @brief Key/value scenario files. Keys mirror NetworkConfig field names.
 *
 * Format: one `key = value` pair per line, `#` comments, blank lines ignored.
 * d_k_samples and c_k_cycles accept either a scalar or a comma-separated
 * per-UE list.
 */
#pragma once

#include <iosfwd>
#include <string>

#include "flmimo/types.hpp"

namespace flmimo {

// Parses and validates. Throws std::invalid_argument on unknown keys, parse
// failures, or invariant violations.
NetworkConfig load_config(std::istream& is);
NetworkConfig load_config_file(const std::string& path);

void write_config(std::ostream& os, const NetworkConfig& config);

}  // namespace flmimo
