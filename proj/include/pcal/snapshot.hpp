#ifndef PCAL_SNAPSHOT_HPP
#define PCAL_SNAPSHOT_HPP

// Versioned JSON snapshots of a jumper state, taken between steps (after an
// update, before the next jump mixing). The file carries the full config and
// a hash of it; loading against a different config is refused.

#include "pcal/jumper.hpp"

#include <filesystem>
#include <string>

namespace pcal {

inline constexpr int kSnapshotVersion = 1;

/// FNV-1a 64 over the shortest round-trip text of pi, the jump rates and every
/// grid member, as 16 hex digits.
std::string config_hash(const JumperConfig& config);

std::string snapshot_to_string(const JumperConfig& config, const JumperState& state);
JumperState snapshot_from_string(const std::string& text, const JumperConfig& config);

void save_snapshot(const std::filesystem::path& path, const JumperConfig& config,
                   const JumperState& state);
JumperState load_snapshot(const std::filesystem::path& path, const JumperConfig& config);

}  // namespace pcal

#endif  // PCAL_SNAPSHOT_HPP
