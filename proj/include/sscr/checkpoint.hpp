#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sscr/param_store.hpp"

namespace sscr {

// Versioned binary checkpoint: header, then (name, shape, raw little-endian
// 64-bit values) records. Multiple stores live in one file under their
// section names; round trips are bit-exact.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParameterStore*>>& stores);

// Stores must already hold identically shaped parameters; values are replaced.
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, ParameterStore*>>& stores);

bool checkpoint_exists(const std::string& path);

}  // namespace sscr
