#pragma once

#include <memory>
#include <string>

#include "patrol/gridmap.hpp"

namespace patrol::testutil {

// 6x6 layout with a pinched corridor: the cell at (1,2) can only move
// up or down, one station at (3,2)
inline const char* kCorridor6x6 =
    "0 0 0 0 0 0\n"
    "0 -1 0 -1 0 0\n"
    "0 0 0 0 0 0\n"
    "0 -1 5 -1 0 0\n"
    "0 0 0 0 0 0\n"
    "0 0 0 0 0 0\n";

inline const char* kOpen3x3 =
    "0 0 0\n"
    "0 5 0\n"
    "0 0 0\n";

inline std::shared_ptr<const GridMap> make_map(const std::string& text) {
  return std::make_shared<const GridMap>(GridMap::parse(text));
}

inline std::string data_path(const std::string& name) {
  return std::string(PATROL_DATA_DIR) + "/" + name;
}

inline std::string config_path(const std::string& name) {
  return std::string(PATROL_CONFIG_DIR) + "/" + name;
}

}  // namespace patrol::testutil
