#pragma once

#include <string>

#include "defhom/config.hpp"

inline defhom::Config bench_config(const std::string& name) {
  return defhom::load_config(std::string(DEFHOM_CONFIG_DIR) + "/" + name + ".json");
}
