#pragma once

#include <string>

#include "tilepress/cells.hpp"
#include "tilepress/io.hpp"

namespace tpt {

inline std::string data_path(const std::string& rel) { return std::string(TILEPRESS_DATA) + "/" + rel; }

inline tp::SubdivisionRule shipped_rule(const std::string& name) { return tp::load_rule(data_path("rules/" + name + ".json")); }

inline long long ipow(long long b, int e) {
    long long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

}  // namespace tpt
