#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tp {

enum Color : int { White = 0, Black = 1 };

inline Color other(Color c) { return c == White ? Black : White; }
inline const char* color_name(int c) { return c == White ? "white" : "black"; }

// An n-tile as the word t0 t1 ... t(n-1) of 1-tile ids.
using Word = std::vector<int>;

std::string word_str(const Word& w);

// Module errors carry a short machine code; the CLI turns them into error JSON.
struct Error : std::runtime_error {
    std::string code;
    Error(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

// Enumeration caps shared by all modules.
struct Caps {
    std::uint64_t words = 5'000'000;  // explicit word lists
    std::uint64_t dp_cells = 50'000'000;  // state x sum tables
};

}  // namespace tp
