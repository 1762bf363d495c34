#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tilepress/cells.hpp"

namespace tp {

using BigInt = boost::multiprecision::cpp_int;

struct Subsystem {
    std::vector<int> ids;      // sorted 1-tile ids
    std::vector<char> member;  // indexed by tile id
    int color_mask = 0;        // bit c set when some tile has color c
    bool dom_in_image = false; // every tile is located in a color of the subsystem
    bool full = false;

    bool has(int t) const { return member[t] != 0; }
};

// a[c][c'] = number of tiles of color c located in c'. (A^n)[c][c'] counts n-words likewise.
struct TileMatrix {
    std::array<std::array<long long, 2>, 2> a{};
};

enum class PrimitivityKind { StronglyPrimitive, Primitive, Neither };
const char* kind_name(PrimitivityKind k);

struct PrimitivityCertificate {
    PrimitivityKind kind = PrimitivityKind::Neither;
    int n_F = 0;
    int cap = 0;
    // witness[c][c'] at level n_F: a word of color c located in c'
    std::array<std::array<Word, 2>, 2> witness;
    std::vector<char> strong_at;  // index n (1..cap)
    std::vector<char> weak_at;
};

Subsystem make_subsystem(const SubdivisionRule& rule, std::vector<int> ids);
Subsystem full_subsystem(const SubdivisionRule& rule);
// Parses "all", "3,4,5" or ranges "0-7" into ids; drop=true complements.
Subsystem subsystem_from_spec(const SubdivisionRule& rule, const std::string& spec, bool drop);

TileMatrix tile_matrix(const SubdivisionRule& rule, const Subsystem& F);
double spectral_radius(const TileMatrix& A);
double subsystem_entropy(const SubdivisionRule& rule, const Subsystem& F);

// Exact 1^T A^n 1.
BigInt subsystem_tile_count(const SubdivisionRule& rule, const Subsystem& F, int n);
// (A^n)[c][c'] exactly.
std::array<std::array<BigInt, 2>, 2> matrix_power_counts(const TileMatrix& A, int n);

void for_each_subsystem_word(const SubdivisionRule& rule, const Subsystem& F, int n,
                             const std::function<bool(const Word&)>& fn);
std::vector<Word> subsystem_tiles(const SubdivisionRule& rule, const Subsystem& F, int n, const Caps& caps);

// Lexicographically least n-word of F located in loc with the given color (interior if asked).
std::optional<Word> find_word(const Cells& cells, const Subsystem& F, int n, Color loc, Color color, bool interior);

PrimitivityCertificate primitivity(const Cells& cells, const Subsystem& F, int cap);

}  // namespace tp
