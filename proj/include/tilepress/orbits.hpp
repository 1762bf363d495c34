#pragma once

#include <string>
#include <vector>

#include "tilepress/subsystem.hpp"
#include "tilepress/thermo.hpp"

namespace tp {
// Base point of a preimage family: a generic point of a 0-tile (encoded by the
// Base point of a preimage family: a generic point of a 0-tile (encoded by the lexicographically
// periodic address of an interior word) or a 0-vertex.
struct BaseSpec {
    bool vertex = false;
    Color color = White;
    int index = 0;  // 0-vertex index when vertex

    static BaseSpec parse(const std::string& s);  // "generic:white", "generic:black", "vertex:k"
    std::string str() const;
};

Word generic_address(const Cells& cells, Color c, int len);

// Weights split by the exact value of S_n psi (psi level 1 with rational values).
struct SplitSums {
    std::int64_t denom = 1;    // psi scaled by denom
    long long offset = 0;      // bucket b holds S_n psi = (offset + b) / denom
    std::vector<double> logw;  // log of the bucket weight, -inf when empty

    double log_total() const;
    // Buckets with S_n psi >= threshold (exact comparison on the scaled integers).
    double log_at_least(const Rational& threshold) const;
};

enum class PeriodicMode { Lower, Upper, Cyclic };

// Fixed n-tiles (location of the first letter = color of the last). Lower: e^{inf}/Nmax,
// Upper: e^{sup}, Cyclic: e^{S_n phi} along the periodic itinerary.
SplitSums periodic_split(const Cells& cells, const Potential& phi, const Potential* psi, int n, PeriodicMode mode);
// Preimages of the base point; which selects the lower/mid/upper bracket end for vertex bases.
SplitSums preimage_split(const Cells& cells, const Potential& phi, const Potential* psi, int n, const BaseSpec& base, int which);

struct PeriodicSums {
    int n = 0;
    BigInt count;
    int nmax = 2;
    double log_lower = 0, log_upper = 0, log_cyclic = 0;
    double midpoint_rate() const { return (log_lower + log_upper) / (2.0 * n); }
};
PeriodicSums fixed_tile_sums(const Cells& cells, const Potential& phi, int n);

struct FixedTile {
    Word word;
    Bracket phi;
};
std::vector<FixedTile> fixed_tiles(const Cells& cells, const Potential& phi, int n, const Caps& caps = {});

struct PreimageSums {
    int n = 0;
    BaseSpec base;
    BigInt weight_total;
    double log_lower = 0, log_upper = 0;
    double midpoint_rate() const { return (log_lower + log_upper) / (2.0 * n); }
};
PreimageSums preimage_sums(const Cells& cells, const Potential& phi, int n, const BaseSpec& base);

struct Preimage {
    Word word;       // a containing n-tile
    int corner = -1; // corner at the preimage for vertex bases
    int weight = 1;  // local degree of f^n there
    Bracket phi;
};
std::vector<Preimage> preimages(const Cells& cells, const Potential& phi, int n, const BaseSpec& base, const Caps& caps = {});

struct VertexOrbit {
    Word tile;             // 1-tile and corner representing the 1-vertex
    int corner = 0;
    int local_degree = 1;
    int zero_vertex = -1;  // index when the 1-vertex is a 0-vertex
    std::vector<int> orbit;  // 0-vertex indices f(v), f^2(v), ... up to the first repetition
    bool periodic = false;
    int period = 0;
};

struct CriticalOrbitReport {
    std::vector<VertexOrbit> vertices;  // every 1-vertex, canonical order
    std::vector<int> zero_degrees;      // deg_f at each 0-vertex
    std::vector<int> vertex_image;
    bool has_periodic_critical = false;
    int critical_count() const;
};
CriticalOrbitReport critical_orbits(const Cells& cells);

// max(2, 2 max deg_{f^n}(v) over 0-vertices v with f^n(v) = v): most fixed n-tiles sharing one fixed point.
int fixed_vertex_divisor(const Cells& cells, int n);

}  // namespace tp
