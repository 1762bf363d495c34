#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tilepress/common.hpp"

namespace tp {

struct Side {
    int image_edge = -1;
    int nb_tile = -1;
    int nb_side = -1;
    int on_edge = -1;  // 0-edge this side lies on inside its 0-tile, -1 if off the curve
};

struct Tile1 {
    int id = 0;
    Color location = White;
    Color color = White;
    std::vector<Side> sides;
    std::vector<int> corners;  // image 0-vertex of each corner; side j runs corner j -> corner j+1
};

using Point = std::array<double, 2>;
using Polygon = std::vector<Point>;

struct BaseGeometry {
    std::vector<Point> vertices;  // 0-vertex coordinates, shared by both face drawings
    std::vector<Polygon> tiles;   // per tile id, corners in side order, in its face drawing
};

struct SubdivisionRule {
    std::string name;
    int m = 0;
    int degree = 0;
    std::vector<Tile1> tiles;
    std::optional<BaseGeometry> geometry;
    std::vector<std::string> assumptions;

    int size() const { return static_cast<int>(tiles.size()); }
    Color loc(int t) const { return tiles[t].location; }
    Color col(int t) const { return tiles[t].color; }
};

// Level-1 lookup tables derived from a validated rule.
struct RuleIndex {
    int m = 0;
    std::vector<std::vector<int>> edge_side;     // [t][a] side of t whose image is 0-edge a
    std::vector<std::vector<int>> vertex_corner; // [t][i] corner of t whose image is 0-vertex i
    std::vector<std::vector<int>> corner_pos;    // [t][c] 0-vertex the corner sits on, or -1
    std::vector<std::vector<int>> corner_edge;   // [t][c] 0-edge whose interior holds the corner, or -1
    std::vector<std::vector<char>> corner_on_curve;
    std::vector<int> vertex_image;               // f(v_i) as a 0-vertex index
};

struct ValidationReport {
    bool pass = true;
    std::vector<std::string> failures;
    long long rh_sum = 0;  // sum over 1-vertices of (deg - 1)
    int vertex_count = 0;
    void fail(const std::string& s) { pass = false; failures.push_back(s); }
};

SubdivisionRule parse_rule(const std::string& text);
std::string serialize_rule(const SubdivisionRule& rule);
SubdivisionRule load_rule(const std::string& path);

ValidationReport validate_rule(const SubdivisionRule& rule);
// Throws Error("invalid_rule") listing the failed checks.
void require_valid(const SubdivisionRule& rule);
RuleIndex index_rule(const SubdivisionRule& rule);

// lattes-KxK, triangle-2x2, flap-K-F
SubdivisionRule builtin_rule(const std::string& name);
SubdivisionRule lattes_rule(int k);
SubdivisionRule triangle_rule();
SubdivisionRule flap_rule(int k, int flaps);

// The rule of f^q: tiles are the q-words (ids = lexicographic rank).
SubdivisionRule iterate_rule(const SubdivisionRule& rule, int q);

// Polygons of all n-words in lexicographic order, each in the drawing of its location face.
std::vector<Polygon> realize_geometry(const SubdivisionRule& rule, int n, const Caps& caps = {});

}  // namespace tp
