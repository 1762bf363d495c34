#pragma once

#include <array>
#include <string>
#include <vector>

#include "tilepress/subsystem.hpp"

namespace tp {

struct Overlay {
    enum Kind { None, Sub, Pairs, Flower } kind = None;
    Subsystem sub;       // Sub: highlighted words have every letter in the subsystem
    int e0 = 0;          // Pairs: distinguished 0-edge
    int vertex_tile = 0; // Flower: 1-tile and corner naming the 1-vertex
    int vertex_corner = 0;
};

// Parses "none", "subsystem", "pairs", "flower"; the CLI fills the remaining fields.
Overlay::Kind parse_overlay(const std::string& s);

struct SvgScene {
    int depth = 0;
    std::array<std::string, 2> svg;        // one document per face
    std::array<int, 2> cells{};            // polygons drawn per face
    std::array<int, 2> highlighted{};      // polygons in the overlay class per face
    int groups = 0;                        // pairs drawn (pairs overlay)
};

SvgScene render_svg(const Cells& cells, int depth, const Overlay& overlay, const Caps& caps = {});

}  // namespace tp
