#include "tilepress/render.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace tp {

Overlay::Kind parse_overlay(const std::string& s) {
    if (s == "none") return Overlay::None;
    if (s == "subsystem") return Overlay::Sub;
    if (s == "pairs") return Overlay::Pairs;
    if (s == "flower") return Overlay::Flower;
    throw Error("bad_param", "unknown overlay '" + s + "'");
}

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

// Distinct fills for pair groups, cycled.
const char* kPalette[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0",
                          "#f032e6", "#bcf60c", "#008080", "#9a6324", "#800000", "#808000"};

}  // namespace

SvgScene render_svg(const Cells& cells, int depth, const Overlay& overlay, const Caps& caps) {
    const auto& rule = cells.rule();
    std::vector<Polygon> polys = realize_geometry(rule, depth, caps);
    std::vector<Word> words;
    cells.for_each_word(depth, {}, [&](const Word& w) {
        words.push_back(w);
        return true;
    });

    std::map<Word, int> group;  // pairs overlay: word -> pair index
    std::set<Word> flower;
    if (overlay.kind == Overlay::Pairs) {
        int g = 0;
        for (const Pair& p : enumerate_pairs(cells, depth, overlay.e0, caps)) {
            group[p.white] = g;
            group[p.black] = g++;
        }
    } else if (overlay.kind == Overlay::Flower) {
        if (overlay.vertex_tile < 0 || overlay.vertex_tile >= cells.tiles() || overlay.vertex_corner < 0 ||
            overlay.vertex_corner >= cells.m())
            throw Error("bad_param", "flower vertex out of range");
        auto [w, c] = cells.word_at_vertex(overlay.vertex_tile, overlay.vertex_corner, depth);
        for (const auto& [fw, fc] : cells.flower(w, c)) {
            (void)fc;
            flower.insert(fw);
        }
    }

    const auto& V = rule.geometry->vertices;
    double x0 = V[0][0], x1 = V[0][0], y0 = V[0][1], y1 = V[0][1];
    for (const auto& p : V) {
        x0 = std::min(x0, p[0]), x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]), y1 = std::max(y1, p[1]);
    }
    const double size = 480, margin = 10, legend = 60;
    const double scale = size / std::max(x1 - x0, y1 - y0);

    SvgScene scene;
    scene.depth = depth;
    scene.groups = static_cast<int>(group.size() / 2);
    for (int face = 0; face < 2; ++face) {
        std::ostringstream s;
        s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(size + 2 * margin) << "\" height=\""
          << num(size + 2 * margin + legend) << "\">\n";
        s << "<style>.white{fill:#ffffff}.black{fill:#404040}.in{fill:#2b83ba}.out{fill:#f0f0f0}"
             ".flower{fill:#d7191c}polygon{stroke:#888888;stroke-width:0.5}</style>\n";
        s << "<g id=\"" << color_name(face) << "-face\">\n";
        for (std::size_t i = 0; i < words.size(); ++i) {
            const Word& w = words[i];
            if (rule.loc(w[0]) != face) continue;
            ++scene.cells[face];
            std::string cls = color_name(rule.col(w.back()));
            std::string fill;
            bool hi = false;
            switch (overlay.kind) {
                case Overlay::Sub:
                    hi = std::all_of(w.begin(), w.end(), [&](int t) { return overlay.sub.has(t); });
                    cls = hi ? "in" : "out";
                    break;
                case Overlay::Pairs: {
                    auto it = group.find(w);
                    if (it != group.end()) {
                        hi = true;
                        fill = kPalette[it->second % 12];
                    }
                    break;
                }
                case Overlay::Flower:
                    hi = flower.count(w) > 0;
                    if (hi) cls = "flower";
                    break;
                default:
                    break;
            }
            if (hi) ++scene.highlighted[face];
            s << "<polygon class=\"" << cls << "\"";
            if (!fill.empty()) s << " style=\"fill:" << fill << "\"";
            s << " data-word=\"" << word_str(w) << "\" points=\"";
            for (std::size_t k = 0; k < polys[i].size(); ++k) {
                const Point& p = polys[i][k];
                s << (k ? " " : "") << num(margin + (p[0] - x0) * scale) << "," << num(margin + (y1 - p[1]) * scale);
            }
            s << "\"/>\n";
        }
        s << "</g>\n";
        static const char* names[] = {"color", "subsystem", "pairs", "flower"};
        s << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
        s << "<text x=\"" << num(margin) << "\" y=\"" << num(size + 2 * margin + 18) << "\">" << rule.name << " depth "
          << depth << ", " << color_name(face) << " face, overlay " << names[overlay.kind] << "</text>\n";
        s << "<text x=\"" << num(margin) << "\" y=\"" << num(size + 2 * margin + 36) << "\">cells " << scene.cells[face]
          << ", highlighted " << scene.highlighted[face] << "</text>\n";
        s << "</g>\n</svg>\n";
        scene.svg[face] = s.str();
    }
    return scene;
}

}  // namespace tp
