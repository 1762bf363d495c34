#include "tilepress/rule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tilepress/cells.hpp"

namespace tp {

using json = nlohmann::json;

namespace {

Color parse_color(const json& j, const std::string& where) {
    if (!j.is_string()) throw Error("schema", where + ": expected \"white\" or \"black\"");
    auto s = j.get<std::string>();
    if (s == "white") return White;
    if (s == "black") return Black;
    throw Error("schema", where + ": expected \"white\" or \"black\", got \"" + s + "\"");
}

int get_int(const json& obj, const char* key, const std::string& where, bool required = true, int dflt = -1) {
    if (!obj.is_object() || !obj.contains(key)) {
        if (!required) return dflt;
        throw Error("schema", where + "." + key + ": missing field");
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw Error("schema", where + "." + key + ": expected integer");
    return v.get<int>();
}

std::string line_locus(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; col = 1; } else ++col;
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string word_str(const Word& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(w[i]);
    }
    return s;
}

SubdivisionRule parse_rule(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("syntax", "syntax error at " + line_locus(text, e.byte ? e.byte - 1 : 0));
    }
    if (!j.is_object()) throw Error("schema", "rule: expected an object");
    SubdivisionRule r;
    r.name = j.value("name", std::string());
    r.m = get_int(j, "m", "rule");
    r.degree = get_int(j, "degree", "rule");
    if (r.m < 3) throw Error("schema", "rule.m: must be at least 3");
    if (r.degree < 2) throw Error("schema", "rule.degree: must be at least 2");
    if (j.contains("assumptions")) {
        for (const auto& a : j.at("assumptions")) r.assumptions.push_back(a.get<std::string>());
    }
    if (!j.contains("tiles") || !j.at("tiles").is_array()) throw Error("schema", "rule.tiles: missing array");
    const json& jt = j.at("tiles");
    if (jt.empty()) throw Error("no_tiles", "no tiles");
    int count = static_cast<int>(jt.size());
    std::vector<std::optional<Tile1>> slots(count);
    for (int k = 0; k < count; ++k) {
        std::string where = "tiles[" + std::to_string(k) + "]";
        const json& t = jt[k];
        Tile1 tile;
        tile.id = get_int(t, "id", where);
        if (tile.id < 0 || tile.id >= count)
            throw Error("schema", where + ".id: ids must be 0.." + std::to_string(count - 1));
        if (slots[tile.id]) throw Error("duplicate_id", where + ".id: duplicate tile id " + std::to_string(tile.id));
        if (!t.contains("location")) throw Error("schema", where + ".location: missing field");
        if (!t.contains("color")) throw Error("schema", where + ".color: missing field");
        tile.location = parse_color(t.at("location"), where + ".location");
        tile.color = parse_color(t.at("color"), where + ".color");
        if (!t.contains("sides") || !t.at("sides").is_array()) throw Error("schema", where + ".sides: missing array");
        if (!t.contains("corners") || !t.at("corners").is_array()) throw Error("schema", where + ".corners: missing array");
        const json& js = t.at("sides");
        const json& jc = t.at("corners");
        if (static_cast<int>(js.size()) != r.m) throw Error("schema", where + ".sides: expected " + std::to_string(r.m) + " entries");
        if (static_cast<int>(jc.size()) != r.m) throw Error("schema", where + ".corners: expected " + std::to_string(r.m) + " entries");
        for (int s = 0; s < r.m; ++s) {
            std::string sw = where + ".sides[" + std::to_string(s) + "]";
            Side side;
            side.image_edge = get_int(js[s], "image_edge", sw);
            side.nb_tile = get_int(js[s], "neighbor_tile", sw);
            side.nb_side = get_int(js[s], "neighbor_side", sw);
            side.on_edge = get_int(js[s], "on_edge", sw, false, -1);
            if (side.image_edge < 0 || side.image_edge >= r.m) throw Error("side_range", sw + ".image_edge: out of range");
            if (side.nb_tile < 0 || side.nb_tile >= count) throw Error("side_range", sw + ".neighbor_tile: unknown tile");
            if (side.nb_side < 0 || side.nb_side >= r.m) throw Error("side_range", sw + ".neighbor_side: side index out of range");
            if (side.on_edge < -1 || side.on_edge >= r.m) throw Error("side_range", sw + ".on_edge: out of range");
            tile.sides.push_back(side);
        }
        for (int c = 0; c < r.m; ++c) {
            if (!jc[c].is_number_integer()) throw Error("schema", where + ".corners[" + std::to_string(c) + "]: expected integer");
            int v = jc[c].get<int>();
            if (v < 0 || v >= r.m) throw Error("side_range", where + ".corners[" + std::to_string(c) + "]: out of range");
            tile.corners.push_back(v);
        }
        slots[tile.id] = std::move(tile);
    }
    for (auto& s : slots) r.tiles.push_back(std::move(*s));
    if (j.contains("base_geometry")) {
        const json& g = j.at("base_geometry");
        BaseGeometry geo;
        try {
            for (const auto& p : g.at("vertices")) geo.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            for (const auto& poly : g.at("tiles")) {
                Polygon pg;
                for (const auto& p : poly) pg.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                geo.tiles.push_back(pg);
            }
        } catch (const json::exception&) {
            throw Error("schema", "rule.base_geometry: expected {vertices:[[x,y]..], tiles:[[[x,y]..]..]}");
        }
        if (static_cast<int>(geo.vertices.size()) != r.m || static_cast<int>(geo.tiles.size()) != count)
            throw Error("schema", "rule.base_geometry: wrong number of vertices or tiles");
        for (const auto& pg : geo.tiles)
            if (static_cast<int>(pg.size()) != r.m) throw Error("schema", "rule.base_geometry: polygon with wrong corner count");
        r.geometry = std::move(geo);
    }
    return r;
}

std::string serialize_rule(const SubdivisionRule& r) {
    json j;
    j["schema"] = "tilepress-rule/1";
    j["name"] = r.name;
    j["m"] = r.m;
    j["degree"] = r.degree;
    if (!r.assumptions.empty()) j["assumptions"] = r.assumptions;
    json tiles = json::array();
    for (const auto& t : r.tiles) {
        json jt;
        jt["id"] = t.id;
        jt["location"] = color_name(t.location);
        jt["color"] = color_name(t.color);
        json sides = json::array();
        for (const auto& s : t.sides) {
            json js;
            js["image_edge"] = s.image_edge;
            js["neighbor_tile"] = s.nb_tile;
            js["neighbor_side"] = s.nb_side;
            if (s.on_edge >= 0) js["on_edge"] = s.on_edge;
            sides.push_back(js);
        }
        jt["sides"] = sides;
        jt["corners"] = t.corners;
        tiles.push_back(jt);
    }
    j["tiles"] = tiles;
    if (r.geometry) {
        json g;
        json vs = json::array();
        for (const auto& p : r.geometry->vertices) vs.push_back({p[0], p[1]});
        g["vertices"] = vs;
        json ts = json::array();
        for (const auto& pg : r.geometry->tiles) {
            json jp = json::array();
            for (const auto& p : pg) jp.push_back({p[0], p[1]});
            ts.push_back(jp);
        }
        g["tiles"] = ts;
        j["base_geometry"] = g;
    }
    return j.dump(1) + "\n";
}

SubdivisionRule load_rule(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot read rule file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_rule(ss.str());
}

namespace {

// Rotation around the vertex at corner c of tile t: cross side c, land on corner j'+1.
std::pair<int, int> rotate1(const SubdivisionRule& r, int t, int c) {
    const Side& s = r.tiles[t].sides[c];
    return {s.nb_tile, (s.nb_side + 1) % r.m};
}

}  // namespace

ValidationReport validate_rule(const SubdivisionRule& r) {
    ValidationReport rep;
    const int T = r.size(), m = r.m;
    auto tname = [](int t) { return "tile " + std::to_string(t); };
    auto sname = [&](int t, int j) { return tname(t) + " side " + std::to_string(j); };

    int whites = 0, blacks = 0;
    for (const auto& t : r.tiles) (t.color == White ? whites : blacks)++;
    if (whites != r.degree || blacks != r.degree)
        rep.fail("tile-count: " + std::to_string(whites) + " white and " + std::to_string(blacks) +
                 " black tiles, expected " + std::to_string(r.degree) + " each");

    bool glue_ok = true;
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < m; ++j) {
            const Side& s = r.tiles[t].sides[j];
            if (s.nb_tile == t && s.nb_side == j) {
                rep.fail("involution: " + sname(t, j) + " is paired with itself");
                glue_ok = false;
                continue;
            }
            const Side& back = r.tiles[s.nb_tile].sides[s.nb_side];
            if (back.nb_tile != t || back.nb_side != j) {
                rep.fail("involution: " + sname(t, j) + " -> " + sname(s.nb_tile, s.nb_side) + " does not return");
                glue_ok = false;
                continue;
            }
            if (r.tiles[s.nb_tile].color == r.tiles[t].color)
                rep.fail("alternation: " + sname(t, j) + " joins two tiles of the same color");
            if (back.image_edge != s.image_edge)
                rep.fail("edge-image: " + sname(t, j) + " and its neighbor map to different 0-edges");
            const auto& ct = r.tiles[t].corners;
            const auto& cn = r.tiles[s.nb_tile].corners;
            if (ct[j] != cn[(s.nb_side + 1) % m] || ct[(j + 1) % m] != cn[s.nb_side])
                rep.fail("vertex-image: " + sname(t, j) + " endpoints map inconsistently across the gluing");
            bool on_curve = r.tiles[s.nb_tile].location != r.tiles[t].location;
            if (on_curve != (s.on_edge >= 0))
                rep.fail("curve-position: " + sname(t, j) + (on_curve ? " is on C but has no on_edge" : " is off C but has on_edge"));
            else if (on_curve && back.on_edge != s.on_edge)
                rep.fail("curve-position: " + sname(t, j) + " and its neighbor disagree on on_edge");
        }
    }

    for (int t = 0; t < T; ++t) {
        const auto& tile = r.tiles[t];
        int step = tile.color == White ? 1 : m - 1;
        std::vector<int> hit(m, 0);
        for (int j = 0; j < m; ++j) {
            int a = tile.corners[j], b = tile.corners[(j + 1) % m];
            int e = tile.sides[j].image_edge;
            hit[e]++;
            bool ok = b == (a + step) % m && e == (tile.color == White ? a : b);
            if (!ok) {
                rep.fail("cellularity: " + sname(t, j) + " image edge e" + std::to_string(e) + " does not run from v" +
                         std::to_string(a) + " to v" + std::to_string(b) + " with the orientation of its color");
            }
        }
        for (int e = 0; e < m; ++e)
            if (hit[e] != 1) {
                rep.fail("cellularity: " + tname(t) + " boundary hits 0-edge e" + std::to_string(e) + " " +
                         std::to_string(hit[e]) + " times");
                break;
            }
    }
    if (!glue_ok) return rep;

    // Flowers and the Euler characteristic of the glued sphere.
    std::vector<std::vector<int>> seen(T, std::vector<int>(m, -1));
    int V = 0;
    long long rh = 0;
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < m; ++c) {
            if (seen[t][c] >= 0) continue;
            int size = 0, ct = t, cc = c;
            bool alternate = true;
            do {
                seen[ct][cc] = V;
                auto [nt, nc] = rotate1(r, ct, cc);
                if (r.tiles[nt].color == r.tiles[ct].color) alternate = false;
                ct = nt;
                cc = nc;
                ++size;
            } while ((ct != t || cc != c) && size <= 2 * T * m);
            if (size % 2 != 0 || !alternate)
                rep.fail("flower: vertex at " + tname(t) + " corner " + std::to_string(c) + " has odd or non-alternating flower");
            rh += size / 2 - 1;
            ++V;
        }
    rep.vertex_count = V;
    rep.rh_sum = rh;
    long long E = static_cast<long long>(T) * m / 2;
    if (V - E + T != 2)
        rep.fail("euler: V - E + F = " + std::to_string(V - E + T) + ", expected 2 for a sphere");
    if (rh != 2LL * r.degree - 2)
        rep.fail("riemann-hurwitz: sum of (deg-1) = " + std::to_string(rh) + ", expected " + std::to_string(2 * r.degree - 2));

    // Connectivity of the tile adjacency graph.
    std::vector<char> reach(T, 0);
    std::vector<int> stack{0};
    reach[0] = 1;
    while (!stack.empty()) {
        int t = stack.back();
        stack.pop_back();
        for (const auto& s : r.tiles[t].sides)
            if (!reach[s.nb_tile]) { reach[s.nb_tile] = 1; stack.push_back(s.nb_tile); }
    }
    if (std::count(reach.begin(), reach.end(), 1) != T) rep.fail("connectivity: tile adjacency graph is disconnected");

    // Each 0-tile must be a disk: Euler characteristic 1 over same-location fans.
    for (int face = 0; face < 2; ++face) {
        long long F = 0, sides_total = 0, curve_sides = 0;
        for (int t = 0; t < T; ++t) {
            if (r.tiles[t].location != face) continue;
            ++F;
            sides_total += m;
            for (const auto& s : r.tiles[t].sides)
                if (r.tiles[s.nb_tile].location != face) ++curve_sides;
        }
        if (F == 0) {
            rep.fail("disk: 0-tile " + std::string(color_name(face)) + " contains no 1-tiles");
            continue;
        }
        long long Ef = (sides_total + curve_sides) / 2;
        std::set<int> fans;
        // A fan is a maximal run of same-location tiles around a vertex; label by its first corner.
        std::vector<std::vector<char>> fseen(T, std::vector<char>(m, 0));
        long long Vf = 0;
        for (int t = 0; t < T; ++t) {
            if (r.tiles[t].location != face) continue;
            for (int c = 0; c < m; ++c) {
                if (fseen[t][c]) continue;
                ++Vf;
                // walk both directions while staying in the face
                int ct = t, cc = c;
                int guard = 0;
                while (!fseen[ct][cc] && guard++ < 4 * T * m) {
                    fseen[ct][cc] = 1;
                    const Side& s = r.tiles[ct].sides[cc];
                    if (r.tiles[s.nb_tile].location != face) break;
                    int nt = s.nb_tile, nc = (s.nb_side + 1) % m;
                    ct = nt;
                    cc = nc;
                }
                ct = t;
                cc = c;
                guard = 0;
                while (guard++ < 4 * T * m) {
                    // reverse rotation: cross side cc-1
                    int ps = (cc + m - 1) % m;
                    const Side& s = r.tiles[ct].sides[ps];
                    if (r.tiles[s.nb_tile].location != face) break;
                    int nt = s.nb_tile, nc = s.nb_side;
                    if (fseen[nt][nc]) break;
                    fseen[nt][nc] = 1;
                    ct = nt;
                    cc = nc;
                }
            }
        }
        if (Vf - Ef + F != 1)
            rep.fail("disk: 0-tile " + std::string(color_name(face)) + " has Euler characteristic " +
                     std::to_string(Vf - Ef + F) + ", expected 1");
    }

    // 0-vertex positions: each v_i must be the meeting point of curve sides on e_{i-1} and e_i.
    if (rep.pass) {
        std::vector<int> found(m, 0);
        std::vector<char> done(static_cast<std::size_t>(V), 0);
        for (int t = 0; t < T; ++t)
            for (int c = 0; c < m; ++c) {
                int v = seen[t][c];
                if (done[v]) continue;
                done[v] = 1;
                std::set<int> edges;
                int ct = t, cc = c;
                do {
                    const Side& s = r.tiles[ct].sides[cc];
                    if (s.on_edge >= 0) edges.insert(s.on_edge);
                    auto [nt, nc] = rotate1(r, ct, cc);
                    ct = nt;
                    cc = nc;
                } while (ct != t || cc != c);
                if (edges.size() > 2) rep.fail("curve-position: a vertex touches more than two 0-edges");
                if (edges.size() == 2) {
                    int a = *edges.begin(), b = *edges.rbegin();
                    int i = (b == a + 1) ? b : (a == 0 && b == m - 1 ? 0 : -1);
                    if (i < 0) rep.fail("curve-position: vertex between non-consecutive 0-edges");
                    else found[i]++;
                }
            }
        for (int i = 0; i < m; ++i)
            if (found[i] != 1)
                rep.fail("curve-position: 0-vertex v" + std::to_string(i) + " located " + std::to_string(found[i]) + " times");
    }
    return rep;
}

void require_valid(const SubdivisionRule& rule) {
    auto rep = validate_rule(rule);
    if (!rep.pass) {
        std::string msg = "rule failed validation:";
        for (const auto& f : rep.failures) msg += " [" + f + "]";
        throw Error("invalid_rule", msg);
    }
}

RuleIndex index_rule(const SubdivisionRule& r) {
    RuleIndex ix;
    const int T = r.size(), m = r.m;
    ix.m = m;
    ix.edge_side.assign(T, std::vector<int>(m, -1));
    ix.vertex_corner.assign(T, std::vector<int>(m, -1));
    ix.corner_pos.assign(T, std::vector<int>(m, -1));
    ix.corner_edge.assign(T, std::vector<int>(m, -1));
    ix.corner_on_curve.assign(T, std::vector<char>(m, 0));
    ix.vertex_image.assign(m, -1);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < m; ++j) {
            ix.edge_side[t][r.tiles[t].sides[j].image_edge] = j;
            ix.vertex_corner[t][r.tiles[t].corners[j]] = j;
        }
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < m; ++c) {
            std::set<int> edges;
            bool mixed = false;
            int ct = t, cc = c;
            do {
                const Side& s = r.tiles[ct].sides[cc];
                if (s.on_edge >= 0) edges.insert(s.on_edge);
                if (r.tiles[s.nb_tile].location != r.tiles[t].location) mixed = true;
                auto [nt, nc] = rotate1(r, ct, cc);
                ct = nt;
                cc = nc;
            } while (ct != t || cc != c);
            ix.corner_on_curve[t][c] = mixed || !edges.empty();
            if (edges.size() == 2) {
                int a = *edges.begin(), b = *edges.rbegin();
                ix.corner_pos[t][c] = (b == a + 1) ? b : 0;
            } else if (edges.size() == 1) {
                ix.corner_edge[t][c] = *edges.begin();
            }
        }
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < m; ++c)
            if (ix.corner_pos[t][c] >= 0) ix.vertex_image[ix.corner_pos[t][c]] = r.tiles[t].corners[c];
    return ix;
}

// ---------------------------------------------------------------------------
// Built-in rules

SubdivisionRule lattes_rule(int k) {
    if (k < 2) throw Error("bad_param", "lattes rule needs k >= 2");
    SubdivisionRule r;
    r.name = "lattes-" + std::to_string(k) + "x" + std::to_string(k);
    r.m = 4;
    r.degree = k * k;
    const int K = k * k;
    auto vimg = [](int x, int y) {
        static const int tab[2][2] = {{0, 3}, {1, 2}};  // [x%2][y%2]
        return tab[x % 2][y % 2];
    };
    auto id = [&](int face, int a, int b) { return face * K + b * k + a; };
    BaseGeometry geo;
    geo.vertices = {Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}};
    for (int face = 0; face < 2; ++face)
        for (int b = 0; b < k; ++b)
            for (int a = 0; a < k; ++a) {
                Tile1 t;
                t.id = id(face, a, b);
                t.location = face == 0 ? White : Black;
                bool even = (a + b) % 2 == 0;
                t.color = (face == 0) == even ? White : Black;
                // corner points, in positive order of the face
                std::vector<std::array<int, 2>> pts;
                if (face == 0) pts = {{a, b}, {a + 1, b}, {a + 1, b + 1}, {a, b + 1}};
                else pts = {{a, b}, {a, b + 1}, {a + 1, b + 1}, {a + 1, b}};
                Polygon pg;
                for (auto& p : pts) {
                    t.corners.push_back(vimg(p[0], p[1]));
                    pg.push_back({double(p[0]) / k, double(p[1]) / k});
                }
                geo.tiles.push_back(pg);
                // side directions: white face bottom,right,top,left; black face left,top,right,bottom
                static const int dir_w[4] = {0, 1, 2, 3};
                static const int dir_b[4] = {3, 2, 1, 0};
                for (int j = 0; j < 4; ++j) {
                    int dir = face == 0 ? dir_w[j] : dir_b[j];
                    Side s;
                    int u = t.corners[j], v = t.corners[(j + 1) % 4];
                    s.image_edge = (v == (u + 1) % 4) ? u : v;
                    int na = a, nb = b;
                    if (dir == 0) nb--;
                    if (dir == 1) na++;
                    if (dir == 2) nb++;
                    if (dir == 3) na--;
                    int nface = face, ndir = (dir + 2) % 4;
                    if (na < 0 || nb < 0 || na >= k || nb >= k) {
                        nface = 1 - face;
                        na = a;
                        nb = b;
                        ndir = dir;
                        s.on_edge = dir;  // bottom e0, right e1, top e2, left e3
                    }
                    s.nb_tile = id(nface, na, nb);
                    const int* nd = nface == 0 ? dir_w : dir_b;
                    s.nb_side = static_cast<int>(std::find(nd, nd + 4, ndir) - nd);
                    t.sides.push_back(s);
                }
                r.tiles.push_back(t);
            }
    std::sort(r.tiles.begin(), r.tiles.end(), [](const Tile1& x, const Tile1& y) { return x.id < y.id; });
    r.geometry = geo;
    r.assumptions.push_back("expanding: Lattes-type map, expanding");
    return r;
}

SubdivisionRule triangle_rule() {
    SubdivisionRule r;
    r.name = "triangle-2x2";
    r.m = 3;
    r.degree = 4;
    // Points: v0 v1 v2 and midpoints m01 m12 m20 (indices 3,4,5), with their images.
    const double h = std::sqrt(3.0) / 2;
    const Point P[6] = {{0, 0}, {1, 0}, {0.5, h}, {0.5, 0}, {0.75, h / 2}, {0.25, h / 2}};
    const int img[6] = {0, 2, 1, 1, 0, 2};
    // Triangles counter-clockwise in the white face: corner pieces keep the face color.
    const int tri[4][3] = {{0, 3, 5}, {3, 1, 4}, {5, 4, 2}, {3, 4, 5}};
    // The 0-edge each boundary segment lies on, keyed by unordered point pair.
    auto boundary = [](int p, int q) {
        std::pair<int, int> key(std::minmax(p, q));
        if (key == std::pair<int, int>{0, 3} || key == std::pair<int, int>{1, 3}) return 0;
        if (key == std::pair<int, int>{1, 4} || key == std::pair<int, int>{2, 4}) return 1;
        if (key == std::pair<int, int>{2, 5} || key == std::pair<int, int>{0, 5}) return 2;
        return -1;
    };
    BaseGeometry geo;
    geo.vertices = {P[0], P[1], P[2]};
    std::vector<std::vector<int>> pts(8);
    for (int face = 0; face < 2; ++face)
        for (int q = 0; q < 4; ++q) {
            int id = face * 4 + q;
            if (face == 0) pts[id] = {tri[q][0], tri[q][1], tri[q][2]};
            else pts[id] = {tri[q][0], tri[q][2], tri[q][1]};
        }
    for (int id = 0; id < 8; ++id) {
        Tile1 t;
        t.id = id;
        t.location = id < 4 ? White : Black;
        bool middle = id % 4 == 3;
        t.color = middle ? other(t.location) : t.location;
        Polygon pg;
        for (int p : pts[id]) {
            t.corners.push_back(img[p]);
            pg.push_back(P[p]);
        }
        geo.tiles.push_back(pg);
        for (int j = 0; j < 3; ++j) {
            int p = pts[id][j], q = pts[id][(j + 1) % 3];
            Side s;
            int u = t.corners[j], v = t.corners[(j + 1) % 3];
            s.image_edge = (v == (u + 1) % 3) ? u : v;
            int e = boundary(p, q);
            int nface = t.location;
            if (e >= 0) {
                nface = 1 - t.location;
                s.on_edge = e;
            }
            for (int o = nface * 4; o < nface * 4 + 4; ++o) {
                if (o == id) continue;
                for (int jj = 0; jj < 3; ++jj)
                    if (pts[o][jj] == q && pts[o][(jj + 1) % 3] == p) {
                        s.nb_tile = o;
                        s.nb_side = jj;
                    }
            }
            t.sides.push_back(s);
        }
        r.tiles.push_back(t);
    }
    r.geometry = geo;
    r.assumptions.push_back("expanding: assumed (degree-3 midpoints, post-critical set = 0-vertices)");
    return r;
}

SubdivisionRule flap_rule(int k, int flaps) {
    if (k < 2) throw Error("bad_param", "flap rule needs k >= 2");
    if (flaps < 1) throw Error("bad_param", "flap rule needs at least one flap");
    SubdivisionRule r = lattes_rule(k);
    r.name = "flap-" + std::to_string(k) + "-" + std::to_string(flaps);
    r.degree = k * k + flaps;
    r.geometry.reset();
    r.assumptions = {"expanding: assumed, not decided combinatorially",
                     "p = v0 is a fixed critical vertex of local degree " + std::to_string(1 + flaps)};
    const int K = k * k;
    const int A = 0;      // white face square (0,0): bottom side 0 runs p -> q
    const int B = K;      // black face square (0,0): bottom side 3 runs q -> p
    const int Bside = 3;
    // Flap i: Q1 (black) corners [q, p, a, b], Q2 (white) corners [p, q, b, a].
    auto q1 = [&](int i) { return 2 * K + 2 * i; };
    auto q2 = [&](int i) { return 2 * K + 2 * i + 1; };
    for (int i = 0; i < flaps; ++i) {
        Tile1 t1, t2;
        t1.id = q1(i);
        t2.id = q2(i);
        t1.location = t2.location = Black;
        t1.color = Black;
        t2.color = White;
        t1.corners = {1, 0, 3, 2};
        t2.corners = {0, 1, 2, 3};
        const int e1[4] = {0, 3, 2, 1};
        const int e2[4] = {0, 1, 2, 3};
        for (int j = 0; j < 4; ++j) {
            Side s1, s2;
            s1.image_edge = e1[j];
            s2.image_edge = e2[j];
            t1.sides.push_back(s1);
            t2.sides.push_back(s2);
        }
        // glued along s1-s3, s2-s2, s3-s1
        t1.sides[1].nb_tile = t2.id; t1.sides[1].nb_side = 3;
        t1.sides[2].nb_tile = t2.id; t1.sides[2].nb_side = 2;
        t1.sides[3].nb_tile = t2.id; t1.sides[3].nb_side = 1;
        t2.sides[1].nb_tile = t1.id; t2.sides[1].nb_side = 3;
        t2.sides[2].nb_tile = t1.id; t2.sides[2].nb_side = 2;
        t2.sides[3].nb_tile = t1.id; t2.sides[3].nb_side = 1;
        r.tiles.push_back(t1);
        r.tiles.push_back(t2);
    }
    // Chain A | Q1 Q2 | ... | B along the cut edge; the curve follows A's side.
    auto glue = [&](int t, int j, int u, int i) {
        r.tiles[t].sides[j].nb_tile = u;
        r.tiles[t].sides[j].nb_side = i;
        r.tiles[u].sides[i].nb_tile = t;
        r.tiles[u].sides[i].nb_side = j;
    };
    glue(A, 0, q1(0), 0);
    r.tiles[q1(0)].sides[0].on_edge = 0;
    for (int i = 0; i + 1 < flaps; ++i) glue(q2(i), 0, q1(i + 1), 0);
    glue(q2(flaps - 1), 0, B, Bside);
    r.tiles[B].sides[Bside].on_edge = -1;
    return r;
}

SubdivisionRule builtin_rule(const std::string& name) {
    auto num = [&](const std::string& s) {
        if (s.empty() || s.size() > 4 || !std::all_of(s.begin(), s.end(), ::isdigit))
            throw Error("unknown_rule", "unknown builtin rule '" + name + "'");
        return std::stoi(s);
    };
    if (name == "triangle-2x2") return triangle_rule();
    if (name.rfind("lattes-", 0) == 0) {
        std::string rest = name.substr(7);
        auto x = rest.find('x');
        if (x == std::string::npos) throw Error("unknown_rule", "unknown builtin rule '" + name + "'");
        int a = num(rest.substr(0, x)), b = num(rest.substr(x + 1));
        if (a != b) throw Error("unknown_rule", "lattes rules are square: '" + name + "'");
        return lattes_rule(a);
    }
    if (name.rfind("flap-", 0) == 0) {
        std::string rest = name.substr(5);
        auto d = rest.find('-');
        if (d == std::string::npos) throw Error("unknown_rule", "unknown builtin rule '" + name + "'");
        return flap_rule(num(rest.substr(0, d)), num(rest.substr(d + 1)));
    }
    throw Error("unknown_rule", "unknown builtin rule '" + name + "'");
}

// ---------------------------------------------------------------------------

SubdivisionRule iterate_rule(const SubdivisionRule& rule, int q) {
    if (q < 1) throw Error("bad_param", "iterate needs q >= 1");
    if (q == 1) return rule;
    Cells cells(rule);
    const int m = rule.m;
    std::vector<Word> words = enumerate_tiles(cells, q, {}, Caps{});
    SubdivisionRule r;
    r.name = rule.name + "^" + std::to_string(q);
    r.m = m;
    std::uint64_t d = 1;
    for (int i = 0; i < q; ++i) d *= static_cast<std::uint64_t>(rule.degree);
    if (d > 30000) throw Error("cap", "iterate too large");
    r.degree = static_cast<int>(d);
    r.assumptions = rule.assumptions;
    const auto& ix = cells.index();
    // curve position of side j of a word: recurse into the prefix while the side stays on C
    std::function<int(const Word&, int, int)> position = [&](const Word& w, int n, int j) -> int {
        int t = w[n - 1];
        const Side& s = rule.tiles[t].sides[j];
        if (n == 1) return s.on_edge;
        if (rule.tiles[s.nb_tile].location == rule.tiles[t].location) return -1;
        int k = ix.edge_side[w[n - 2]][s.on_edge];
        return position(w, n - 1, k);
    };
    for (std::size_t id = 0; id < words.size(); ++id) {
        const Word& w = words[id];
        Tile1 t;
        t.id = static_cast<int>(id);
        t.location = rule.loc(w.front());
        t.color = rule.col(w.back());
        t.corners = rule.tiles[w.back()].corners;
        for (int j = 0; j < m; ++j) {
            Side s;
            s.image_edge = rule.tiles[w.back()].sides[j].image_edge;
            Word nw = w;
            s.nb_side = cells.neighbor_inplace(nw.data(), q, j);
            s.nb_tile = static_cast<int>(cells.rank(nw.data(), q));
            s.on_edge = position(w, q, j);
            t.sides.push_back(s);
        }
        r.tiles.push_back(t);
    }
    return r;
}

std::vector<Polygon> realize_geometry(const SubdivisionRule& rule, int n, const Caps& caps) {
    if (!rule.geometry) throw Error("no_geometry", "rule '" + rule.name + "' has no declared base geometry");
    if (n < 1) throw Error("bad_param", "depth must be at least 1");
    Cells cells(rule);
    if (cells.count_words(n) > caps.words) throw Error("cap", "depth " + std::to_string(n) + " exceeds the enumeration cap");
    const int m = rule.m;
    if (m != 3 && m != 4) throw Error("no_geometry", "geometry supported for triangles and quadrilaterals only");
    const auto& V = rule.geometry->vertices;
    // Map a point of the 0-tile drawing onto a polygon whose corner k carries 0-vertex img[k].
    auto transfer = [&](const Polygon& target, const std::vector<int>& img, const Point& p) {
        std::vector<Point> A(m);
        for (int k = 0; k < m; ++k) A[img[k]] = target[k];
        if (m == 3) {
            double x0 = V[0][0], y0 = V[0][1];
            double ax = V[1][0] - x0, ay = V[1][1] - y0, bx = V[2][0] - x0, by = V[2][1] - y0;
            double det = ax * by - ay * bx;
            double px = p[0] - x0, py = p[1] - y0;
            double u = (px * by - py * bx) / det, v = (ax * py - ay * px) / det;
            return Point{A[0][0] + u * (A[1][0] - A[0][0]) + v * (A[2][0] - A[0][0]),
                         A[0][1] + u * (A[1][1] - A[0][1]) + v * (A[2][1] - A[0][1])};
        }
        double x = (p[0] - V[0][0]) / (V[1][0] - V[0][0]);
        double y = (p[1] - V[0][1]) / (V[3][1] - V[0][1]);
        Point out{0, 0};
        double w[4] = {(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y};
        for (int k = 0; k < 4; ++k) {
            out[0] += w[k] * A[k][0];
            out[1] += w[k] * A[k][1];
        }
        return out;
    };
    std::vector<Polygon> out;
    std::vector<Polygon> stack(n + 1);
    cells.for_each_word(n, {}, [&](const Word& w) {
        Polygon cur = rule.geometry->tiles[w[0]];
        for (int i = 1; i < n; ++i) {
            const Polygon& base = rule.geometry->tiles[w[i]];
            Polygon next(m);
            for (int k = 0; k < m; ++k) next[k] = transfer(cur, rule.tiles[w[i - 1]].corners, base[k]);
            cur = std::move(next);
        }
        out.push_back(std::move(cur));
        return true;
    });
    return out;
}

}  // namespace tp
