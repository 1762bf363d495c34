#include "tilepress/cells.hpp"

#include <algorithm>
#include <limits>

namespace tp {

namespace {

constexpr int kRankDepth = 72;

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a + b;
    return s < a ? std::numeric_limits<std::uint64_t>::max() : s;
}

}  // namespace

Cells::Cells(const SubdivisionRule& rule) : rule_(rule) {
    require_valid(rule_);
    idx_ = index_rule(rule_);
    const int T = rule_.size();
    located_.assign(kRankDepth + 1, {0, 0});
    located_[0] = {1, 1};
    for (int k = 1; k <= kRankDepth; ++k)
        for (int t = 0; t < T; ++t)
            located_[k][rule_.loc(t)] = sat_add(located_[k][rule_.loc(t)], located_[k - 1][rule_.col(t)]);
    off0_.assign(kRankDepth, std::vector<std::uint64_t>(T, 0));
    offl_.assign(kRankDepth, std::vector<std::uint64_t>(T, 0));
    for (int k = 0; k < kRankDepth; ++k) {
        std::uint64_t all = 0, byloc[2] = {0, 0};
        for (int t = 0; t < T; ++t) {
            off0_[k][t] = all;
            offl_[k][t] = byloc[rule_.loc(t)];
            std::uint64_t c = located_[k][rule_.col(t)];
            all = sat_add(all, c);
            byloc[rule_.loc(t)] = sat_add(byloc[rule_.loc(t)], c);
        }
    }
}

int Cells::neighbor_inplace(int* w, int n, int j) const {
    int t = w[n - 1];
    const Side& s = rule_.tiles[t].sides[j];
    if (n > 1 && rule_.loc(s.nb_tile) != rule_.loc(t)) {
        // the side lies on the prefix's boundary: move the prefix across first
        neighbor_inplace(w, n - 1, idx_.edge_side[w[n - 2]][s.on_edge]);
    }
    w[n - 1] = s.nb_tile;
    return s.nb_side;
}

std::pair<Word, int> Cells::neighbor(const Word& w, int j) const {
    Word out = w;
    int side = neighbor_inplace(out.data(), static_cast<int>(out.size()), j);
    return {std::move(out), side};
}

bool Cells::side_on_curve(const int* w, int n, int j) const {
    while (true) {
        int t = w[n - 1];
        const Side& s = rule_.tiles[t].sides[j];
        if (rule_.loc(s.nb_tile) == rule_.loc(t)) return false;
        if (n == 1) return true;
        j = idx_.edge_side[w[n - 2]][s.on_edge];
        --n;
    }
}

bool Cells::corner_on_curve(const int* w, int n, int c) const {
    while (true) {
        int t = w[n - 1];
        if (!idx_.corner_on_curve[t][c]) return false;
        if (n == 1) return true;
        int v = idx_.corner_pos[t][c];
        if (v >= 0) {
            c = idx_.vertex_corner[w[n - 2]][v];
            --n;
            continue;
        }
        return side_on_curve(w, n - 1, idx_.edge_side[w[n - 2]][idx_.corner_edge[t][c]]);
    }
}

int Cells::corner_vertex(const int* w, int n, int c) const {
    while (true) {
        int v = idx_.corner_pos[w[n - 1]][c];
        if (v < 0 || n == 1) return v;
        c = idx_.vertex_corner[w[n - 2]][v];
        --n;
    }
}

InteriorResult Cells::interior_test(const Word& w) const {
    InteriorResult r;
    const int n = static_cast<int>(w.size());
    for (int j = 0; j < m(); ++j)
        if (side_on_curve(w.data(), n, j)) r.sides_on_curve.push_back(j);
    r.touches_curve = !r.sides_on_curve.empty();
    for (int c = 0; c < m() && !r.touches_curve; ++c)
        if (corner_on_curve(w.data(), n, c)) r.touches_curve = true;
    return r;
}

bool Cells::interior(const Word& w) const {
    const int n = static_cast<int>(w.size());
    for (int c = 0; c < m(); ++c)
        if (corner_on_curve(w.data(), n, c)) return false;
    for (int j = 0; j < m(); ++j)
        if (side_on_curve(w.data(), n, j)) return false;
    return true;
}

std::vector<std::pair<Word, int>> Cells::flower(const Word& w, int c) const {
    std::vector<std::pair<Word, int>> out;
    Word cur = w;
    int cc = c;
    const int n = static_cast<int>(w.size());
    do {
        out.emplace_back(cur, cc);
        int j = neighbor_inplace(cur.data(), n, cc);
        cc = (j + 1) % m();
    } while (cc != c || cur != w);
    return out;
}

std::pair<Word, int> Cells::word_at_vertex(int t, int c, int n) const {
    Word w{t};
    int corner = c;
    for (int i = 1; i < n; ++i) {
        int v = rule_.tiles[w.back()].corners[corner];
        Color need = rule_.col(w.back());
        int found = -1;
        int fc = -1;
        for (int u = 0; u < tiles() && found < 0; ++u) {
            if (rule_.loc(u) != need) continue;
            for (int k = 0; k < m(); ++k)
                if (idx_.corner_pos[u][k] == v) { found = u; fc = k; }
        }
        if (found < 0) throw Error("internal", "no tile at a 0-vertex");
        w.push_back(found);
        corner = fc;
    }
    return {w, corner};
}

std::uint64_t Cells::count_located(int n, int c) const {
    if (n > kRankDepth) return std::numeric_limits<std::uint64_t>::max();
    return located_[n][c];
}

std::uint64_t Cells::count_words(int n) const {
    return sat_add(count_located(n, White), count_located(n, Black));
}

std::uint64_t Cells::rank(const int* w, int n) const {
    std::uint64_t r = off0_[n - 1][w[0]];
    for (int i = 1; i < n; ++i) r += offl_[n - 1 - i][w[i]];
    return r;
}

void Cells::for_each_word(int n, const WordFilter& f, const std::function<bool(const Word&)>& fn) const {
    if (n < 1) throw Error("bad_param", "word length must be at least 1");
    const int T = tiles();
    std::vector<int> by_loc[2];
    for (int t = 0; t < T; ++t) by_loc[rule_.loc(t)].push_back(t);
    std::vector<int> first;
    for (int t = 0; t < T; ++t)
        if (f.location < 0 || rule_.loc(t) == f.location) first.push_back(t);
    Word w(n);
    std::vector<std::size_t> pos(n, 0);
    int depth = 0;
    pos[0] = 0;
    while (depth >= 0) {
        const std::vector<int>& choices = depth == 0 ? first : by_loc[rule_.col(w[depth - 1])];
        if (pos[depth] >= choices.size()) {
            --depth;
            if (depth >= 0) ++pos[depth];
            continue;
        }
        w[depth] = choices[pos[depth]];
        if (depth == n - 1) {
            if (f.color < 0 || rule_.col(w[depth]) == f.color)
                if (!fn(w)) return;
            ++pos[depth];
        } else {
            ++depth;
            pos[depth] = 0;
        }
    }
}

std::vector<Word> enumerate_tiles(const Cells& cells, int n, const WordFilter& f, const Caps& caps) {
    if (cells.count_words(n) > caps.words)
        throw Error("cap", "level " + std::to_string(n) + " exceeds the enumeration cap of " + std::to_string(caps.words) + " words");
    std::vector<Word> out;
    cells.for_each_word(n, f, [&](const Word& w) {
        out.push_back(w);
        return true;
    });
    return out;
}

Skeleton skeleton(const Cells& cells, int n, const Caps& caps, bool materialize) {
    std::uint64_t total = cells.count_words(n);
    if (total > caps.words)
        throw Error("cap", "level " + std::to_string(n) + " exceeds the enumeration cap of " + std::to_string(caps.words) + " words");
    const int m = cells.m();
    const auto& rule = cells.rule();
    Skeleton sk;
    sk.tiles = total;
    std::vector<char> visited(total * m, 0);
    std::uint64_t r = 0;
    Word nw(n), back(n);
    cells.for_each_word(n, {}, [&](const Word& w) {
        for (int j = 0; j < m; ++j) {
            std::copy(w.begin(), w.end(), nw.begin());
            int jj = cells.neighbor_inplace(nw.data(), n, j);
            std::uint64_t r2 = cells.rank(nw.data(), n);
            back = nw;
            int jb = cells.neighbor_inplace(back.data(), n, jj);
            if (jb != j || back != w) sk.involution = false;
            bool on_curve = rule.loc(nw[0]) != rule.loc(w[0]);
            if (on_curve != cells.side_on_curve(w.data(), n, j)) sk.curve_flag_ok = false;
            if (r < r2 || (r == r2 && j < jj)) {
                ++sk.edges;
                if (on_curve) ++sk.curve_edges;
                if (materialize) sk.edge_list.push_back({w, j, nw, jj, on_curve});
            }
        }
        for (int c = 0; c < m; ++c) {
            if (visited[r * m + c]) continue;
            int size = 0, cc = c;
            std::copy(w.begin(), w.end(), nw.begin());
            std::uint64_t cr = r;
            do {
                visited[cr * m + cc] = 1;
                ++size;
                int j = cells.neighbor_inplace(nw.data(), n, cc);
                cc = (j + 1) % m;
                cr = cells.rank(nw.data(), n);
            } while (cr != r || cc != c);
            ++sk.vertices;
            sk.degree_excess += size / 2 - 1;
            if (materialize) sk.vertex_list.push_back({w, c, size, size / 2, rule.tiles[w.back()].corners[c]});
        }
        ++r;
        return true;
    });
    return sk;
}

Pair pair_of(const Cells& cells, const Word& w, int e0) {
    int j = cells.pair_side(w, e0);
    auto [o, jo] = cells.neighbor(w, j);
    if (cells.rule().col(w.back()) == White) return {w, o, j, jo};
    return {o, w, jo, j};
}

std::vector<Pair> enumerate_pairs(const Cells& cells, int n, int e0, const Caps& caps) {
    if (e0 < 0 || e0 >= cells.m()) throw Error("bad_param", "0-edge index out of range");
    if (cells.count_words(n) > caps.words)
        throw Error("cap", "level " + std::to_string(n) + " exceeds the enumeration cap");
    std::vector<Pair> out;
    cells.for_each_word(n, {-1, White}, [&](const Word& w) {
        out.push_back(pair_of(cells, w, e0));
        return true;
    });
    return out;
}

std::optional<Pair> interior_pair_search(const Cells& cells, int n, int e0, Color color, const Caps& caps) {
    if (e0 < 0 || e0 >= cells.m()) throw Error("bad_param", "0-edge index out of range");
    if (cells.count_words(n) > caps.words)
        throw Error("cap", "level " + std::to_string(n) + " exceeds the enumeration cap");
    std::optional<Pair> found;
    const auto& rule = cells.rule();
    cells.for_each_word(n, {color, White}, [&](const Word& w) {
        if (!cells.interior(w)) return true;
        Pair p = pair_of(cells, w, e0);
        if (rule.loc(p.black[0]) != color || !cells.interior(p.black)) return true;
        found = p;
        return false;
    });
    return found;
}

}  // namespace tp
