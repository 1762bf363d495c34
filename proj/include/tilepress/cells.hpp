#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "tilepress/rule.hpp"

namespace tp {

struct EdgeRef {
    Word word;
    int side = 0;
    Word other;
    int other_side = 0;
    bool on_curve = false;
};

struct VertexRef {
    Word word;  // lexicographically least (word, corner) of the flower
    int corner = 0;
    int flower_size = 0;
    int local_degree = 0;
    int image0 = 0;
};

struct Pair {
    Word white;
    Word black;
    int white_side = 0;
    int black_side = 0;
};

struct InteriorResult {
    bool touches_curve = false;
    std::vector<int> sides_on_curve;
};

struct WordFilter {
    int location = -1;  // -1 any
    int color = -1;
};

// Navigation in the cell decompositions of a validated rule.
class Cells {
public:
    explicit Cells(const SubdivisionRule& rule);

    const SubdivisionRule& rule() const { return rule_; }
    const RuleIndex& index() const { return idx_; }
    int m() const { return rule_.m; }
    int tiles() const { return rule_.size(); }

    // Replaces w (length n) by its neighbor across side j and returns the neighbor's side.
    int neighbor_inplace(int* w, int n, int j) const;
    std::pair<Word, int> neighbor(const Word& w, int j) const;

    bool side_on_curve(const int* w, int n, int j) const;
    bool corner_on_curve(const int* w, int n, int c) const;
    // 0-vertex that corner c of the n-word sits on, or -1.
    int corner_vertex(const int* w, int n, int c) const;
    InteriorResult interior_test(const Word& w) const;
    bool interior(const Word& w) const;

    // Side of the word whose n-fold image is the 0-edge e0.
    int pair_side(const Word& w, int e0) const { return idx_.edge_side[w.back()][e0]; }

    // Tiles around the vertex at corner c of w, in rotation order starting at (w, c).
    std::vector<std::pair<Word, int>> flower(const Word& w, int c) const;
    // An n-word having the 1-vertex at corner c of 1-tile t as a corner, and that corner.
    std::pair<Word, int> word_at_vertex(int t, int c, int n) const;

    // Word counts: number of n-words located in c (saturates at UINT64_MAX).
    std::uint64_t count_located(int n, int c) const;
    std::uint64_t count_words(int n) const;
    // Lexicographic rank among all admissible n-words.
    std::uint64_t rank(const int* w, int n) const;

    // Lexicographic enumeration; the callback may return false to stop.
    void for_each_word(int n, const WordFilter& f, const std::function<bool(const Word&)>& fn) const;

private:
    void build_rank_tables(int n) const;

    SubdivisionRule rule_;
    RuleIndex idx_;
    mutable int rank_n_ = -1;
    mutable std::vector<std::vector<std::uint64_t>> off0_, offl_;  // [remaining][t]
    mutable std::vector<std::array<std::uint64_t, 2>> located_;    // [k] -> counts by location
};

std::vector<Word> enumerate_tiles(const Cells& cells, int n, const WordFilter& f, const Caps& caps);

struct Skeleton {
    std::uint64_t tiles = 0;
    std::uint64_t edges = 0;
    std::uint64_t curve_edges = 0;
    std::uint64_t vertices = 0;
    long long degree_excess = 0;  // sum over vertices of (local degree - 1)
    bool involution = true;
    bool curve_flag_ok = true;
    std::vector<EdgeRef> edge_list;
    std::vector<VertexRef> vertex_list;
};

Skeleton skeleton(const Cells& cells, int n, const Caps& caps, bool materialize = true);

std::vector<Pair> enumerate_pairs(const Cells& cells, int n, int e0, const Caps& caps);
std::optional<Pair> interior_pair_search(const Cells& cells, int n, int e0, Color color, const Caps& caps);
// The pair containing word w.
Pair pair_of(const Cells& cells, const Word& w, int e0);

}  // namespace tp
