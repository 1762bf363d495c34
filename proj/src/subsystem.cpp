#include "tilepress/subsystem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tp {

const char* kind_name(PrimitivityKind k) {
    switch (k) {
        case PrimitivityKind::StronglyPrimitive: return "stronglyPrimitive";
        case PrimitivityKind::Primitive: return "primitive";
        default: return "neither-up-to-cap";
    }
}

Subsystem make_subsystem(const SubdivisionRule& rule, std::vector<int> ids) {
    if (ids.empty()) throw Error("empty_subsystem", "subsystem needs at least one tile");
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    Subsystem F;
    F.member.assign(rule.size(), 0);
    for (int t : ids) {
        if (t < 0 || t >= rule.size()) throw Error("unknown_tile", "unknown tile id " + std::to_string(t));
        F.member[t] = 1;
        F.color_mask |= 1 << rule.col(t);
    }
    F.ids = std::move(ids);
    F.dom_in_image = true;
    for (int t : F.ids)
        if (!(F.color_mask & (1 << rule.loc(t)))) F.dom_in_image = false;
    F.full = static_cast<int>(F.ids.size()) == rule.size();
    return F;
}

Subsystem full_subsystem(const SubdivisionRule& rule) {
    std::vector<int> ids(rule.size());
    for (int t = 0; t < rule.size(); ++t) ids[t] = t;
    return make_subsystem(rule, ids);
}

Subsystem subsystem_from_spec(const SubdivisionRule& rule, const std::string& spec, bool drop) {
    std::vector<int> listed;
    if (spec != "all") {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            try {
                auto dash = item.find('-', 1);
                if (dash != std::string::npos) {
                    int a = std::stoi(item.substr(0, dash)), b = std::stoi(item.substr(dash + 1));
                    for (int t = a; t <= b; ++t) listed.push_back(t);
                } else {
                    listed.push_back(std::stoi(item));
                }
            } catch (const std::logic_error&) {
                throw Error("bad_param", "bad tile list '" + spec + "'");
            }
        }
    } else {
        for (int t = 0; t < rule.size(); ++t) listed.push_back(t);
    }
    for (int t : listed)
        if (t < 0 || t >= rule.size()) throw Error("unknown_tile", "unknown tile id " + std::to_string(t));
    if (!drop) return make_subsystem(rule, listed);
    std::vector<char> gone(rule.size(), 0);
    for (int t : listed) gone[t] = 1;
    std::vector<int> keep;
    for (int t = 0; t < rule.size(); ++t)
        if (!gone[t]) keep.push_back(t);
    return make_subsystem(rule, keep);
}

TileMatrix tile_matrix(const SubdivisionRule& rule, const Subsystem& F) {
    TileMatrix A;
    for (int t : F.ids) A.a[rule.col(t)][rule.loc(t)]++;
    return A;
}

double spectral_radius(const TileMatrix& A) {
    double a = double(A.a[0][0]), b = double(A.a[0][1]), c = double(A.a[1][0]), d = double(A.a[1][1]);
    double tr = a + d, det = a * d - b * c;
    double disc = tr * tr - 4 * det;
    return (tr + std::sqrt(std::max(0.0, disc))) / 2;
}

double subsystem_entropy(const SubdivisionRule& rule, const Subsystem& F) {
    return std::log(spectral_radius(tile_matrix(rule, F)));
}

std::array<std::array<BigInt, 2>, 2> matrix_power_counts(const TileMatrix& A, int n) {
    std::array<std::array<BigInt, 2>, 2> P;
    P[0][0] = 1; P[1][1] = 1; P[0][1] = 0; P[1][0] = 0;
    for (int k = 0; k < n; ++k) {
        std::array<std::array<BigInt, 2>, 2> Q;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) Q[i][j] = P[i][0] * A.a[0][j] + P[i][1] * A.a[1][j];
        // P <- P*A: (A^{k+1})[c][c'] = sum_x (A^k)[c][x] A[x][c']
        P = Q;
    }
    return P;
}

BigInt subsystem_tile_count(const SubdivisionRule& rule, const Subsystem& F, int n) {
    auto P = matrix_power_counts(tile_matrix(rule, F), n);
    return P[0][0] + P[0][1] + P[1][0] + P[1][1];
}

void for_each_subsystem_word(const SubdivisionRule& rule, const Subsystem& F, int n,
                             const std::function<bool(const Word&)>& fn) {
    if (n < 1) throw Error("bad_param", "word length must be at least 1");
    std::vector<int> by_loc[2];
    for (int t : F.ids) by_loc[rule.loc(t)].push_back(t);
    Word w(n);
    std::vector<std::size_t> pos(n, 0);
    int depth = 0;
    while (depth >= 0) {
        const std::vector<int>& choices = depth == 0 ? F.ids : by_loc[rule.col(w[depth - 1])];
        if (pos[depth] >= choices.size()) {
            --depth;
            if (depth >= 0) ++pos[depth];
            continue;
        }
        w[depth] = choices[pos[depth]];
        if (depth == n - 1) {
            if (!fn(w)) return;
            ++pos[depth];
        } else {
            pos[++depth] = 0;
        }
    }
}

std::vector<Word> subsystem_tiles(const SubdivisionRule& rule, const Subsystem& F, int n, const Caps& caps) {
    if (subsystem_tile_count(rule, F, n) > caps.words)
        throw Error("cap", "level " + std::to_string(n) + " exceeds the enumeration cap");
    std::vector<Word> out;
    for_each_subsystem_word(rule, F, n, [&](const Word& w) {
        out.push_back(w);
        return true;
    });
    return out;
}

namespace {

// reach[L][c][c2]: some L-word of F located in c has color c2 (L >= 1); reach[0] is the identity.
std::vector<std::array<std::array<char, 2>, 2>> reach_table(const SubdivisionRule& rule, const Subsystem& F, int L) {
    std::vector<std::array<std::array<char, 2>, 2>> R(L + 1);
    R[0] = {{{1, 0}, {0, 1}}};
    std::array<std::array<char, 2>, 2> one{};
    for (int t : F.ids) one[rule.loc(t)][rule.col(t)] = 1;
    for (int k = 1; k <= L; ++k)
        for (int c = 0; c < 2; ++c)
            for (int c2 = 0; c2 < 2; ++c2) {
                char ok = 0;
                for (int x = 0; x < 2; ++x) ok |= R[k - 1][c][x] && one[x][c2];
                R[k][c][c2] = ok;
            }
    return R;
}

// Greedy least completion of prefix w (length k) to length n ending in color `color`.
bool complete_least(const SubdivisionRule& rule, const Subsystem& F, Word& w, int n, Color color,
                    const std::vector<std::array<std::array<char, 2>, 2>>& R) {
    while (static_cast<int>(w.size()) < n) {
        int remaining = n - static_cast<int>(w.size());
        Color need = rule.col(w.back());
        bool placed = false;
        for (int t : F.ids) {
            if (rule.loc(t) != need) continue;
            if (!R[remaining - 1][rule.col(t)][color]) continue;
            w.push_back(t);
            placed = true;
            break;
        }
        if (!placed) return false;
    }
    return rule.col(w.back()) == color;
}

}  // namespace

std::optional<Word> find_word(const Cells& cells, const Subsystem& F, int n, Color loc, Color color, bool interior) {
    const auto& rule = cells.rule();
    auto R = reach_table(rule, F, n);
    // R[n-1] from the first tile's color: first tile located loc, then n-1 more letters
    std::vector<int> by_loc[2];
    for (int t : F.ids) by_loc[rule.loc(t)].push_back(t);
    Word w;
    std::optional<Word> found;
    // depth-first over prefixes that still touch the curve; an interior prefix completes greedily
    std::function<bool()> dfs = [&]() -> bool {
        int k = static_cast<int>(w.size());
        if (interior && k > 0 && cells.interior(w)) {
            Word c = w;
            if (complete_least(rule, F, c, n, color, R)) {
                found = c;
                return true;
            }
            return false;
        }
        if (k == n) {
            if (rule.col(w.back()) != color) return false;
            if (interior) return false;
            found = w;
            return true;
        }
        const std::vector<int>& choices = k == 0 ? by_loc[loc] : by_loc[rule.col(w.back())];
        for (int t : choices) {
            if (!R[n - k - 1][rule.col(t)][color]) continue;
            w.push_back(t);
            if (dfs()) return true;
            w.pop_back();
        }
        return false;
    };
    dfs();
    return found;
}

PrimitivityCertificate primitivity(const Cells& cells, const Subsystem& F, int cap) {
    if (cap < 1) throw Error("bad_param", "primitivity cap must be at least 1");
    const auto& rule = cells.rule();
    PrimitivityCertificate cert;
    cert.cap = cap;
    cert.strong_at.assign(cap + 1, 0);
    cert.weak_at.assign(cap + 1, 0);
    auto R = reach_table(rule, F, cap);
    for (int n = 1; n <= cap; ++n) {
        bool weak = true;
        for (int c = 0; c < 2; ++c)
            for (int c2 = 0; c2 < 2; ++c2) weak = weak && R[n][c2][c];
        cert.weak_at[n] = weak;
        bool strong = weak;
        for (int c = 0; c < 2 && strong; ++c)
            for (int c2 = 0; c2 < 2 && strong; ++c2)
                strong = find_word(cells, F, n, Color(c2), Color(c), true).has_value();
        cert.strong_at[n] = strong;
    }
    auto first_stable = [&](const std::vector<char>& at) {
        int nf = 0;
        for (int n = cap; n >= 1 && at[n]; --n) nf = n;
        return nf;
    };
    int ns = first_stable(cert.strong_at), nw = first_stable(cert.weak_at);
    bool strong = ns > 0;
    if (strong) {
        cert.kind = PrimitivityKind::StronglyPrimitive;
        cert.n_F = ns;
    } else if (nw > 0) {
        cert.kind = PrimitivityKind::Primitive;
        cert.n_F = nw;
    } else {
        return cert;
    }
    for (int c = 0; c < 2; ++c)
        for (int c2 = 0; c2 < 2; ++c2)
            cert.witness[c][c2] = *find_word(cells, F, cert.n_F, Color(c2), Color(c), strong);
    return cert;
}

}  // namespace tp
