#include "tilepress/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace tp {

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Level-1 psi scaled to integers; increments are shifted to be nonnegative.
struct Psi1 {
    std::int64_t denom = 1;
    long long minv = 0;
    int span = 0;
    std::vector<int> inc;
};

Psi1 psi_setup(const Cells& cells, const Potential* psi) {
    Psi1 p;
    p.inc.assign(cells.tiles(), 0);
    if (!psi) return p;
    if (psi->level != 1 || !psi->is_exact())
        throw Error("bad_potential", "the observable must be a level-1 potential with rational values");
    for (const auto& r : psi->exact) p.denom = lcm64(p.denom, r.den());
    std::vector<long long> scaled;
    for (const auto& r : psi->exact) scaled.push_back(r.num() * (p.denom / r.den()));
    p.minv = *std::min_element(scaled.begin(), scaled.end());
    long long maxv = *std::max_element(scaled.begin(), scaled.end());
    if (maxv - p.minv > 1'000'000) throw Error("cap", "observable values too spread for the sum table");
    p.span = static_cast<int>(maxv - p.minv);
    for (int t = 0; t < cells.tiles(); ++t) p.inc[t] = static_cast<int>(scaled[t] - p.minv);
    return p;
}

// States x sums table of scaled doubles.
struct Table {
    int S = 0, B = 0;
    std::vector<double> v;
    double log_scale = 0;

    Table(int s, int b) : S(s), B(b), v(static_cast<std::size_t>(s) * b, 0.0) {}
    double& at(int s, int b) { return v[static_cast<std::size_t>(s) * B + b]; }
    double at(int s, int b) const { return v[static_cast<std::size_t>(s) * B + b]; }
    void normalize() {
        double m = *std::max_element(v.begin(), v.end());
        if (m > 0) {
            for (double& x : v) x /= m;
            log_scale += std::log(m);
        }
    }
};

void check_table(const Caps& caps, int S, int B) {
    if (static_cast<std::uint64_t>(S) * static_cast<std::uint64_t>(B) > caps.dp_cells)
        throw Error("cap", "state x sum table exceeds the DP cap");
}

SplitSums empty_split(const Psi1& p, int n) {
    SplitSums s;
    s.denom = p.denom;
    s.offset = p.minv * n;
    s.logw.assign(static_cast<std::size_t>(p.span) * n + 1, kNegInf);
    return s;
}

void add_bucket(SplitSums& s, int b, double logw) {
    s.logw[b] = log_add(s.logw[b], logw);
}

void step(const WordChain& c, const std::vector<double>& wphi, const Psi1& p, const Table& cur, Table& next,
          const std::vector<char>* allowed) {
    std::fill(next.v.begin(), next.v.end(), 0.0);
    next.log_scale = cur.log_scale;
    for (int x = 0; x < c.adj.n; ++x) {
        const double* row = &cur.v[static_cast<std::size_t>(x) * cur.B];
        bool any = false;
        for (int b = 0; b < cur.B && !any; ++b) any = row[b] != 0;
        if (!any) continue;
        for (std::size_t k = c.adj.ptr[x]; k < c.adj.ptr[x + 1]; ++k) {
            int y = c.adj.col[k];
            if (allowed && !(*allowed)[y]) continue;
            int d = p.inc[c.words[y][0]];
            double w = wphi[x];
            double* out = &next.v[static_cast<std::size_t>(y) * next.B];
            for (int b = 0; b + d < cur.B; ++b)
                if (row[b] != 0) out[b + d] += row[b] * w;
        }
    }
    next.normalize();
}

std::vector<double> state_weights(const Cells& cells, const WordChain& c, const Potential& phi) {
    std::vector<double> w(c.adj.n);
    for (int i = 0; i < c.adj.n; ++i) w[i] = std::exp(phi.v[cells.rank(c.words[i].data(), phi.level)]);
    return w;
}

// Words w of length n: start filter on w[0], weight e^{tail pick} and end factor on the last letter.
SplitSums tile_split(const Cells& cells, const Potential& phi, const Psi1& p, int n, int which,
                     const std::function<bool(int)>& first_ok,
                     const std::function<double(int first, int last)>& end_factor) {
    const int l = phi.level;
    Tails t = tails(cells, phi);
    auto pick = [&](const Bracket& b) { return which < 0 ? b.lo : which > 0 ? b.hi : b.mid(); };
    SplitSums out = empty_split(p, n);
    if (n < l) {
        cells.for_each_word(n, {}, [&](const Word& w) {
            if (!first_ok(w[0])) return true;
            double f = end_factor(w[0], w.back());
            if (f <= 0) return true;
            int b = 0;
            for (int u : w) b += p.inc[u];
            add_bucket(out, b, pick(birkhoff_bracket(cells, phi, t, w)) + std::log(f));
            return true;
        });
        return out;
    }
    const Subsystem full = full_subsystem(cells.rule());
    WordChain c = word_chain(cells, full, l);
    std::vector<double> wphi = state_weights(cells, c, phi);
    const int B = p.span * n + 1;
    check_table(Caps{}, c.adj.n, B);
    Table cur(c.adj.n, B), next(c.adj.n, B);
    // first letter of each start state is fixed from here on, so run one pass per first letter class
    std::vector<int> firsts;
    for (int u = 0; u < cells.tiles(); ++u)
        if (first_ok(u)) firsts.push_back(u);
    // group by location of the first letter: end factors may depend on it
    for (int color = 0; color < 2; ++color) {
        std::fill(cur.v.begin(), cur.v.end(), 0.0);
        cur.log_scale = 0;
        bool any = false;
        for (int s = 0; s < c.adj.n; ++s) {
            int u = c.words[s][0];
            if (cells.rule().loc(u) != color || !first_ok(u)) continue;
            cur.at(s, p.inc[u]) = 1.0;
            any = true;
        }
        if (!any) continue;
        for (int i = 1; i <= n - l; ++i) {
            step(c, wphi, p, cur, next, nullptr);
            std::swap(cur, next);
        }
        int first_rep = -1;
        for (int u : firsts)
            if (cells.rule().loc(u) == color) { first_rep = u; break; }
        for (int s = 0; s < c.adj.n; ++s) {
            const Word& x = c.words[s];
            double f = end_factor(first_rep, x.back());
            if (f <= 0) continue;
            int extra = 0;
            for (int j = 1; j < l; ++j) extra += p.inc[x[j]];
            double tail = t.k ? pick(Bracket{t.lo_at(cells, x.data() + 1), t.hi_at(cells, x.data() + 1)}) : 0.0;
            double base = std::log(wphi[s]) + tail + std::log(f) + cur.log_scale;
            for (int b = 0; b + extra < B; ++b) {
                double v = cur.at(s, b);
                if (v > 0) add_bucket(out, b + extra, base + std::log(v));
            }
        }
    }
    return out;
}

}  // namespace

BaseSpec BaseSpec::parse(const std::string& s) {
    BaseSpec b;
    if (s == "generic:white") return b;
    if (s == "generic:black") {
        b.color = Black;
        return b;
    }
    if (s.rfind("vertex:", 0) == 0) {
        b.vertex = true;
        try {
            b.index = std::stoi(s.substr(7));
        } catch (const std::logic_error&) {
            throw Error("bad_param", "bad base '" + s + "'");
        }
        return b;
    }
    throw Error("bad_param", "bad base '" + s + "', expected generic:white|generic:black|vertex:k");
}

std::string BaseSpec::str() const {
    if (vertex) return "vertex:" + std::to_string(index);
    return std::string("generic:") + color_name(color);
}

Word generic_address(const Cells& cells, Color c, int len) {
    // Periodic address of the shortest interior word of color c located in c: a fixed point of
    // an iterate inside the open 0-tile, so its forward orbit avoids the curve.
    const Subsystem full = full_subsystem(cells.rule());
    std::optional<Word> w;
    for (int j = 1; j <= 12 && !w; ++j) w = find_word(cells, full, j, c, c, true);
    if (!w) throw Error("bad_base", "no interior periodic address up to length 12");
    Word a;
    for (int i = 0; i < len; ++i) a.push_back((*w)[i % w->size()]);
    return a;
}

double SplitSums::log_total() const {
    double s = kNegInf;
    for (double x : logw) s = log_add(s, x);
    return s;
}

double SplitSums::log_at_least(const Rational& threshold) const {
    double s = kNegInf;
    for (std::size_t b = 0; b < logw.size(); ++b) {
        // (offset + b) / denom >= p/q  <=>  (offset + b) * q >= p * denom
        __int128 lhs = static_cast<__int128>(offset + static_cast<long long>(b)) * threshold.den();
        __int128 rhs = static_cast<__int128>(threshold.num()) * denom;
        if (lhs >= rhs) s = log_add(s, logw[b]);
    }
    return s;
}

int fixed_vertex_divisor(const Cells& cells, int n) {
    CriticalOrbitReport rep = critical_orbits(cells);
    const int m = cells.m();
    long long best = 2;
    for (int v = 0; v < m; ++v) {
        int x = v;
        long long deg = 1;
        for (int j = 0; j < n; ++j) {
            deg = std::min<long long>(deg * rep.zero_degrees[x], 1'000'000'000LL);
            x = rep.vertex_image[x];
        }
        if (x == v) best = std::max(best, 2 * deg);
    }
    return static_cast<int>(std::min<long long>(best, 2'000'000'000LL));
}

SplitSums periodic_split(const Cells& cells, const Potential& phi, const Potential* psi, int n, PeriodicMode mode) {
    if (n < 1) throw Error("bad_param", "n must be at least 1");
    Psi1 p = psi_setup(cells, psi);
    const auto& rule = cells.rule();
    if (mode != PeriodicMode::Cyclic) {
        int which = mode == PeriodicMode::Lower ? -1 : 1;
        SplitSums s = tile_split(
            cells, phi, p, n, which, [](int) { return true; },
            [&](int first, int last) { return rule.loc(first) == rule.col(last) ? 1.0 : 0.0; });
        if (mode == PeriodicMode::Lower) {
            double d = std::log(double(fixed_vertex_divisor(cells, n)));
            for (double& x : s.logw)
                if (x != kNegInf) x -= d;
        }
        return s;
    }
    // closed walks of length n on the l-word chain = periodic itineraries of period n
    const Subsystem full = full_subsystem(rule);
    WordChain c = word_chain(cells, full, phi.level);
    std::vector<double> wphi = state_weights(cells, c, phi);
    const int B = p.span * n + 1;
    check_table(Caps{}, c.adj.n, B);
    SplitSums out = empty_split(p, n);
    Table cur(c.adj.n, B), next(c.adj.n, B);
    Csr back = transpose(c.adj);
    for (int s0 = 0; s0 < c.adj.n; ++s0) {
        std::fill(cur.v.begin(), cur.v.end(), 0.0);
        cur.log_scale = 0;
        cur.at(s0, p.inc[c.words[s0][0]]) = 1.0;
        for (int i = 1; i < n; ++i) {
            step(c, wphi, p, cur, next, nullptr);
            std::swap(cur, next);
        }
        for (std::size_t k = back.ptr[s0]; k < back.ptr[s0 + 1]; ++k) {
            int x = back.col[k];
            for (int b = 0; b < B; ++b) {
                double v = cur.at(x, b);
                if (v > 0) add_bucket(out, b, std::log(v * wphi[x]) + cur.log_scale);
            }
        }
    }
    return out;
}

SplitSums preimage_split(const Cells& cells, const Potential& phi, const Potential* psi, int n, const BaseSpec& base, int which) {
    if (n < 1) throw Error("bad_param", "n must be at least 1");
    Psi1 p = psi_setup(cells, psi);
    const auto& rule = cells.rule();
    if (base.vertex) {
        if (base.index < 0 || base.index >= cells.m()) throw Error("bad_base", "base vertex is not a 0-vertex");
        return tile_split(
            cells, phi, p, n, which, [](int) { return true; },
            [&](int, int last) {
                int cnt = 0;
                for (int v : rule.tiles[last].corners) cnt += v == base.index;
                return cnt / 2.0;
            });
    }
    const int L = std::max(phi.level, 2);
    Potential ph = lift(cells, phi, L);
    Word a = generic_address(cells, base.color, L - 1);
    const Subsystem full = full_subsystem(rule);
    WordChain c = word_chain(cells, full, L);
    std::vector<double> wphi = state_weights(cells, c, ph);
    const int B = p.span * n + 1;
    check_table(Caps{}, c.adj.n, B);
    auto allowed_at = [&](int i) {
        std::vector<char> ok(c.adj.n, 1);
        for (int s = 0; s < c.adj.n; ++s)
            for (int j = 0; j < L; ++j)
                if (i + j >= n && c.words[s][j] != a[i + j - n]) ok[s] = 0;
        return ok;
    };
    Table cur(c.adj.n, B), next(c.adj.n, B);
    auto ok0 = allowed_at(0);
    for (int s = 0; s < c.adj.n; ++s)
        if (ok0[s]) cur.at(s, p.inc[c.words[s][0]]) = 1.0;
    for (int i = 1; i < n; ++i) {
        auto ok = allowed_at(i);
        step(c, wphi, p, cur, next, &ok);
        std::swap(cur, next);
    }
    SplitSums out = empty_split(p, n);
    for (int s = 0; s < c.adj.n; ++s)
        for (int b = 0; b < B; ++b) {
            double v = cur.at(s, b);
            if (v > 0) add_bucket(out, b, std::log(v * wphi[s]) + cur.log_scale);
        }
    return out;
}

PeriodicSums fixed_tile_sums(const Cells& cells, const Potential& phi, int n) {
    PeriodicSums ps;
    ps.n = n;
    auto P = matrix_power_counts(tile_matrix(cells.rule(), full_subsystem(cells.rule())), n);
    ps.count = P[0][0] + P[1][1];
    ps.nmax = fixed_vertex_divisor(cells, n);
    ps.log_lower = periodic_split(cells, phi, nullptr, n, PeriodicMode::Lower).log_total();
    ps.log_upper = periodic_split(cells, phi, nullptr, n, PeriodicMode::Upper).log_total();
    ps.log_cyclic = periodic_split(cells, phi, nullptr, n, PeriodicMode::Cyclic).log_total();
    return ps;
}

std::vector<FixedTile> fixed_tiles(const Cells& cells, const Potential& phi, int n, const Caps& caps) {
    if (cells.count_words(n) > caps.words) throw Error("cap", "level exceeds the enumeration cap");
    Tails t = tails(cells, phi);
    std::vector<FixedTile> out;
    const auto& rule = cells.rule();
    cells.for_each_word(n, {}, [&](const Word& w) {
        if (rule.loc(w[0]) == rule.col(w.back())) out.push_back({w, birkhoff_bracket(cells, phi, t, w)});
        return true;
    });
    return out;
}

PreimageSums preimage_sums(const Cells& cells, const Potential& phi, int n, const BaseSpec& base) {
    PreimageSums ps;
    ps.n = n;
    ps.base = base;
    const auto& rule = cells.rule();
    auto A = tile_matrix(rule, full_subsystem(rule));
    if (!base.vertex) {
        auto P = matrix_power_counts(A, n);
        ps.weight_total = P[base.color][0] + P[base.color][1];
        ps.log_lower = ps.log_upper = preimage_split(cells, phi, nullptr, n, base, 0).log_total();
        return ps;
    }
    if (base.index < 0 || base.index >= cells.m()) throw Error("bad_base", "base vertex is not a 0-vertex");
    // sum over n-words of (number of last-letter corners over the vertex) / 2
    auto P = matrix_power_counts(A, n - 1);
    BigInt twice = 0;
    for (int t = 0; t < cells.tiles(); ++t) {
        int cnt = 0;
        for (int v : rule.tiles[t].corners) cnt += v == base.index;
        BigInt ending = n == 1 ? BigInt(1) : P[rule.loc(t)][0] + P[rule.loc(t)][1];
        twice += ending * cnt;
    }
    ps.weight_total = twice / 2;
    ps.log_lower = preimage_split(cells, phi, nullptr, n, base, -1).log_total();
    ps.log_upper = preimage_split(cells, phi, nullptr, n, base, 1).log_total();
    return ps;
}

std::vector<Preimage> preimages(const Cells& cells, const Potential& phi, int n, const BaseSpec& base, const Caps& caps) {
    if (cells.count_words(n) > caps.words) throw Error("cap", "level exceeds the enumeration cap");
    std::vector<Preimage> out;
    Tails t = tails(cells, phi);
    if (!base.vertex) {
        const int l = phi.level;
        Word a = generic_address(cells, base.color, std::max(l - 1, 0));
        cells.for_each_word(n, {-1, base.color}, [&](const Word& w) {
            Word full = w;
            full.insert(full.end(), a.begin(), a.end());
            double s = 0;
            for (int i = 0; i < n; ++i) s += phi.v[cells.rank(full.data() + i, l)];
            out.push_back({w, -1, 1, {s, s}});
            return true;
        });
        return out;
    }
    if (base.index < 0 || base.index >= cells.m()) throw Error("bad_base", "base vertex is not a 0-vertex");
    Skeleton sk = skeleton(cells, n, caps, true);
    for (const auto& v : sk.vertex_list) {
        if (v.image0 != base.index) continue;
        Preimage p{v.word, v.corner, v.local_degree, {INFINITY, -INFINITY}};
        for (const auto& [w, c] : cells.flower(v.word, v.corner)) {
            (void)c;
            Bracket b = birkhoff_bracket(cells, phi, t, w);
            p.phi.lo = std::min(p.phi.lo, b.lo);
            p.phi.hi = std::max(p.phi.hi, b.hi);
        }
        out.push_back(p);
    }
    return out;
}

int CriticalOrbitReport::critical_count() const {
    int c = 0;
    for (const auto& v : vertices) c += v.local_degree >= 2;
    return c;
}

CriticalOrbitReport critical_orbits(const Cells& cells) {
    CriticalOrbitReport rep;
    const int m = cells.m();
    rep.vertex_image = cells.index().vertex_image;
    rep.zero_degrees.assign(m, 0);
    Skeleton sk = skeleton(cells, 1, Caps{}, true);
    for (const auto& v : sk.vertex_list) {
        VertexOrbit o;
        o.tile = v.word;
        o.corner = v.corner;
        o.local_degree = v.local_degree;
        o.zero_vertex = cells.corner_vertex(v.word.data(), 1, v.corner);
        if (o.zero_vertex >= 0) rep.zero_degrees[o.zero_vertex] = v.local_degree;
        std::set<int> seen;
        int x = v.image0;
        while (!seen.count(x)) {
            seen.insert(x);
            o.orbit.push_back(x);
            x = rep.vertex_image[x];
        }
        if (o.zero_vertex >= 0) {
            int y = rep.vertex_image[o.zero_vertex];
            for (int k = 1; k <= m; ++k) {
                if (y == o.zero_vertex) {
                    o.periodic = true;
                    o.period = k;
                    break;
                }
                y = rep.vertex_image[y];
            }
        }
        if (o.periodic && o.local_degree >= 2) rep.has_periodic_critical = true;
        rep.vertices.push_back(o);
    }
    return rep;
}

}  // namespace tp
