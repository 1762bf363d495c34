#include "tilepress/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace tp {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double log_big(const BigInt& x) {
    if (x <= 0) return -kInf;
    std::size_t bits = boost::multiprecision::msb(x);
    std::size_t shift = bits > 60 ? bits - 60 : 0;
    BigInt top = x >> shift;
    return std::log(top.convert_to<double>()) + double(shift) * std::log(2.0);
}

double log_big(const BigRational& x) {
    return log_big(boost::multiprecision::numerator(x)) - log_big(boost::multiprecision::denominator(x));
}

double Law::log_tail(const Rational& threshold) const {
    auto at_least = [&](std::size_t b) {
        __int128 lhs = static_cast<__int128>(offset + static_cast<long long>(b)) * threshold.den();
        __int128 rhs = static_cast<__int128>(threshold.num()) * denom;
        return lhs >= rhs;
    };
    if (rational) {
        BigRational s = 0;
        for (std::size_t b = 0; b < exact.size(); ++b)
            if (at_least(b)) s += exact[b];
        return log_big(s);
    }
    long double s = 0;
    for (std::size_t b = 0; b < prob.size(); ++b)
        if (at_least(b)) s += prob[b];
    return s > 0 ? static_cast<double>(std::log(s)) : -kInf;
}

Law birkhoff_law(const Cells& cells, const Potential& phi, const Potential& psi, int n, const Caps& caps) {
    if (n < 1) throw Error("bad_param", "n must be at least 1");
    if (!psi.is_exact()) throw Error("bad_potential", "the observable needs rational values");
    const int L = std::max(phi.level, psi.level);
    MarkovMeasure mu = equilibrium(cells, full_subsystem(cells.rule()), lift(cells, phi, L));
    const int S = mu.states();
    Law law;
    law.n = n;
    for (const auto& r : psi.exact) law.denom = lcm64(law.denom, r.den());
    std::vector<long long> val(S);
    for (int s = 0; s < S; ++s) {
        const Rational& r = psi.exact[cells.rank(mu.label[s].data(), psi.level)];
        val[s] = r.num() * (law.denom / r.den());
    }
    long long minv = *std::min_element(val.begin(), val.end()), maxv = *std::max_element(val.begin(), val.end());
    if (maxv - minv > 1'000'000) throw Error("cap", "observable values too spread for the sum table");
    const int span = static_cast<int>(maxv - minv);
    const std::size_t B = static_cast<std::size_t>(span) * n + 1;
    if (static_cast<std::uint64_t>(S) * B > caps.dp_cells) throw Error("cap", "state x sum table exceeds the DP cap");
    law.offset = minv * n;
    std::vector<int> inc(S);
    for (int s = 0; s < S; ++s) inc[s] = static_cast<int>(val[s] - minv);

    // exact mode when every probability is a recognizable rational
    std::vector<BigRational> pr, pir;
    bool exact = true;
    for (double x : mu.p.val) {
        auto r = recognize_rational(x);
        if (!r) { exact = false; break; }
        pr.emplace_back(BigRational(r->num()) / r->den());
    }
    for (int s = 0; s < S && exact; ++s) {
        auto r = recognize_rational(mu.pi[s]);
        if (!r) { exact = false; break; }
        pir.emplace_back(BigRational(r->num()) / r->den());
    }
    law.rational = exact;
    if (exact) {
        std::vector<BigRational> cur(S * B), next(S * B);
        for (int s = 0; s < S; ++s) cur[s * B + inc[s]] = pir[s];
        for (int i = 1; i < n; ++i) {
            for (auto& x : next) x = 0;
            for (int s = 0; s < S; ++s)
                for (std::size_t b = 0; b < B; ++b) {
                    const BigRational& v = cur[s * B + b];
                    if (v == 0) continue;
                    for (std::size_t k = mu.p.ptr[s]; k < mu.p.ptr[s + 1]; ++k) {
                        int t = mu.p.col[k];
                        next[t * B + b + inc[t]] += v * pr[k];
                    }
                }
            cur.swap(next);
        }
        law.exact.assign(B, 0);
        for (int s = 0; s < S; ++s)
            for (std::size_t b = 0; b < B; ++b) law.exact[b] += cur[s * B + b];
        for (const auto& x : law.exact) law.prob.push_back(x.convert_to<double>());
    } else {
        std::vector<long double> cur(S * B, 0), next(S * B);
        for (int s = 0; s < S; ++s) cur[s * B + inc[s]] = mu.pi[s];
        for (int i = 1; i < n; ++i) {
            std::fill(next.begin(), next.end(), 0.0L);
            for (int s = 0; s < S; ++s)
                for (std::size_t b = 0; b < B; ++b) {
                    long double v = cur[s * B + b];
                    if (v == 0) continue;
                    for (std::size_t k = mu.p.ptr[s]; k < mu.p.ptr[s + 1]; ++k) {
                        int t = mu.p.col[k];
                        next[t * B + b + inc[t]] += v * mu.p.val[k];
                    }
                }
            cur.swap(next);
        }
        law.prob.assign(B, 0.0);
        for (std::size_t b = 0; b < B; ++b) {
            long double s = 0;
            for (int st = 0; st < S; ++st) s += cur[st * B + b];
            law.prob[b] = static_cast<double>(s);
        }
    }
    long double m = 0;
    for (std::size_t b = 0; b < B; ++b) m += static_cast<long double>(law.prob[b]) * (law.offset + static_cast<long long>(b));
    law.mean = static_cast<double>(m / law.denom);
    return law;
}

Estimator parse_estimator(const std::string& s) {
    if (s == "birkhoff") return Estimator::Birkhoff;
    if (s == "periodic") return Estimator::Periodic;
    if (s == "preimage") return Estimator::Preimage;
    throw Error("bad_param", "unknown estimator '" + s + "'");
}

const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::Birkhoff: return "birkhoff";
        case Estimator::Periodic: return "periodic";
        default: return "preimage";
    }
}

std::vector<int> NRange::values() const {
    if (a < 1 || b < a || step < 1) throw Error("bad_param", "bad n range");
    std::vector<int> out;
    for (int n = a; n <= b; n += step) out.push_back(n);
    return out;
}

NRange NRange::parse(const std::string& s) {
    NRange r;
    try {
        auto p1 = s.find(':');
        if (p1 == std::string::npos) {
            r.a = r.b = std::stoi(s);
        } else {
            auto p2 = s.find(':', p1 + 1);
            r.a = std::stoi(s.substr(0, p1));
            r.b = std::stoi(s.substr(p1 + 1, p2 == std::string::npos ? std::string::npos : p2 - p1 - 1));
            if (p2 != std::string::npos) r.step = std::stoi(s.substr(p2 + 1));
        }
    } catch (const std::logic_error&) {
        throw Error("bad_param", "bad n range '" + s + "'");
    }
    r.values();
    return r;
}

DeviationCurve deviation_curve(const Cells& cells, const Potential& phi, const Potential& psi, const Rational& alpha,
                               Estimator est, const NRange& ns, const BaseSpec& base, const Caps& caps) {
    DeviationCurve dc;
    dc.estimator = est;
    dc.alpha = alpha;
    const Subsystem full = full_subsystem(cells.rule());
    const int L = std::max(phi.level, psi.level);
    MarkovMeasure mu = equilibrium(cells, full, lift(cells, phi, L));
    dc.mean = integral(cells, mu, psi);
    auto range = cycle_mean_range(cells, full, lift(cells, psi, L));
    const double a = alpha.to_double();
    if (a > range.second + 1e-12) {
        dc.k_alpha = kInf;
    } else if (a <= dc.mean) {
        dc.k_alpha = 0;
    } else {
        double p0 = spectral(cells, full, lift(cells, phi, L)).log_lambda;
        dc.k_alpha = rate_at(cells, phi, psi, a, Grid{-60, 60, 0.05}, p0);
    }
    std::vector<double> log_xi;
    for (int n : ns.values()) {
        DeviationRow row;
        row.n = n;
        Rational thr = alpha * Rational(n);
        double lx = -kInf;
        if (est == Estimator::Birkhoff) {
            lx = birkhoff_law(cells, phi, psi, n, caps).log_tail(thr);
            row.rate = -lx / n;
            row.lo = row.hi = row.rate;
        } else {
            SplitSums point, lower, upper;
            if (est == Estimator::Periodic) {
                point = periodic_split(cells, phi, &psi, n, PeriodicMode::Cyclic);
                lower = periodic_split(cells, phi, &psi, n, PeriodicMode::Lower);
                upper = periodic_split(cells, phi, &psi, n, PeriodicMode::Upper);
            } else {
                point = preimage_split(cells, phi, &psi, n, base, 0);
                lower = base.vertex ? preimage_split(cells, phi, &psi, n, base, -1) : point;
                upper = base.vertex ? preimage_split(cells, phi, &psi, n, base, 1) : point;
            }
            lx = point.log_at_least(thr) - point.log_total();
            row.rate = -lx / n;
            double hi_ratio = upper.log_at_least(thr) - lower.log_total();
            double lo_ratio = lower.log_at_least(thr) - upper.log_total();
            row.lo = -hi_ratio / n;
            row.hi = -lo_ratio / n;
        }
        if (lx == -kInf) row.rate = row.lo = row.hi = kInf;
        log_xi.push_back(lx);
        dc.rows.push_back(row);
    }
    if (!dc.rows.empty()) dc.final_gap = std::abs(dc.rows.back().rate - dc.k_alpha);
    if (dc.rows.size() >= 2) {
        std::size_t m = dc.rows.size();
        dc.slope_rate = -(log_xi[m - 1] - log_xi[m - 2]) / (dc.rows[m - 1].n - dc.rows[m - 2].n);
    }
    return dc;
}

namespace {

// 1-tile and corner sitting on the 0-vertex v.
std::pair<int, int> tile_at_vertex(const Cells& cells, int v) {
    for (int t = 0; t < cells.tiles(); ++t)
        for (int c = 0; c < cells.m(); ++c)
            if (cells.index().corner_pos[t][c] == v) return {t, c};
    throw Error("internal", "0-vertex without a tile");
}

std::set<std::uint64_t> flower_ranks(const Cells& cells, int v, int level) {
    auto [t, c] = tile_at_vertex(cells, v);
    auto [w, corner] = cells.word_at_vertex(t, c, level);
    std::set<std::uint64_t> out;
    for (const auto& [fw, fc] : cells.flower(w, corner)) {
        (void)fc;
        out.insert(cells.rank(fw.data(), level));
    }
    return out;
}

// Unit-weight chain on block words with X -> Y when Y's location is X's color.
Csr block_chain(const SubdivisionRule& rule, const std::vector<Word>& blocks, const std::vector<double>* weight) {
    Csr c;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (std::size_t j = 0; j < blocks.size(); ++j)
            if (rule.loc(blocks[j][0]) == rule.col(blocks[i].back())) {
                c.col.push_back(static_cast<int>(j));
                c.val.push_back(weight ? (*weight)[i] : 1.0);
            }
        c.add_row();
    }
    return c;
}

// Coarse masses of the average of the block measure over its N shifts.
std::vector<double> averaged_masses(const Cells& cells, const std::vector<Word>& blocks, const MarkovMeasure& mu, int level) {
    const int N = static_cast<int>(blocks[0].size());
    if (level > N) throw Error("bad_param", "coarse level exceeds the block length");
    std::vector<double> out(cells.count_words(level), 0.0);
    Word buf;
    for (int x = 0; x < mu.states(); ++x) {
        for (int j = 0; j < N; ++j) {
            if (j + level <= N) {
                out[cells.rank(blocks[x].data() + j, level)] += mu.pi[x] / N;
                continue;
            }
            for (std::size_t k = mu.p.ptr[x]; k < mu.p.ptr[x + 1]; ++k) {
                const Word& y = blocks[mu.p.col[k]];
                buf.assign(blocks[x].begin() + j, blocks[x].end());
                buf.insert(buf.end(), y.begin(), y.begin() + (level - (N - j)));
                out[cells.rank(buf.data(), level)] += mu.pi[x] * mu.p.val[k] / N;
            }
        }
    }
    return out;
}

UscReport usc_fixed(const Cells& cells, int p, const NRange& ns, int coarse, int prim_cap, const Caps& caps) {
    UscReport rep;
    rep.vertex = p;
    rep.coarse = coarse;
    CriticalOrbitReport orb = critical_orbits(cells);
    rep.degree = orb.zero_degrees[p];
    const Subsystem full = full_subsystem(cells.rule());
    PrimitivityCertificate cert = primitivity(cells, full, prim_cap);
    if (cert.kind != PrimitivityKind::StronglyPrimitive) throw Error("not_primitive", "the map is not strongly primitive up to the cap");
    rep.n_f = cert.n_F;
    const auto& rule = cells.rule();
    auto [t0, c0] = tile_at_vertex(cells, p);
    std::map<std::pair<int, int>, Word> interior;  // (location, color) -> n_f-word
    for (int loc = 0; loc < 2; ++loc)
        for (int col = 0; col < 2; ++col) {
            auto u = find_word(cells, full, rep.n_f, Color(loc), Color(col), true);
            if (!u) throw Error("internal", "no interior witness at n_f");
            interior[{loc, col}] = *u;
        }
    std::set<std::uint64_t> hood = flower_ranks(cells, p, coarse);
    for (int n : ns.values()) {
        UscLevel lv;
        lv.n = n;
        lv.block = n + rep.n_f;
        BigInt expected = BigInt(2) * boost::multiprecision::pow(BigInt(rep.degree), n);
        if (expected > caps.words) throw Error("cap", "flower exceeds the enumeration cap");
        auto [w, corner] = cells.word_at_vertex(t0, c0, n);
        std::vector<Word> flower;
        for (const auto& [fw, fc] : cells.flower(w, corner)) {
            (void)fc;
            flower.push_back(fw);
        }
        std::sort(flower.begin(), flower.end());
        std::vector<Word> blocks;
        for (const Word& x : flower)
            for (int col = 0; col < 2; ++col) {
                Word b = x;
                const Word& u = interior[{rule.col(x.back()), col}];
                b.insert(b.end(), u.begin(), u.end());
                blocks.push_back(b);
            }
        lv.tiles = static_cast<int>(blocks.size());
        for (const Word& b : blocks) lv.matrix[rule.col(b.back())][rule.loc(b[0])]++;
        lv.rows_equal = lv.matrix[0] == lv.matrix[1];
        TileMatrix A;
        A.a = lv.matrix;
        if (lv.rows_equal) {
            lv.rho = BigInt(lv.matrix[0][0] + lv.matrix[0][1]);
            lv.h_top = std::log(double(lv.matrix[0][0] + lv.matrix[0][1]));
        } else {
            lv.h_top = std::log(spectral_radius(A));
        }
        lv.h_top_exact = lv.rows_equal && lv.rho == expected;
        lv.h_n = lv.h_top / lv.block;
        Csr chain = block_chain(rule, blocks, nullptr);
        PerronResult right = perron_right(chain), left = perron_right(transpose(chain));
        MarkovMeasure mu = chain_measure(chain, right, left);
        lv.coarse = averaged_masses(cells, blocks, mu, coarse);
        double inside = 0;
        for (auto r : hood) inside += lv.coarse[r];
        lv.mass_outside = std::max(0.0, 1 - inside);
        rep.levels.push_back(std::move(lv));
    }
    rep.limit = std::log(double(rep.degree));
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        if (rep.levels[i].h_n <= rep.limit) rep.hn_above_limit = false;
        if (i && rep.levels[i].h_n >= rep.levels[i - 1].h_n) rep.hn_decreasing = false;
        if (i && rep.levels[i].mass_outside >= rep.levels[i - 1].mass_outside) rep.mass_decreasing = false;
    }
    return rep;
}

}  // namespace

UscReport usc_experiment(const Cells& cells, const NRange& ns, int coarse, int prim_cap, const Caps& caps) {
    CriticalOrbitReport orb = critical_orbits(cells);
    int p = -1, q = 0;
    for (const auto& v : orb.vertices)
        if (v.local_degree >= 2 && v.periodic && (p < 0 || v.zero_vertex < p)) {
            p = v.zero_vertex;
            q = v.period;
        }
    if (p < 0) throw Error("no_periodic_critical", "rule has no periodic critical vertex");
    if (q == 1) return usc_fixed(cells, p, ns, coarse, prim_cap, caps);
    // a periodic vertex is fixed by the iterate, whose tiles are q-words
    Cells it(iterate_rule(cells.rule(), q));
    UscReport rep = usc_fixed(it, p, ns, coarse, prim_cap, caps);
    rep.period = q;
    rep.limit /= q;
    for (auto& lv : rep.levels) lv.h_n /= q;
    return rep;
}

PairMeasureReport pair_measure_construct(const Cells& cells, const Potential& phi, const std::vector<Potential>& Phi,
                                         const std::vector<Rational>& alpha, int n, const Caps& caps) {
    if (Phi.empty() || Phi.size() != alpha.size()) throw Error("bad_param", "need one threshold per observable");
    const auto& rule = cells.rule();
    PairMeasureReport rep;
    rep.n = n;
    rep.alpha = alpha;
    std::vector<Pair> pairs = enumerate_pairs(cells, n, 0, caps);
    rep.pairs_total = static_cast<int>(pairs.size());
    std::vector<Tails> tl;
    for (const auto& f : Phi) tl.push_back(tails(cells, f));
    auto qualifies = [&](const Word& w) {
        for (std::size_t j = 0; j < Phi.size(); ++j)
            if (birkhoff_bracket(cells, Phi[j], tl[j], w).hi < n * alpha[j].to_double() - 1e-12) return false;
        return true;
    };
    // S_n varies across the shared edge of a pair, so distortion is taken over whole pairs
    auto pair_distortion = [&](const Potential& f, const Tails& t) {
        double d = 0;
        for (const Pair& pr : pairs) {
            Bracket a = birkhoff_bracket(cells, f, t, pr.white), b = birkhoff_bracket(cells, f, t, pr.black);
            d = std::max(d, std::max(a.hi, b.hi) - std::min(a.lo, b.lo));
        }
        return d;
    };
    std::vector<Word> blocks;
    for (const Pair& pr : pairs) {
        if (!qualifies(pr.white) && !qualifies(pr.black)) continue;
        ++rep.pairs_qualifying;
        blocks.push_back(pr.white);
        blocks.push_back(pr.black);
        Color c = rule.loc(pr.white[0]);
        if (rule.loc(pr.black[0]) == c && cells.interior(pr.white) && cells.interior(pr.black)) rep.interior_pair[c] = true;
    }
    if (blocks.empty()) throw Error("empty_set", "no pair reaches the thresholds");
    if (!rep.interior_pair[0] || !rep.interior_pair[1])
        throw Error("no_interior_pair", "the qualifying pairs lack an interior pair of some color");
    std::sort(blocks.begin(), blocks.end());
    Tails tphi = tails(cells, phi);
    std::vector<double> weight;
    for (const Word& b : blocks) weight.push_back(std::exp(birkhoff_bracket(cells, phi, tphi, b).mid()));
    Csr chain = block_chain(rule, blocks, &weight);
    if (strongly_connected(chain).count != 1) throw Error("reducible", "pair subsystem chain is reducible");
    PerronResult right = perron_right(chain), left = perron_right(transpose(chain));
    rep.block = chain_measure(chain, right, left);
    rep.block.provenance = "pushforward-average";
    rep.block.level = n;
    rep.block.label = blocks;
    for (const Word& b : blocks) rep.block.emit.push_back(b[0]);
    // exact expectations of S_n over a block followed by its successor
    auto block_integral = [&](const Potential& f) {
        const int l = f.level;
        double total = 0;
        Word buf;
        for (int x = 0; x < rep.block.states(); ++x) {
            const Word& X = blocks[x];
            double exact = 0;
            for (int i = 0; i + l <= n; ++i) exact += f.v[cells.rank(X.data() + i, l)];
            double tail = 0;
            if (l > 1) {
                for (std::size_t k = rep.block.p.ptr[x]; k < rep.block.p.ptr[x + 1]; ++k) {
                    buf.assign(X.begin(), X.end());
                    const Word& Y = blocks[rep.block.p.col[k]];
                    buf.insert(buf.end(), Y.begin(), Y.begin() + (l - 1));
                    double s = 0;
                    for (int i = n - l + 1; i < n; ++i) s += f.v[cells.rank(buf.data() + i, l)];
                    tail += rep.block.p.val[k] * s;
                }
            }
            total += rep.block.pi[x] * (exact + tail);
        }
        return total / n;
    };
    for (std::size_t j = 0; j < Phi.size(); ++j) {
        rep.integrals.push_back(block_integral(Phi[j]));
        rep.integral_floor.push_back(alpha[j].to_double() - 2 * pair_distortion(Phi[j], tl[j]) / n);
        if (rep.integrals.back() < rep.integral_floor.back() - 1e-12) rep.integrals_ok = false;
    }
    rep.entropy = markov_entropy(rep.block) / n;
    rep.integral_phi = block_integral(phi);
    const Subsystem full = full_subsystem(rule);
    MarkovMeasure eq = equilibrium(cells, full, phi);
    rep.pressure = eq.pressure;
    rep.free_energy = rep.entropy + rep.integral_phi - rep.pressure;
    std::vector<double> masses = cylinder_masses(cells, eq, n, caps);
    for (const Word& b : blocks) rep.mass_union += masses[cells.rank(b.data(), n)];
    cells.for_each_word(n, {}, [&](const Word& w) {
        double m = masses[cells.rank(w.data(), n)];
        rep.max_gibbs = std::max(rep.max_gibbs, m * std::exp(n * rep.pressure - birkhoff_bracket(cells, phi, tphi, w).mid()));
        return true;
    });
    rep.dn_phi = pair_distortion(phi, tphi);
    rep.c = 2 * rep.max_gibbs * std::exp(rep.dn_phi);
    rep.bound = rep.c * std::exp(rep.free_energy * n);
    rep.mass_ok = rep.mass_union <= rep.bound * (1 + 1e-9);
    return rep;
}

namespace {

std::vector<double> equilibrium_coarse(const Cells& cells, const Potential& phi, int coarse) {
    const int L = std::max(phi.level, coarse);
    MarkovMeasure mu = equilibrium(cells, full_subsystem(cells.rule()), lift(cells, phi, L));
    return cylinder_masses(cells, mu, coarse);
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / 2;
}

// Orbit-average coarse masses over the preimages of a generic base point.
std::vector<double> preimage_coarse(const Cells& cells, const Potential& phi, int n, int coarse, Color color) {
    const int K = std::max({phi.level, coarse, 2});
    Potential ph = lift(cells, phi, K);
    Word a = generic_address(cells, color, K - 1);
    WordChain c = word_chain(cells, full_subsystem(cells.rule()), K);
    const int S = c.adj.n;
    std::vector<double> w(S);
    for (int s = 0; s < S; ++s) w[s] = std::exp(ph.v[cells.rank(c.words[s].data(), K)]);
    std::vector<std::vector<char>> ok(n, std::vector<char>(S, 1));
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < S; ++s)
            for (int j = 0; j < K; ++j)
                if (i + j >= n && c.words[s][j] != a[i + j - n]) ok[i][s] = 0;
    std::vector<std::vector<double>> fa(n, std::vector<double>(S, 0.0)), fb(n, std::vector<double>(S, 0.0));
    std::vector<double> la(n, 0.0), lb(n, 0.0);
    for (int s = 0; s < S; ++s) fa[0][s] = ok[0][s];
    for (int i = 1; i < n; ++i) {
        for (int x = 0; x < S; ++x) {
            if (fa[i - 1][x] == 0) continue;
            for (std::size_t k = c.adj.ptr[x]; k < c.adj.ptr[x + 1]; ++k) {
                int y = c.adj.col[k];
                if (ok[i][y]) fa[i][y] += fa[i - 1][x] * w[x];
            }
        }
        double m = *std::max_element(fa[i].begin(), fa[i].end());
        if (m > 0)
            for (double& v : fa[i]) v /= m;
        la[i] = la[i - 1] + (m > 0 ? std::log(m) : 0);
    }
    for (int s = 0; s < S; ++s) fb[n - 1][s] = ok[n - 1][s] ? w[s] : 0;
    for (int i = n - 2; i >= 0; --i) {
        for (int x = 0; x < S; ++x) {
            double s = 0;
            for (std::size_t k = c.adj.ptr[x]; k < c.adj.ptr[x + 1]; ++k) {
                int y = c.adj.col[k];
                if (ok[i + 1][y]) s += fb[i + 1][y];
            }
            fb[i][x] = ok[i][x] ? w[x] * s : 0;
        }
        double m = *std::max_element(fb[i].begin(), fb[i].end());
        if (m > 0)
            for (double& v : fb[i]) v /= m;
        lb[i] = lb[i + 1] + (m > 0 ? std::log(m) : 0);
    }
    double z = 0;
    for (int s = 0; s < S; ++s) z += fa[0][s] * fb[0][s];
    const double logz = std::log(z) + la[0] + lb[0];
    std::vector<double> out(cells.count_words(coarse), 0.0);
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < S; ++s) {
            double v = fa[i][s] * fb[i][s];
            if (v > 0) out[cells.rank(c.words[s].data(), coarse)] += std::exp(std::log(v) + la[i] + lb[i] - logz) / n;
        }
    return out;
}

// Orbit-average coarse masses over period-n itineraries weighted by e^{S_n phi}.
std::vector<double> periodic_coarse(const Cells& cells, const Potential& phi, int n, int coarse) {
    const int K = std::max(phi.level, coarse);
    Potential ph = lift(cells, phi, K);
    WordChain c = word_chain(cells, full_subsystem(cells.rule()), K);
    const int S = c.adj.n;
    std::vector<double> w(S), logdiag(S, -kInf);
    for (int s = 0; s < S; ++s) w[s] = std::exp(ph.v[cells.rank(c.words[s].data(), K)]);
    std::vector<double> cur(S), next(S);
    for (int s0 = 0; s0 < S; ++s0) {
        std::fill(cur.begin(), cur.end(), 0.0);
        cur[s0] = 1.0;
        double ls = 0;
        for (int i = 0; i < n; ++i) {
            std::fill(next.begin(), next.end(), 0.0);
            for (int x = 0; x < S; ++x) {
                if (cur[x] == 0) continue;
                for (std::size_t k = c.adj.ptr[x]; k < c.adj.ptr[x + 1]; ++k) next[c.adj.col[k]] += cur[x] * w[x];
            }
            double m = *std::max_element(next.begin(), next.end());
            if (m == 0) break;
            for (double& v : next) v /= m;
            ls += std::log(m);
            cur.swap(next);
        }
        if (cur[s0] > 0) logdiag[s0] = std::log(cur[s0]) + ls;
    }
    double tot = -kInf;
    for (double x : logdiag) tot = log_add(tot, x);
    std::vector<double> out(cells.count_words(coarse), 0.0);
    for (int s = 0; s < S; ++s)
        if (logdiag[s] > -kInf) out[cells.rank(c.words[s].data(), coarse)] += std::exp(logdiag[s] - tot);
    return out;
}

}  // namespace

EquidistCurve equidistribution_curve(const Cells& cells, const Potential& phi, const NRange& ns, int coarse,
                                     const BaseSpec& base, bool periodic) {
    if (coarse < 1) throw Error("bad_param", "coarse level must be at least 1");
    if (!periodic && base.vertex) throw Error("bad_base", "equidistribution uses a generic base point");
    EquidistCurve ec;
    ec.mode = periodic ? "periodic" : "preimage";
    ec.coarse = coarse;
    std::vector<double> target = equilibrium_coarse(cells, phi, coarse);
    for (int n : ns.values()) {
        EquidistRow row;
        row.n = n;
        std::vector<double> nu = periodic ? periodic_coarse(cells, phi, n, coarse) : preimage_coarse(cells, phi, n, coarse, base.color);
        row.tv = total_variation(nu, target);
        row.bracket = 0;  // orbit weights and coarse words are exact for these bases
        ec.rows.push_back(row);
    }
    return ec;
}

}  // namespace tp
