#include "tilepress/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "tilepress/io.hpp"

namespace tp {

using json = nlohmann::json;

namespace {

void finish(Potential& p) {
    if (p.v.empty()) throw Error("bad_potential", "potential has no values");
    p.vmin = *std::min_element(p.v.begin(), p.v.end());
    p.vmax = *std::max_element(p.v.begin(), p.v.end());
}


constexpr std::uint64_t kPotentialWords = 2'000'000;

}  // namespace

Potential constant_potential(const Cells& cells, const Rational& c, int level) {
    if (level < 1) throw Error("bad_potential", "potential level must be at least 1");
    if (cells.count_words(level) > kPotentialWords) throw Error("cap", "potential level too deep");
    Potential p;
    p.name = "constant " + c.str();
    p.level = level;
    std::size_t count = cells.count_words(level);
    p.exact.assign(count, c);
    p.v.assign(count, c.to_double());
    finish(p);
    return p;
}

Potential parse_potential(const Cells& cells, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("syntax", std::string("potential: ") + e.what());
    }
    if (!j.is_object() || !j.contains("level") || !j.at("level").is_number_integer())
        throw Error("schema", "potential.level: missing integer field");
    int level = j.at("level").get<int>();
    auto value_of = [](const json& v, const std::string& where) {
        if (v.is_string()) return Rational::parse(v.get<std::string>());
        if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
        throw Error("schema", where + ": values are strings \"p/q\" or integers");
    };
    Rational dflt = j.contains("default") ? value_of(j.at("default"), "potential.default") : Rational(0);
    Potential p = constant_potential(cells, dflt, level);
    p.name = j.value("name", std::string("potential"));
    if (j.contains("values")) {
        std::size_t k = 0;
        for (const auto& e : j.at("values")) {
            std::string where = "potential.values[" + std::to_string(k++) + "]";
            if (!e.contains("word") || !e.at("word").is_array()) throw Error("schema", where + ".word: missing array");
            Word w = e.at("word").get<Word>();
            if (static_cast<int>(w.size()) != level) throw Error("schema", where + ".word: length must equal the level");
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (w[i] < 0 || w[i] >= cells.tiles()) throw Error("unknown_tile", where + ".word: unknown tile");
                if (i && cells.rule().loc(w[i]) != cells.rule().col(w[i - 1]))
                    throw Error("schema", where + ".word: not admissible");
            }
            Rational r = value_of(e.at("value"), where + ".value");
            auto idx = cells.rank(w.data(), level);
            p.exact[idx] = r;
            p.v[idx] = r.to_double();
        }
    }
    finish(p);
    return p;
}

Potential load_potential(const Cells& cells, const std::string& spec) {
    if (spec == "zero") {
        Potential p = constant_potential(cells, Rational(0));
        p.name = "zero";
        return p;
    }
    return parse_potential(cells, read_file(spec));
}

std::string serialize_potential(const Cells& cells, const Potential& p) {
    json j;
    j["name"] = p.name;
    j["level"] = p.level;
    j["default"] = "0";
    json vals = json::array();
    std::size_t r = 0;
    cells.for_each_word(p.level, {}, [&](const Word& w) {
        std::string v = p.is_exact() ? p.exact[r].str() : fmt12(p.v[r]);
        if (v != "0") vals.push_back({{"word", w}, {"value", v}});
        ++r;
        return true;
    });
    j["values"] = vals;
    return j.dump(1) + "\n";
}

Potential lift(const Cells& cells, const Potential& p, int level) {
    if (level < p.level) throw Error("bad_potential", "cannot lower a potential's level");
    if (level == p.level) return p;
    if (cells.count_words(level) > kPotentialWords) throw Error("cap", "potential level too deep");
    Potential q;
    q.name = p.name;
    q.level = level;
    cells.for_each_word(level, {}, [&](const Word& w) {
        auto r = cells.rank(w.data(), p.level);
        q.v.push_back(p.v[r]);
        if (p.is_exact()) q.exact.push_back(p.exact[r]);
        return true;
    });
    finish(q);
    return q;
}

Potential combine(const Cells& cells, const Potential& p, double a, const Potential& q, double b) {
    int level = std::max(p.level, q.level);
    Potential pl = lift(cells, p, level), ql = lift(cells, q, level);
    Potential out;
    out.name = "combination";
    out.level = level;
    out.v.resize(pl.v.size());
    for (std::size_t i = 0; i < pl.v.size(); ++i) out.v[i] = a * pl.v[i] + b * ql.v[i];
    bool integral = a == std::round(a) && b == std::round(b) && std::abs(a) < 1e9 && std::abs(b) < 1e9;
    if (pl.is_exact() && ql.is_exact() && integral) {
        out.exact.resize(pl.v.size());
        for (std::size_t i = 0; i < pl.v.size(); ++i)
            out.exact[i] = Rational(static_cast<std::int64_t>(a)) * pl.exact[i] + Rational(static_cast<std::int64_t>(b)) * ql.exact[i];
    }
    finish(out);
    return out;
}

WordChain word_chain(const Cells& cells, const Subsystem& F, int level, const Caps& caps) {
    if (cells.count_words(level) > caps.words) throw Error("cap", "word chain level exceeds the enumeration cap");
    const auto& rule = cells.rule();
    WordChain c;
    c.level = level;
    c.state_of.assign(cells.count_words(level), -1);
    for_each_subsystem_word(rule, F, level, [&](const Word& w) {
        c.state_of[cells.rank(w.data(), level)] = static_cast<int>(c.words.size());
        c.words.push_back(w);
        return true;
    });
    Word y(level);
    for (const Word& x : c.words) {
        for (int t : F.ids) {
            if (rule.loc(t) != rule.col(x.back())) continue;
            std::copy(x.begin() + 1, x.end(), y.begin());
            y.back() = t;
            int s = c.state_of[cells.rank(y.data(), level)];
            if (s >= 0) {
                c.adj.col.push_back(s);
                c.adj.val.push_back(1.0);
            }
        }
        c.adj.add_row();
    }
    return c;
}

Tails tails(const Cells& cells, const Potential& phi) {
    Tails t;
    t.k = phi.level - 1;
    if (t.k == 0) {
        t.lo = {0.0};
        t.hi = {0.0};
        return t;
    }
    const int k = t.k, l = phi.level;
    const auto& rule = cells.rule();
    std::size_t count = cells.count_words(k);
    t.lo.assign(count, std::numeric_limits<double>::infinity());
    t.hi.assign(count, -std::numeric_limits<double>::infinity());
    std::vector<int> by_loc[2];
    for (int u = 0; u < cells.tiles(); ++u) by_loc[rule.loc(u)].push_back(u);
    Word buf(2 * k);
    cells.for_each_word(k, {}, [&](const Word& s) {
        std::copy(s.begin(), s.end(), buf.begin());
        auto r = cells.rank(s.data(), k);
        // depth-first over completions
        std::function<void(int)> rec = [&](int pos) {
            if (pos == 2 * k) {
                double sum = 0;
                for (int i = 0; i < k; ++i) sum += phi.v[cells.rank(buf.data() + i, l)];
                t.lo[r] = std::min(t.lo[r], sum);
                t.hi[r] = std::max(t.hi[r], sum);
                return;
            }
            for (int u : by_loc[rule.col(buf[pos - 1])]) {
                buf[pos] = u;
                rec(pos + 1);
            }
        };
        rec(k);
        return true;
    });
    return t;
}

Bracket birkhoff_bracket(const Cells& cells, const Potential& phi, const Tails& t, const Word& w) {
    const int n = static_cast<int>(w.size()), l = phi.level;
    Bracket b;
    if (n >= l) {
        double exact = 0;
        for (int i = 0; i + l <= n; ++i) exact += phi.v[cells.rank(w.data() + i, l)];
        b.lo = exact + t.lo_at(cells, w.data() + n - t.k);
        b.hi = exact + t.hi_at(cells, w.data() + n - t.k);
        return b;
    }
    // short word: scan all completions to length n + l - 1
    const auto& rule = cells.rule();
    b.lo = std::numeric_limits<double>::infinity();
    b.hi = -b.lo;
    Word buf(n + l - 1);
    std::copy(w.begin(), w.end(), buf.begin());
    std::function<void(int)> rec = [&](int pos) {
        if (pos == n + l - 1) {
            double sum = 0;
            for (int i = 0; i < n; ++i) sum += phi.v[cells.rank(buf.data() + i, l)];
            b.lo = std::min(b.lo, sum);
            b.hi = std::max(b.hi, sum);
            return;
        }
        for (int u = 0; u < cells.tiles(); ++u)
            if (rule.loc(u) == rule.col(buf[pos - 1])) {
                buf[pos] = u;
                rec(pos + 1);
            }
    };
    rec(n);
    return b;
}

Bracket birkhoff_bracket(const Cells& cells, const Potential& phi, const Word& w) {
    return birkhoff_bracket(cells, phi, tails(cells, phi), w);
}

double distortion(const Cells& cells, const Potential& phi, int n) {
    if (n < 1) throw Error("bad_param", "n must be at least 1");
    Tails t = tails(cells, phi);
    double d = 0;
    if (n >= phi.level) {
        for (std::size_t i = 0; i < t.lo.size(); ++i) d = std::max(d, t.hi[i] - t.lo[i]);
        return d;
    }
    cells.for_each_word(n, {}, [&](const Word& w) {
        Bracket b = birkhoff_bracket(cells, phi, t, w);
        d = std::max(d, b.hi - b.lo);
        return true;
    });
    return d;
}

SpectralData spectral(const Cells& cells, const Subsystem& F, const Potential& phi, double tol) {
    SpectralData sd;
    sd.chain = word_chain(cells, F, phi.level);
    Csr weighted = sd.chain.adj;
    for (int i = 0; i < weighted.n; ++i) {
        double w = std::exp(phi.v[cells.rank(sd.chain.words[i].data(), phi.level)]);
        for (std::size_t k = weighted.ptr[i]; k < weighted.ptr[i + 1]; ++k) weighted.val[k] = w;
    }
    sd.states = essential_nodes(weighted);
    if (sd.states.empty()) throw Error("empty_chain", "subsystem has no bi-infinite words");
    sd.m = restrict_to(weighted, sd.states);
    Components comp = strongly_connected(sd.m);
    sd.irreducible = comp.count == 1;
    if (sd.irreducible) {
        sd.right = perron_right(sd.m, tol);
        sd.left = perron_right(transpose(sd.m), tol);
        sd.log_lambda = std::log(sd.right.lambda);
        sd.components.push_back({sd.m.n, sd.log_lambda, sd.chain.words[sd.states[0]]});
        return sd;
    }
    sd.log_lambda = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < comp.count; ++c) {
        if (!comp.nontrivial[c]) continue;
        std::vector<int> nodes;
        for (int i = 0; i < sd.m.n; ++i)
            if (comp.comp[i] == c) nodes.push_back(i);
        PerronResult pr = perron_right(restrict_to(sd.m, nodes), tol);
        ComponentPressure cp{static_cast<int>(nodes.size()), std::log(pr.lambda), sd.chain.words[sd.states[nodes[0]]]};
        sd.log_lambda = std::max(sd.log_lambda, cp.log_lambda);
        sd.components.push_back(cp);
    }
    std::sort(sd.components.begin(), sd.components.end(),
              [](const ComponentPressure& a, const ComponentPressure& b) { return a.sample < b.sample; });
    return sd;
}

double log_zn(const Cells& cells, const Subsystem& F, const Potential& phi, int n, int which) {
    if (n < 1) throw Error("bad_param", "n must be at least 1");
    Tails t = tails(cells, phi);
    auto pick = [&](const Bracket& b) { return which < 0 ? b.lo : which > 0 ? b.hi : b.mid(); };
    const int l = phi.level;
    if (n < l) {
        std::vector<double> terms;
        for_each_subsystem_word(cells.rule(), F, n, [&](const Word& w) {
            terms.push_back(pick(birkhoff_bracket(cells, phi, t, w)));
            return true;
        });
        double top = *std::max_element(terms.begin(), terms.end());
        double s = 0;
        for (double x : terms) s += std::exp(x - top);
        return top + std::log(s);
    }
    WordChain c = word_chain(cells, F, l);
    std::vector<double> phis(c.adj.n), v(c.adj.n), y;
    for (int i = 0; i < c.adj.n; ++i) {
        const Word& x = c.words[i];
        phis[i] = phi.v[cells.rank(x.data(), l)];
        Bracket tb{t.lo_at(cells, x.data() + 1), t.hi_at(cells, x.data() + 1)};
        if (t.k == 0) tb = {0, 0};
        v[i] = phis[i] + pick(tb);
    }
    // log-domain start, then scaled linear iteration
    double top = *std::max_element(v.begin(), v.end());
    for (double& x : v) x = std::exp(x - top);
    double log_scale = top;
    Csr m = c.adj;
    for (int i = 0; i < m.n; ++i)
        for (std::size_t k = m.ptr[i]; k < m.ptr[i + 1]; ++k) m.val[k] = std::exp(phis[i]);
    for (int step = 0; step < n - l; ++step) {
        multiply(m, v, y);
        double mx = *std::max_element(y.begin(), y.end());
        if (!(mx > 0)) return -std::numeric_limits<double>::infinity();
        for (double& x : y) x /= mx;
        log_scale += std::log(mx);
        v.swap(y);
    }
    double s = 0;
    for (double x : v) s += x;
    return log_scale + std::log(s);
}

PressureEstimate pressure(const Cells& cells, const Subsystem& F, const Potential& phi, int zn, double tol) {
    SpectralData sd = spectral(cells, F, phi, tol);
    PressureEstimate pe;
    pe.method = "spectral";
    pe.value = sd.log_lambda;
    pe.irreducible = sd.irreducible;
    pe.components = sd.components;
    pe.n = zn;
    pe.log_zn = log_zn(cells, F, phi, zn);
    pe.dn = distortion(cells, phi, zn);
    const int l = phi.level, k = zn - l;
    bool all_essential = sd.states.size() == sd.chain.words.size();
    if (sd.irreducible && all_essential && k > 0) {
        // Z_n = 1^T M^k g and M^k r = lambda^k r give min(g/r) sum(r) <= Z_n / lambda^k <= max(g/r) sum(r)
        Tails t = tails(cells, phi);
        double gr_lo = INFINITY, gr_hi = -INFINITY, sum_r = 0;
        for (int i = 0; i < sd.m.n; ++i) {
            const Word& x = sd.chain.words[sd.states[i]];
            double tm = t.k ? t.mid_at(cells, x.data() + 1) : 0.0;
            double lg = phi.v[cells.rank(x.data(), l)] + tm - std::log(sd.right.vec[i]);
            gr_lo = std::min(gr_lo, lg);
            gr_hi = std::max(gr_hi, lg);
            sum_r += sd.right.vec[i];
        }
        // pad for the Perron vector's own residual and rounding in log Z_n
        double pad = 4 * tol + 1e-12 * (1 + std::abs(pe.log_zn)) / k;
        pe.lo = (pe.log_zn - gr_hi - std::log(sum_r)) / k - pad;
        pe.hi = (pe.log_zn - gr_lo - std::log(sum_r)) / k + pad;
    } else {
        double slack = (pe.dn + std::log(2.0)) / zn;
        pe.lo = pe.log_zn / zn - slack;
        pe.hi = pe.log_zn / zn + slack;
    }
    return pe;
}

MarkovMeasure chain_measure(const Csr& m, const PerronResult& right, const PerronResult& left) {
    MarkovMeasure mu;
    mu.p = m;
    const auto& r = right.vec;
    const auto& l = left.vec;
    for (int i = 0; i < m.n; ++i) {
        double s = 0;
        for (std::size_t k = m.ptr[i]; k < m.ptr[i + 1]; ++k) {
            mu.p.val[k] = m.val[k] * r[m.col[k]];
            s += mu.p.val[k];
        }
        for (std::size_t k = m.ptr[i]; k < m.ptr[i + 1]; ++k) mu.p.val[k] /= s;
    }
    mu.pi.resize(m.n);
    double z = 0;
    for (int i = 0; i < m.n; ++i) z += mu.pi[i] = l[i] * r[i];
    for (double& x : mu.pi) x /= z;
    mu.pressure = std::log(right.lambda);
    return mu;
}

MarkovMeasure equilibrium(const Cells& cells, const Subsystem& F, const Potential& phi, double tol) {
    SpectralData sd = spectral(cells, F, phi, tol);
    if (!sd.irreducible) {
        std::string msg = "chain is reducible; components:";
        for (const auto& c : sd.components)
            msg += " [" + word_str(c.sample) + " size " + std::to_string(c.size) + " pressure " + fmt12(c.log_lambda) + "]";
        throw Error("reducible", msg);
    }
    MarkovMeasure mu = chain_measure(sd.m, sd.right, sd.left);
    mu.level = phi.level;
    mu.provenance = "equilibrium";
    for (int s : sd.states) {
        mu.label.push_back(sd.chain.words[s]);
        mu.emit.push_back(sd.chain.words[s][0]);
    }
    return mu;
}

namespace {

using Sparse = std::vector<std::pair<int, double>>;

void advance(const MarkovMeasure& mu, const Sparse& cur, int letter, Sparse& next) {
    std::map<int, double> acc;
    for (auto [s, w] : cur)
        for (std::size_t k = mu.p.ptr[s]; k < mu.p.ptr[s + 1]; ++k) {
            int t = mu.p.col[k];
            if (mu.emit[t] == letter) acc[t] += w * mu.p.val[k];
        }
    next.assign(acc.begin(), acc.end());
}

Sparse start(const MarkovMeasure& mu, int letter) {
    Sparse s;
    for (int i = 0; i < mu.states(); ++i)
        if (mu.emit[i] == letter && mu.pi[i] > 0) s.push_back({i, mu.pi[i]});
    return s;
}

double total(const Sparse& s) {
    double t = 0;
    for (auto& e : s) t += e.second;
    return t;
}

}  // namespace

double cylinder_mass(const MarkovMeasure& mu, const Word& w) {
    if (w.empty()) return 1.0;
    Sparse cur = start(mu, w[0]), next;
    for (std::size_t i = 1; i < w.size() && !cur.empty(); ++i) {
        advance(mu, cur, w[i], next);
        cur.swap(next);
    }
    return total(cur);
}

std::vector<double> cylinder_masses(const Cells& cells, const MarkovMeasure& mu, int n, const Caps& caps) {
    if (cells.count_words(n) > caps.words) throw Error("cap", "cylinder level exceeds the enumeration cap");
    std::vector<double> out(cells.count_words(n), 0.0);
    const auto& rule = cells.rule();
    std::vector<Sparse> fwd(n);
    Word w(n);
    std::function<void(int)> rec = [&](int depth) {
        for (int t = 0; t < cells.tiles(); ++t) {
            if (depth > 0 && rule.loc(t) != rule.col(w[depth - 1])) continue;
            w[depth] = t;
            if (depth == 0) fwd[0] = start(mu, t);
            else advance(mu, fwd[depth - 1], t, fwd[depth]);
            if (fwd[depth].empty()) continue;
            if (depth == n - 1) out[cells.rank(w.data(), n)] = total(fwd[depth]);
            else rec(depth + 1);
        }
    };
    rec(0);
    return out;
}

GibbsReport gibbs_report(const Cells& cells, const Subsystem& F, const Potential& phi, int cap, const Caps& caps) {
    SpectralData sd = spectral(cells, F, phi);
    if (!sd.irreducible) throw Error("reducible", "Gibbs check needs an irreducible chain");
    MarkovMeasure mu = chain_measure(sd.m, sd.right, sd.left);
    mu.level = phi.level;
    for (int s : sd.states) mu.emit.push_back(sd.chain.words[s][0]);
    const double P = sd.log_lambda, lambda = sd.right.lambda;
    Tails t = tails(cells, phi);
    GibbsReport g;
    double lr = 0, lmin = INFINITY, lmax = 0, qmin = INFINITY, qmax = 0;
    for (int i = 0; i < sd.m.n; ++i) {
        lr += sd.left.vec[i] * sd.right.vec[i];
        lmin = std::min(lmin, sd.left.vec[i]);
        lmax = std::max(lmax, sd.left.vec[i]);
        const Word& x = sd.chain.words[sd.states[i]];
        double tm = t.k ? t.mid_at(cells, x.data() + 1) : 0.0;
        double q = sd.right.vec[i] * std::pow(lambda, phi.level) * std::exp(-phi.v[cells.rank(x.data(), phi.level)] - tm);
        qmin = std::min(qmin, q);
        qmax = std::max(qmax, q);
    }
    g.c_lo = lmin * qmin / lr;
    g.c_hi = lmax * qmax / lr;

    // phi = 0 with rational root, kernel and stationary vector: redo the ratios exactly
    using BigQ = boost::multiprecision::cpp_rational;
    auto as_big = [](double x) -> std::optional<BigQ> {
        auto r = recognize_rational(x);
        if (!r) return std::nullopt;
        return BigQ(r->num()) / r->den();
    };
    bool exact = phi.is_exact() && std::all_of(phi.exact.begin(), phi.exact.end(), [](const Rational& r) { return r.num() == 0; });
    std::vector<BigQ> pq, piq;
    std::optional<BigQ> lam = as_big(lambda);
    exact = exact && lam;
    for (std::size_t k = 0; exact && k < mu.p.nnz(); ++k) {
        auto r = as_big(mu.p.val[k]);
        if (!r) exact = false; else pq.push_back(*r);
    }
    for (int i = 0; exact && i < mu.states(); ++i) {
        auto r = as_big(mu.pi[i]);
        if (!r) exact = false; else piq.push_back(*r);
    }
    g.exact = exact;
    auto exact_ratios = [&](int n, GibbsLevel& lv) {
        std::optional<BigQ> lo, hi;
        BigQ scale = 1;
        for (int i = 0; i < n; ++i) scale *= *lam;
        const auto& rule = cells.rule();
        // forward mass of state paths emitting a prefix, keyed by (last letter, sparse vector); words
        // sharing a key have equal futures, so one level-by-level pass over distinct keys suffices
        using Fwd = std::vector<std::pair<int, BigQ>>;
        std::set<std::pair<int, Fwd>> level;
        for (int t : F.ids) {
            Fwd f;
            for (int s = 0; s < mu.states(); ++s)
                if (mu.emit[s] == t && piq[s] != 0) f.push_back({s, piq[s]});
            if (!f.empty()) level.insert({t, std::move(f)});
        }
        for (int depth = 1; depth < n; ++depth) {
            std::set<std::pair<int, Fwd>> next;
            for (const auto& [last, f] : level)
                for (int t : F.ids) {
                    if (rule.loc(t) != rule.col(last)) continue;
                    std::map<int, BigQ> acc;
                    for (const auto& [s, x] : f)
                        for (std::size_t k = mu.p.ptr[s]; k < mu.p.ptr[s + 1]; ++k)
                            if (mu.emit[mu.p.col[k]] == t && pq[k] != 0) acc[mu.p.col[k]] += x * pq[k];
                    if (!acc.empty()) next.insert({t, Fwd(acc.begin(), acc.end())});
                }
            level = std::move(next);
        }
        for (const auto& [last, f] : level) {
            BigQ m = 0;
            for (const auto& e : f) m += e.second;
            BigQ r = m * scale;
            if (!lo || r < *lo) lo = r;
            if (!hi || r > *hi) hi = r;
        }
        auto str = [](const BigQ& q) {
            return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
        };
        if (lo) lv.exact_min = str(*lo), lv.exact_max = str(*hi);
    };
    // Masses by a depth-first walk over the subsystem's n-words with forward vectors, so no
    // table over all n-words of the full rule is needed.
    const auto& rule = cells.rule();
    const int l = phi.level;
    (void)caps;
    for (int n = 1; n <= cap; ++n) {
        GibbsLevel lv;
        lv.n = n;
        lv.min_ratio = INFINITY;
        Word w(n);
        // forward mass per state, kept sparse: only states emitting the current letter are live
        std::vector<std::vector<std::pair<int, double>>> fwd(n);
        std::vector<double> partial(n + 1, 0.0);
        std::function<void(int)> walk = [&](int depth) {
            if (depth == n) {
                double m = 0;
                for (const auto& e : fwd[n - 1]) m += e.second;
                if (m <= 0) return;
                lv.mass_sum += m;
                double mid = n >= l ? partial[n] + t.mid_at(cells, w.data() + n - t.k) : birkhoff_bracket(cells, phi, t, w).mid();
                double ratio = m * std::exp(n * P - mid);
                lv.min_ratio = std::min(lv.min_ratio, ratio);
                lv.max_ratio = std::max(lv.max_ratio, ratio);
                return;
            }
            for (int letter : F.ids) {
                if (depth && rule.loc(letter) != rule.col(w[depth - 1])) continue;
                w[depth] = letter;
                auto& next = fwd[depth];
                next.clear();
                if (depth == 0) {
                    for (int s = 0; s < mu.states(); ++s)
                        if (mu.emit[s] == letter && mu.pi[s] > 0) next.push_back({s, mu.pi[s]});
                } else {
                    for (const auto& [s, f] : fwd[depth - 1])
                        for (std::size_t k = mu.p.ptr[s]; k < mu.p.ptr[s + 1]; ++k) {
                            int c = mu.p.col[k];
                            if (mu.emit[c] != letter || mu.p.val[k] <= 0) continue;
                            auto it = std::find_if(next.begin(), next.end(), [c](const auto& e) { return e.first == c; });
                            if (it == next.end()) next.push_back({c, f * mu.p.val[k]});
                            else it->second += f * mu.p.val[k];
                        }
                }
                if (next.empty()) continue;
                partial[depth + 1] = partial[depth] + (depth + 1 >= l ? phi.v[cells.rank(w.data() + depth + 1 - l, l)] : 0.0);
                walk(depth + 1);
            }
        };
        walk(0);
        if (exact) exact_ratios(n, lv);
        if (n >= phi.level && (lv.min_ratio < g.c_lo * (1 - 1e-9) || lv.max_ratio > g.c_hi * (1 + 1e-9))) g.within = false;
        g.levels.push_back(lv);
    }
    return g;
}

double markov_entropy(const MarkovMeasure& mu) {
    double h = 0;
    for (int i = 0; i < mu.states(); ++i)
        for (std::size_t k = mu.p.ptr[i]; k < mu.p.ptr[i + 1]; ++k) {
            double p = mu.p.val[k];
            if (p > 0) h -= mu.pi[i] * p * std::log(p);
        }
    return h;
}

double integral(const Cells& cells, const MarkovMeasure& mu, const Potential& psi) {
    std::vector<double> masses = cylinder_masses(cells, mu, psi.level);
    double s = 0;
    for (std::size_t i = 0; i < masses.size(); ++i) s += masses[i] * psi.v[i];
    return s;
}

MeasureStats measure_stats(const Cells& cells, const MarkovMeasure& mu, const Potential& phi, double pressure_phi,
                           const std::vector<Potential>& psis) {
    MeasureStats st;
    st.entropy = markov_entropy(mu);
    for (const auto& psi : psis) st.integrals.push_back(integral(cells, mu, psi));
    st.free_energy = st.entropy + integral(cells, mu, phi) - pressure_phi;
    return st;
}

namespace {

// Minimum cycle mean of edge weights w(source) inside one strongly connected node set.
double karp_min(const Csr& a, const std::vector<int>& nodes, const std::vector<double>& w) {
    const int N = static_cast<int>(nodes.size());
    std::vector<int> where(a.n, -1);
    for (int i = 0; i < N; ++i) where[nodes[i]] = i;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> D(N + 1, std::vector<double>(N, inf));
    D[0][0] = 0;
    for (int k = 1; k <= N; ++k)
        for (int i = 0; i < N; ++i) {
            if (D[k - 1][i] == inf) continue;
            int u = nodes[i];
            for (std::size_t e = a.ptr[u]; e < a.ptr[u + 1]; ++e) {
                int j = where[a.col[e]];
                if (j < 0) continue;
                D[k][j] = std::min(D[k][j], D[k - 1][i] + w[u]);
            }
        }
    double best = inf;
    for (int v = 0; v < N; ++v) {
        if (D[N][v] == inf) continue;
        double worst = -inf;
        for (int k = 0; k < N; ++k)
            if (D[k][v] < inf) worst = std::max(worst, (D[N][v] - D[k][v]) / (N - k));
        best = std::min(best, worst);
    }
    return best;
}

}  // namespace

std::pair<double, double> cycle_mean_range(const Cells& cells, const Subsystem& F, const Potential& psi) {
    WordChain c = word_chain(cells, F, psi.level);
    std::vector<double> w(c.adj.n), nw(c.adj.n);
    for (int i = 0; i < c.adj.n; ++i) {
        w[i] = psi.v[cells.rank(c.words[i].data(), psi.level)];
        nw[i] = -w[i];
    }
    Components comp = strongly_connected(c.adj);
    double lo = INFINITY, hi = -INFINITY;
    for (int k = 0; k < comp.count; ++k) {
        if (!comp.nontrivial[k]) continue;
        std::vector<int> nodes;
        for (int i = 0; i < c.adj.n; ++i)
            if (comp.comp[i] == k) nodes.push_back(i);
        lo = std::min(lo, karp_min(c.adj, nodes, w));
        hi = std::max(hi, -karp_min(c.adj, nodes, nw));
    }
    return {lo, hi};
}

std::vector<double> Grid::values() const {
    if (!(step > 0) || b < a) throw Error("bad_param", "grid needs a <= b and step > 0");
    std::vector<double> out;
    long count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 1'000'000) throw Error("bad_param", "grid too large");
    for (long i = 0; i < count; ++i) out.push_back(a + i * step);
    return out;
}

Grid Grid::parse(const std::string& s) {
    Grid g;
    auto p1 = s.find(':');
    auto p2 = s.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    try {
        if (p1 == std::string::npos) {
            g.a = g.b = std::stod(s);
            g.step = 1;
        } else {
            g.a = std::stod(s.substr(0, p1));
            if (p2 == std::string::npos) {
                g.b = std::stod(s.substr(p1 + 1));
                g.step = 1;
            } else {
                g.b = std::stod(s.substr(p1 + 1, p2 - p1 - 1));
                g.step = std::stod(s.substr(p2 + 1));
            }
        }
    } catch (const std::logic_error&) {
        throw Error("bad_param", "bad grid '" + s + "', expected a:b:step");
    }
    g.values();
    return g;
}

namespace {

// P(phi + t psi) on the full chain at the common level, reusing the chain.
struct PressureFamily {
    const Cells& cells;
    WordChain chain;
    std::vector<double> phi, psi;

    PressureFamily(const Cells& c, const Potential& ph, const Potential& ps) : cells(c) {
        int l = std::max(ph.level, ps.level);
        Potential a = lift(c, ph, l), b = lift(c, ps, l);
        chain = word_chain(c, full_subsystem(c.rule()), l);
        for (const Word& w : chain.words) {
            phi.push_back(a.v[c.rank(w.data(), l)]);
            psi.push_back(b.v[c.rank(w.data(), l)]);
        }
    }

    double operator()(double t) const {
        Csr m = chain.adj;
        double shift = -INFINITY;
        for (int i = 0; i < m.n; ++i) shift = std::max(shift, phi[i] + t * psi[i]);
        for (int i = 0; i < m.n; ++i)
            for (std::size_t k = m.ptr[i]; k < m.ptr[i + 1]; ++k) m.val[k] = std::exp(phi[i] + t * psi[i] - shift);
        return std::log(perron_right(m).lambda) + shift;
    }
};

double golden_max(const std::function<double(double)>& f, double a, double b, double* arg) {
    const double g = (std::sqrt(5.0) - 1) / 2;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && b - a > 1e-12 * (1 + std::abs(a) + std::abs(b)); ++it) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    *arg = fc > fd ? c : d;
    return std::max(fc, fd);
}

double rate_from_grid(const PressureFamily& P, const std::vector<double>& ts, const std::vector<double>& qs, double p0,
                      double x, double* t_star, bool* edge) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i] * x - qs[i] > ts[best] * x - qs[best]) best = i;
    double val = ts[best] * x - qs[best];
    double arg = ts[best];
    if (edge) *edge = best == 0 || best + 1 == ts.size();
    if (ts.size() >= 3) {
        double a = ts[best == 0 ? 0 : best - 1], b = ts[std::min(best + 1, ts.size() - 1)];
        double ga;
        double gv = golden_max([&](double t) { return t * x - (P(t) - p0); }, a, b, &ga);
        if (gv > val) {
            val = gv;
            arg = ga;
        }
    }
    if (t_star) *t_star = arg;
    return std::max(val, 0.0);
}

}  // namespace

double pressure_shift(const Cells& cells, const Potential& phi, const Potential& psi, double t, double p0) {
    PressureFamily P(cells, phi, psi);
    return P(t) - p0;
}

double rate_at(const Cells& cells, const Potential& phi, const Potential& psi, double x, const Grid& tgrid, double p0,
               double* t_star, bool* edge) {
    PressureFamily P(cells, phi, psi);
    auto ts = tgrid.values();
    std::vector<double> qs;
    for (double t : ts) qs.push_back(P(t) - p0);
    return rate_from_grid(P, ts, qs, p0, x, t_star, edge);
}

RateCurve legendre_rate(const Cells& cells, const Potential& phi, const Potential& psi, const Grid& xgrid, const Grid& tgrid) {
    const Subsystem full = full_subsystem(cells.rule());
    PressureFamily P(cells, phi, psi);
    const double p0 = P(0.0);
    RateCurve rc;
    std::tie(rc.xmin, rc.xmax) = cycle_mean_range(cells, full, lift(cells, psi, std::max(phi.level, psi.level)));
    {
        int l = std::max(phi.level, psi.level);
        MarkovMeasure mu = equilibrium(cells, full, lift(cells, phi, l));
        rc.mean = integral(cells, mu, psi);
    }
    auto ts = tgrid.values();
    std::vector<double> qs;
    for (double t : ts) qs.push_back(P(t) - p0);
    const double tol = 1e-12;
    for (double x : xgrid.values()) {
        RatePoint pt;
        pt.x = x;
        if (x < rc.xmin - tol || x > rc.xmax + tol) {
            pt.k = std::numeric_limits<double>::infinity();
        } else {
            bool edge = false;
            pt.k = rate_from_grid(P, ts, qs, p0, x, &pt.t, &edge);
            if (edge) rc.t_grid_edge = true;
        }
        rc.points.push_back(pt);
    }
    // convexity on the finite part, and the grid argmin
    const auto& p = rc.points;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        if (!std::isfinite(p[i - 1].k) || !std::isfinite(p[i].k) || !std::isfinite(p[i + 1].k)) continue;
        double lhs = p[i].k * (p[i + 1].x - p[i - 1].x);
        double rhs = p[i - 1].k * (p[i + 1].x - p[i].x) + p[i + 1].k * (p[i].x - p[i - 1].x);
        if (lhs > rhs + 1e-9 * (1 + std::abs(rhs))) rc.convex = false;
    }
    for (std::size_t i = 0; i < p.size(); ++i)
        if (std::isfinite(p[i].k) && (rc.argmin < 0 || p[i].k < p[rc.argmin].k)) rc.argmin = static_cast<int>(i);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (static_cast<int>(i) != rc.argmin && rc.argmin >= 0 && p[i].k <= p[rc.argmin].k + 1e-12) rc.unique_argmin = false;
    return rc;
}

}  // namespace tp
