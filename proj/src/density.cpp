#include "tilepress/density.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "tilepress/io.hpp"

namespace tp {

using json = nlohmann::json;

namespace {

Rational json_rational(const json& v, const std::string& where) {
    if (v.is_string()) return Rational::parse(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    throw Error("schema", where + ": expected \"p/q\" or an integer");
}

std::string ids_spec(const json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (!v.is_array()) throw Error("schema", where + ": expected a tile list");
    std::string s;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw Error("schema", where + ": tile ids are integers");
        s += (s.empty() ? "" : ",") + std::to_string(x.get<int>());
    }
    return s;
}

}  // namespace

DensitySpec parse_density_spec(const Cells& cells, const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("syntax", std::string("targets: ") + e.what());
    }
    if (!j.is_object() || !j.contains("targets") || !j.at("targets").is_array() || j.at("targets").empty())
        throw Error("schema", "targets: missing non-empty array");
    DensitySpec spec;
    std::size_t k = 0;
    for (const auto& t : j.at("targets")) {
        std::string where = "targets[" + std::to_string(k++) + "]";
        DensityTarget d;
        d.weight = t.contains("weight") ? json_rational(t.at("weight"), where + ".weight") : Rational(1);
        if (t.contains("cycle")) {
            d.cycle = true;
            d.word = t.at("cycle").get<Word>();
            d.label = "cycle:" + word_str(d.word);
        } else if (t.contains("drop")) {
            std::string s = ids_spec(t.at("drop"), where + ".drop");
            d.sub = subsystem_from_spec(cells.rule(), s, true);
            d.label = "drop:" + s;
        } else if (t.contains("keep")) {
            std::string s = ids_spec(t.at("keep"), where + ".keep");
            d.sub = subsystem_from_spec(cells.rule(), s, false);
            d.label = "keep:" + s;
        } else {
            throw Error("schema", where + ": needs one of keep, drop, cycle");
        }
        if (!(Rational(0) < d.weight)) throw Error("schema", where + ".weight: must be positive");
        spec.targets.push_back(d);
    }
    Rational total(0);
    for (const auto& t : spec.targets) total = total + t.weight;
    if (!(total == Rational(1))) throw Error("schema", "targets: weights must sum to 1");
    if (j.contains("observables")) {
        for (const auto& o : j.at("observables")) {
            Potential p;
            if (o.is_object()) {
                p = parse_potential(cells, o.dump());
            } else if (o.is_string()) {
                std::string s = o.get<std::string>();
                if (s != "zero" && std::filesystem::path(s).is_relative()) s = (std::filesystem::path(base_dir) / s).string();
                p = load_potential(cells, s);
            } else {
                throw Error("schema", "observables: entries are paths or potential objects");
            }
            if (p.level != 1 || !p.is_exact()) throw Error("schema", "observables: level 1 with rational values required");
            spec.observables.push_back(p);
        }
    }
    return spec;
}

MarkovMeasure target_measure(const Cells& cells, const DensityTarget& t) {
    if (!t.cycle) {
        MarkovMeasure mu = equilibrium(cells, t.sub, constant_potential(cells, Rational(0)));
        mu.provenance = "target:" + t.label;
        return mu;
    }
    const auto& rule = cells.rule();
    const int p = static_cast<int>(t.word.size());
    if (p == 0) throw Error("schema", "cycle: empty word");
    for (int i = 0; i < p; ++i) {
        int a = t.word[i], b = t.word[(i + 1) % p];
        if (a < 0 || a >= rule.size() || b < 0 || b >= rule.size()) throw Error("schema", "cycle: tile id out of range");
        if (rule.loc(b) != rule.col(a)) throw Error("non_ergodic", "cycle: word is not cyclically admissible");
    }
    for (int d = 1; d < p; ++d) {
        if (p % d) continue;
        bool power = true;
        for (int i = 0; i < p && power; ++i) power = t.word[i] == t.word[i % d];
        if (power) throw Error("non_ergodic", "cycle: word is a proper power");
    }
    MarkovMeasure mu;
    mu.provenance = "target:" + t.label;
    for (int i = 0; i < p; ++i) {
        mu.p.col.push_back((i + 1) % p);
        mu.p.val.push_back(1.0);
        mu.p.add_row();
        mu.emit.push_back(t.word[i]);
        mu.label.push_back({t.word[i]});
        mu.pi.push_back(1.0 / p);
    }
    return mu;
}

namespace {

constexpr int kMaxObs = 4;

struct NodeKey {
    int state;
    std::array<int, kMaxObs> s;
    bool operator==(const NodeKey& o) const { return state == o.state && s == o.s; }
};
struct NodeHash {
    std::size_t operator()(const NodeKey& k) const {
        std::size_t h = std::hash<int>()(k.state);
        for (int x : k.s) h = h * 1000003u ^ std::hash<int>()(x);
        return h;
    }
};

// Words of the support chain of length n whose scaled Birkhoff sums land in the box, as a
// layered graph over (state, partial sums).
struct Dag {
    int n = 0;
    std::vector<std::vector<NodeKey>> nodes;
    std::vector<std::vector<std::size_t>> ptr;  // edges into the next layer
    std::vector<std::vector<int>> succ;
    std::vector<std::vector<long double>> f, b;
    std::uint64_t total = 0;
};

struct TargetData {
    MarkovMeasure mu;
    double h = 0;
    std::vector<double> mean;                 // integral of each observable
    std::vector<std::vector<long long>> inc;  // [observable][state] scaled value
    std::vector<long long> denom;
    std::vector<long long> amin, amax;
};

Dag build_dag(const TargetData& td, int n, const std::vector<long long>& lo, const std::vector<long long>& hi,
              std::uint64_t cap) {
    const int J = static_cast<int>(lo.size());
    const int S = td.mu.states();
    Dag d;
    d.n = n;
    d.nodes.resize(n);
    d.ptr.resize(n);
    d.succ.resize(n);
    d.f.resize(n);
    d.b.resize(n);
    auto feasible = [&](const NodeKey& k, int layer) {
        long long rem = n - layer - 1;
        for (int j = 0; j < J; ++j) {
            if (k.s[j] + rem * td.amin[j] > hi[j]) return false;
            if (k.s[j] + rem * td.amax[j] < lo[j]) return false;
        }
        return true;
    };
    for (int s = 0; s < S; ++s) {
        if (td.mu.pi[s] <= 0) continue;
        NodeKey k{s, {}};
        for (int j = 0; j < J; ++j) k.s[j] = static_cast<int>(td.inc[j][s]);
        if (feasible(k, 0)) {
            d.nodes[0].push_back(k);
            d.f[0].push_back(1.0L);
        }
    }
    for (int layer = 0; layer + 1 < n; ++layer) {
        std::unordered_map<NodeKey, int, NodeHash> index;
        auto& next = d.nodes[layer + 1];
        auto& fn = d.f[layer + 1];
        d.ptr[layer].assign(1, 0);
        for (std::size_t x = 0; x < d.nodes[layer].size(); ++x) {
            const NodeKey& k = d.nodes[layer][x];
            for (std::size_t e = td.mu.p.ptr[k.state]; e < td.mu.p.ptr[k.state + 1]; ++e) {
                if (td.mu.p.val[e] <= 0) continue;
                int t = td.mu.p.col[e];
                NodeKey c{t, k.s};
                for (int j = 0; j < J; ++j) c.s[j] += static_cast<int>(td.inc[j][t]);
                if (!feasible(c, layer + 1)) continue;
                auto [it, fresh] = index.try_emplace(c, static_cast<int>(next.size()));
                if (fresh) {
                    next.push_back(c);
                    fn.push_back(0.0L);
                }
                fn[it->second] += d.f[layer][x];
                d.succ[layer].push_back(it->second);
            }
            d.ptr[layer].push_back(d.succ[layer].size());
        }
        d.total += d.nodes[layer].size();
        if (d.total > cap) throw Error("cap", "word-set graph exceeds the node cap");
    }
    d.total += d.nodes[n - 1].size();
    d.b[n - 1].assign(d.nodes[n - 1].size(), 1.0L);
    for (int layer = n - 2; layer >= 0; --layer) {
        d.b[layer].assign(d.nodes[layer].size(), 0.0L);
        for (std::size_t x = 0; x < d.nodes[layer].size(); ++x)
            for (std::size_t e = d.ptr[layer][x]; e < d.ptr[layer][x + 1]; ++e) d.b[layer][x] += d.b[layer + 1][d.succ[layer][e]];
    }
    return d;
}

// State paths of the chain emitting w (any start), or 0.
bool chain_emits(const MarkovMeasure& mu, const Word& w) {
    std::vector<char> cur(mu.states(), 0), next(mu.states());
    for (int s = 0; s < mu.states(); ++s) cur[s] = mu.pi[s] > 0 && mu.emit[s] == w[0];
    for (std::size_t i = 1; i < w.size(); ++i) {
        std::fill(next.begin(), next.end(), 0);
        for (int s = 0; s < mu.states(); ++s) {
            if (!cur[s]) continue;
            for (std::size_t e = mu.p.ptr[s]; e < mu.p.ptr[s + 1]; ++e)
                if (mu.p.val[e] > 0 && mu.emit[mu.p.col[e]] == w[i]) next[mu.p.col[e]] = 1;
        }
        cur.swap(next);
    }
    return std::any_of(cur.begin(), cur.end(), [](char c) { return c != 0; });
}

long long ceil_ld(long double x) { return static_cast<long long>(std::ceil(x - 1e-9L)); }
long long floor_ld(long double x) { return static_cast<long long>(std::floor(x + 1e-9L)); }

struct Built {
    Dag dag;
    WordSet set;
    std::array<long double, 2> located{}, colored{};
    long double count = 0;
};

}  // namespace

DensityReport entropy_density_construct(const Cells& cells, const DensitySpec& spec, double eps, std::uint64_t seed,
                                        const DensityCaps& caps) {
    if (!(eps > 0)) throw Error("bad_param", "epsilon must be positive");
    if (spec.observables.size() > kMaxObs) throw Error("bad_param", "at most 4 observables");
    const auto& rule = cells.rule();
    const Subsystem full = full_subsystem(rule);
    PrimitivityCertificate cert = primitivity(cells, full, 8);
    if (cert.kind != PrimitivityKind::StronglyPrimitive) throw Error("not_primitive", "the map is not strongly primitive up to level 8");

    DensityReport rep;
    rep.eps = eps;
    rep.seed = seed;
    const int J = static_cast<int>(spec.observables.size());
    const int T = static_cast<int>(spec.targets.size());

    std::vector<TargetData> td(T);
    rep.int_target.assign(J, 0.0);
    for (int i = 0; i < T; ++i) {
        td[i].mu = target_measure(cells, spec.targets[i]);
        td[i].h = markov_entropy(td[i].mu);
        const double w = spec.targets[i].weight.to_double();
        rep.weights.push_back(w);
        rep.target_entropy.push_back(td[i].h);
        rep.h_target += w * td[i].h;
        std::vector<double> ints;
        for (int j = 0; j < J; ++j) {
            const Potential& psi = spec.observables[j];
            long long D = 1;
            for (const auto& q : psi.exact) D = lcm64(D, q.den());
            std::vector<long long> inc;
            double m = 0;
            long long lo = 0, hi = 0;
            for (int s = 0; s < td[i].mu.states(); ++s) {
                const Rational& q = psi.exact[td[i].mu.emit[s]];
                inc.push_back(q.num() * (D / q.den()));
                m += td[i].mu.pi[s] * q.to_double();
                if (s == 0 || inc.back() < lo) lo = inc.back();
                if (s == 0 || inc.back() > hi) hi = inc.back();
            }
            td[i].inc.push_back(inc);
            td[i].denom.push_back(D);
            td[i].amin.push_back(lo);
            td[i].amax.push_back(hi);
            td[i].mean.push_back(m);
            ints.push_back(m);
            rep.int_target[j] += w * m;
        }
        rep.target_integrals.push_back(ints);
    }

    // connectors: least words leaving each color and landing in each location
    for (int len = 1; len <= 8 && rep.N == 0; ++len) {
        bool all = true;
        for (int c = 0; c < 2 && all; ++c)
            for (int c2 = 0; c2 < 2 && all; ++c2) {
                auto w = find_word(cells, full, len, Color(c), Color(c2), false);
                if (!w) all = false;
                else rep.connector[c][c2] = *w;
            }
        if (all) rep.N = len;
    }
    if (rep.N == 0) throw Error("not_primitive", "no connector words up to level 8");
    const int N = rep.N;
    double cmax = 0;
    for (int c = 0; c < 2; ++c)
        for (int c2 = 0; c2 < 2; ++c2)
            for (int j = 0; j < J; ++j) {
                double s = 0;
                for (int t : rep.connector[c][c2]) s += spec.observables[j].v[t];
                cmax = std::max(cmax, std::abs(s));
            }

    // interior pairs per location color
    std::array<Pair, 2> pairs;
    int M = 0;
    for (int c = 0; c < 2; ++c) {
        std::optional<Pair> p;
        for (int lvl = 1; lvl <= caps.pair_level_max && !p; ++lvl) p = interior_pair_search(cells, lvl, 0, Color(c), {});
        if (!p) throw Error("not_found", std::string("no interior pair in the ") + color_name(c) + " face");
        pairs[c] = *p;
        M = std::max(M, static_cast<int>(p->white.size()));
    }

    std::vector<double> norm(T, 0.0);
    for (int i = 0; i < T; ++i)
        for (int j = 0; j < J; ++j) norm[i] = std::max(norm[i], std::abs(td[i].mean[j]));

    // smallest multiplicities meeting the three smallness conditions at block length n
    auto choose_r = [&](int n, std::vector<int>& best, double& a, double& b, double& c) {
        best.clear();
        std::vector<int> r(T, 1);
        int bestR = 0;
        std::function<void(int, int)> rec = [&](int i, int used) {
            if (i == T) {
                int R = 0, rs = 0;
                for (int x : r) R += x * (n + N), rs += x;
                double ca = std::log(2.0) / R, cb = 0, cc = rs * cmax / R;
                for (int k = 0; k < T; ++k) cb += (td[k].h + norm[k]) * std::abs(rep.weights[k] - double(n) * r[k] / R);
                if (ca <= eps / 6 && cb <= eps / 3 && cc <= eps / 3 && (best.empty() || R < bestR)) {
                    best = r;
                    bestR = R;
                    a = ca, b = cb, c = cc;
                }
                return;
            }
            for (int x = 1; used + x + (T - i - 1) <= caps.r_sum_max; ++x) {
                r[i] = x;
                rec(i + 1, used + x);
            }
        };
        rec(0, 0);
        return !best.empty();
    };

    auto build = [&](int i, int n) {
        Built out;
        const double delta = eps / 2;
        std::vector<long long> lo(J), hi(J);
        for (int j = 0; j < J; ++j) {
            long double D = td[i].denom[j];
            lo[j] = ceil_ld(D * n * (td[i].mean[j] - delta));
            hi[j] = floor_ld(D * n * (td[i].mean[j] + delta));
        }
        out.dag = build_dag(td[i], n, lo, hi, caps.dag_nodes);
        const Dag& d = out.dag;
        WordSet& ws = out.set;
        ws.target = i;
        ws.n = n;
        ws.dag_nodes = d.total;
        long double box = 0;
        for (std::size_t x = 0; x < d.nodes[0].size(); ++x) {
            box += d.b[0][x];
            out.located[rule.loc(td[i].mu.emit[d.nodes[0][x].state])] += d.b[0][x];
        }
        for (std::size_t x = 0; x < d.nodes[n - 1].size(); ++x)
            out.colored[rule.col(td[i].mu.emit[d.nodes[n - 1][x].state])] += d.f[n - 1][x];
        ws.log_box = box > 0 ? static_cast<double>(std::log(box)) : -INFINITY;
        auto in_box = [&](const Word& w) {
            for (int j = 0; j < J; ++j) {
                long long s = 0;
                const auto& psi = spec.observables[j];
                for (int t : w) s += psi.exact[t].num() * (td[i].denom[j] / psi.exact[t].den());
                if (s < lo[j] || s > hi[j]) return false;
            }
            return true;
        };
        // extras: interior pair tile, connector, typical segment of the target chain
        std::mt19937_64 rng(seed + 7919 * static_cast<std::uint64_t>(i));
        std::discrete_distribution<int> start(td[i].mu.pi.begin(), td[i].mu.pi.end());
        auto sample = [&](int len) {
            Word v;
            int s = start(rng);
            for (int k = 0; k < len; ++k) {
                v.push_back(td[i].mu.emit[s]);
                std::vector<double> row(td[i].mu.p.val.begin() + td[i].mu.p.ptr[s], td[i].mu.p.val.begin() + td[i].mu.p.ptr[s + 1]);
                std::discrete_distribution<std::size_t> step(row.begin(), row.end());
                s = td[i].mu.p.col[td[i].mu.p.ptr[s] + step(rng)];
            }
            return v;
        };
        std::vector<Word> candidates;
        for (int c = 0; c < 2; ++c) {
            candidates.push_back(pairs[c].white);
            candidates.push_back(pairs[c].black);
        }
        for (const Word& head : candidates) {
            const int len = n - static_cast<int>(head.size()) - N;
            if (len < 1) throw Error("internal", "block too short for the interior pairs");
            Word word;
            for (int tries = 0; tries < caps.sample_tries; ++tries) {
                Word v = sample(len);
                word = head;
                const Word& lam = rep.connector[rule.col(head.back())][rule.loc(v[0])];
                word.insert(word.end(), lam.begin(), lam.end());
                word.insert(word.end(), v.begin(), v.end());
                if (in_box(word)) break;
            }
            if (head == pairs[rule.loc(head[0])].white) ws.pair_body[rule.loc(head[0])] = word;
            if (in_box(word) && chain_emits(td[i].mu, word)) continue;  // already a box word
            if (std::find(ws.extras.begin(), ws.extras.end(), word) != ws.extras.end()) continue;
            ws.extras.push_back(word);
            out.located[rule.loc(word[0])] += 1;
            out.colored[rule.col(word.back())] += 1;
        }
        out.count = box + ws.extras.size();
        ws.log_count = static_cast<double>(std::log(out.count));
        ws.entropy_gap = std::abs(ws.log_count / n - td[i].h);
        for (int c = 0; c < 2; ++c) {
            ws.located[c] = static_cast<double>(out.located[c]);
            ws.colored[c] = static_cast<double>(out.colored[c]);
        }
        return out;
    };

    std::vector<Built> built;
    int n = std::max(M + N + 1, 2);
    for (;;) {
        if (n > caps.n_max) throw Error("infeasible", "epsilon not reachable with block length <= " + std::to_string(caps.n_max));
        std::vector<int> r;
        double a = 0, b = 0, c = 0;
        if (!choose_r(n, r, a, b, c)) {
            ++n;
            continue;
        }
        built.clear();
        bool ok = true;
        for (int i = 0; i < T && ok; ++i) {
            built.push_back(build(i, n));
            ok = built.back().count > 0 && built.back().set.entropy_gap <= eps / 2;
        }
        if (ok) {
            rep.n = n;
            rep.r = r;
            rep.cond_a = a, rep.cond_b = b, rep.cond_c = c;
            break;
        }
        n += std::max(1, n / 16);
    }
    for (const auto& bt : built) rep.sets.push_back(bt.set);

    // body sequence: target i repeated r_i times, each body followed by a connector
    std::vector<int> body;
    for (int i = 0; i < T; ++i)
        for (int k = 0; k < rep.r[i]; ++k) body.push_back(i);
    const int S = static_cast<int>(body.size());
    rep.R = S * (n + N);

    // local ids of the valid graph nodes and extras of each target
    std::vector<std::vector<std::vector<int>>> local(T);
    std::vector<int> nvalid(T, 0), block_size(T);
    for (int i = 0; i < T; ++i) {
        const Dag& d = built[i].dag;
        local[i].resize(n);
        for (int layer = 0; layer < n; ++layer) {
            local[i][layer].assign(d.nodes[layer].size(), -1);
            for (std::size_t x = 0; x < d.nodes[layer].size(); ++x)
                if (d.b[layer][x] > 0) local[i][layer][x] = nvalid[i]++;
        }
        block_size[i] = nvalid[i] + static_cast<int>(built[i].set.extras.size()) * n;
    }
    auto k_total = [&](int i) { return built[i].count; };
    // connector states exist for reachable (color, next location) combinations
    std::vector<std::array<std::array<int, 2>, 2>> conn(S);
    std::vector<int> base(S + 1, 0);
    for (int b = 0; b < S; ++b) {
        int id = base[b] + block_size[body[b]];
        const int nb = body[(b + 1) % S];
        for (int c = 0; c < 2; ++c)
            for (int c2 = 0; c2 < 2; ++c2) {
                conn[b][c][c2] = -1;
                if (built[body[b]].colored[c] > 0 && built[nb].located[c2] > 0) {
                    conn[b][c][c2] = id;
                    id += N;
                }
            }
        base[b + 1] = id;
    }
    const long double R = rep.R;
    MarkovMeasure& nu = rep.nu;
    nu.level = 1;
    nu.provenance = "entropy-density";
    nu.pi.reserve(base[S]);
    nu.emit.reserve(base[S]);
    auto to_next_body = [&](int b, int c2) {
        // transitions from the end of a connector into body b+1 located c2
        const int nb = body[(b + 1) % S];
        const int bb = (b + 1) % S;
        const Dag& d = built[nb].dag;
        const long double kc = built[nb].located[c2];
        for (std::size_t x = 0; x < d.nodes[0].size(); ++x) {
            int id = local[nb][0][x];
            if (id < 0 || rule.loc(td[nb].mu.emit[d.nodes[0][x].state]) != c2) continue;
            nu.p.col.push_back(base[bb] + id);
            nu.p.val.push_back(static_cast<double>(d.b[0][x] / kc));
        }
        const auto& ex = built[nb].set.extras;
        for (std::size_t e = 0; e < ex.size(); ++e)
            if (rule.loc(ex[e][0]) == c2) {
                nu.p.col.push_back(base[bb] + nvalid[nb] + static_cast<int>(e) * n);
                nu.p.val.push_back(static_cast<double>(1.0L / kc));
            }
    };
    auto to_connector = [&](int b, int c) {
        const int nb = body[(b + 1) % S];
        for (int c2 = 0; c2 < 2; ++c2) {
            if (conn[b][c][c2] < 0) continue;
            nu.p.col.push_back(conn[b][c][c2]);
            nu.p.val.push_back(static_cast<double>(built[nb].located[c2] / k_total(nb)));
        }
    };
    for (int b = 0; b < S; ++b) {
        const int i = body[b];
        const Dag& d = built[i].dag;
        const long double K = k_total(i);
        for (int layer = 0; layer < n; ++layer)
            for (std::size_t x = 0; x < d.nodes[layer].size(); ++x) {
                if (local[i][layer][x] < 0) continue;
                const int tile = td[i].mu.emit[d.nodes[layer][x].state];
                nu.emit.push_back(tile);
                nu.pi.push_back(static_cast<double>(d.f[layer][x] * d.b[layer][x] / K / R));
                if (layer + 1 < n) {
                    for (std::size_t e = d.ptr[layer][x]; e < d.ptr[layer][x + 1]; ++e) {
                        int y = d.succ[layer][e];
                        if (local[i][layer + 1][y] < 0) continue;
                        nu.p.col.push_back(base[b] + local[i][layer + 1][y]);
                        nu.p.val.push_back(static_cast<double>(d.b[layer + 1][y] / d.b[layer][x]));
                    }
                } else {
                    to_connector(b, rule.col(tile));
                }
                nu.p.add_row();
            }
        const auto& ex = built[i].set.extras;
        for (std::size_t e = 0; e < ex.size(); ++e)
            for (int k = 0; k < n; ++k) {
                nu.emit.push_back(ex[e][k]);
                nu.pi.push_back(static_cast<double>(1.0L / K / R));
                if (k + 1 < n) {
                    nu.p.col.push_back(base[b] + nvalid[i] + static_cast<int>(e) * n + k + 1);
                    nu.p.val.push_back(1.0);
                } else {
                    to_connector(b, rule.col(ex[e][k]));
                }
                nu.p.add_row();
            }
        const int nb = body[(b + 1) % S];
        for (int c = 0; c < 2; ++c)
            for (int c2 = 0; c2 < 2; ++c2) {
                if (conn[b][c][c2] < 0) continue;
                const long double mass = built[i].colored[c] / K * (built[nb].located[c2] / k_total(nb)) / R;
                for (int j = 0; j < N; ++j) {
                    nu.emit.push_back(rep.connector[c][c2][j]);
                    nu.pi.push_back(static_cast<double>(mass));
                    if (j + 1 < N) {
                        nu.p.col.push_back(conn[b][c][c2] + j + 1);
                        nu.p.val.push_back(1.0);
                    } else {
                        to_next_body(b, c2);
                    }
                    nu.p.add_row();
                }
            }
    }

    rep.ergodic = strongly_connected(nu.p).count == 1;
    rep.h_nu = markov_entropy(nu);
    rep.int_nu.assign(J, 0.0);
    for (int s = 0; s < nu.states(); ++s)
        for (int j = 0; j < J; ++j) rep.int_nu[j] += nu.pi[s] * spec.observables[j].v[nu.emit[s]];
    rep.delta_h = std::abs(rep.h_nu - rep.h_target);
    for (int j = 0; j < J; ++j) rep.delta_int.push_back(std::abs(rep.int_nu[j] - rep.int_target[j]));

    // block tile matrix over f^R: row c counts R-words of color c, column c' their location
    std::array<std::array<double, 2>, 2> logn{};
    double rest = 0;
    for (int b = 1; b < S; ++b) rest += static_cast<double>(std::log(k_total(body[b])));
    for (int c = 0; c < 2; ++c)
        for (int c2 = 0; c2 < 2; ++c2)
            logn[c][c2] = built[body[0]].located[c2] > 0 ? static_cast<double>(std::log(built[body[0]].located[c2])) + rest : -INFINITY;
    rep.rows_equal = logn[0] == logn[1];
    rep.log_rho = 0;
    for (int b = 0; b < S; ++b) rep.log_rho += static_cast<double>(std::log(k_total(body[b])));
    rep.h_oracle = rep.log_rho / rep.R;

    // strong primitivity at level 1 of f^R: an interior R-word for every (location, color)
    rep.strongly_primitive = true;
    for (int c = 0; c < 2; ++c)
        for (int c2 = 0; c2 < 2; ++c2) {
            Word w;
            for (int b = 0; b < S; ++b) {
                const Word& bw = built[body[b]].set.pair_body[b == 0 ? c : 0];
                if (!w.empty()) {
                    const Word& lam = rep.connector[rule.col(w.back())][rule.loc(bw[0])];
                    w.insert(w.end(), lam.begin(), lam.end());
                }
                w.insert(w.end(), bw.begin(), bw.end());
            }
            const Word& last = rep.connector[rule.col(w.back())][c2];
            w.insert(w.end(), last.begin(), last.end());
            rep.interior_witness[c][c2] = rule.loc(w[0]) == c && rule.col(w.back()) == c2 && cells.interior(w);
            rep.strongly_primitive = rep.strongly_primitive && rep.interior_witness[c][c2];
        }

    rep.success = rep.ergodic && rep.strongly_primitive && rep.delta_h <= eps;
    for (double x : rep.delta_int) rep.success = rep.success && x <= eps;
    return rep;
}

}  // namespace tp
