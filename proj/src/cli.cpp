#include "tilepress/cli.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tilepress/density.hpp"
#include "tilepress/io.hpp"
#include "tilepress/ldp.hpp"
#include "tilepress/render.hpp"

namespace tp {

void RunConfig::check() const {
    if (caps.words == 0 || caps.dp_cells == 0) throw Error("bad_param", "caps must be positive");
    if (!(tol > 0 && tol < 1)) throw Error("bad_param", "tolerance must lie in (0, 1)");
}

namespace {

using J = nlohmann::ordered_json;

J num(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

// Minimal CSV writer; every field is already formatted.
struct Csv {
    std::string text;
    explicit Csv(std::initializer_list<std::string> header) { row(header); }
    void row(std::initializer_list<std::string> fields) {
        bool first = true;
        for (const auto& f : fields) {
            if (!first) text += ',';
            text += f;
            first = false;
        }
        text += '\n';
    }
};

std::string f12(double x) { return fmt12(x); }
std::string istr(long long x) { return std::to_string(x); }

SubdivisionRule rule_arg(const std::string& s) {
    if (std::filesystem::exists(s)) return load_rule(s);
    if (s.find('/') != std::string::npos || s.find(".json") != std::string::npos)
        throw Error("io", "cannot read rule file '" + s + "'");
    return builtin_rule(s);
}

Subsystem subsys_arg(const SubdivisionRule& rule, const std::string& keep, const std::string& drop) {
    if (!keep.empty() && !drop.empty()) throw Error("bad_param", "--keep and --drop are exclusive");
    if (!drop.empty()) return subsystem_from_spec(rule, drop, true);
    return subsystem_from_spec(rule, keep.empty() ? "all" : keep, false);
}

J subsys_json(const Subsystem& F) {
    J j;
    j["ids"] = F.ids;
    j["full"] = F.full;
    return j;
}

J header(const std::string& cmd, const RunConfig& cfg, const SubdivisionRule& rule) {
    J j;
    j["schema"] = "tilepress/" + cmd + "/1";
    j["rule"] = rule.name;
    (void)cfg;
    return j;
}

// Emits a result. CSV commands also write their JSON summary next to the CSV when --out is set.
struct Emitter {
    const RunConfig& cfg;
    std::ostream& out;

    void json(const J& j) const {
        std::string s = j.dump(2) + "\n";
        if (cfg.out.empty())
            out << s;
        else
            write_atomic(cfg.out, s);
    }
    void csv_or_json(const std::string& csv, J summary, const J& rows) const {
        if (cfg.format == "json") {
            summary["rows"] = rows;
            json(summary);
            return;
        }
        if (cfg.out.empty()) {
            out << csv;
            return;
        }
        write_atomic(cfg.out, csv);
        std::filesystem::path p(cfg.out);
        p.replace_extension(".json");
        if (p.string() == cfg.out) p = cfg.out + ".summary.json";
        write_atomic(p.string(), summary.dump(2) + "\n");
    }
};

void need_format(const RunConfig& cfg, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (cfg.format == a) return;
    throw Error("bad_param", "unsupported format '" + cfg.format + "' for this command");
}

// ---- subcommands ----

int cmd_validate(const RunConfig& cfg, const Emitter& em) {
    need_format(cfg, {"json"});
    SubdivisionRule rule = load_rule(cfg.rule);
    ValidationReport r = validate_rule(rule);
    J j = header("validate", cfg, rule);
    j["pass"] = r.pass;
    j["failures"] = r.failures;
    j["m"] = rule.m;
    j["degree"] = rule.degree;
    j["tiles"] = rule.size();
    j["vertex_count"] = r.vertex_count;
    j["rh_sum"] = r.rh_sum;
    j["assumptions"] = rule.assumptions;
    em.json(j);
    return r.pass ? 0 : 1;
}

int cmd_gen(const RunConfig& cfg, const Emitter& em, const std::string& name, int k, int flaps) {
    SubdivisionRule rule;
    if (name == "lattes")
        rule = lattes_rule(k > 0 ? k : 2);
    else if (name == "triangle")
        rule = triangle_rule();
    else if (name == "flap")
        rule = flap_rule(k > 0 ? k : 2, flaps > 0 ? flaps : 1);
    else
        rule = builtin_rule(name);
    require_valid(rule);
    std::string text = serialize_rule(rule);
    if (cfg.out.empty())
        em.out << text;
    else
        write_atomic(cfg.out, text);
    return 0;
}

int cmd_cells(const RunConfig& cfg, const Emitter& em, int level, bool counts_only, bool pairs, int edge) {
    Cells cells(rule_arg(cfg.rule));
    if (level < 0) throw Error("bad_param", "level must be nonnegative");
    J j = header("cells", cfg, cells.rule());
    j["level"] = level;
    if (counts_only) {
        need_format(cfg, {"json"});
        Skeleton sk = skeleton(cells, level, cfg.caps, false);
        j["tiles"] = sk.tiles;
        j["edges"] = sk.edges;
        j["curve_edges"] = sk.curve_edges;
        j["vertices"] = sk.vertices;
        j["degree_excess"] = sk.degree_excess;
        j["pairs"] = sk.tiles / 2;
        j["involution"] = sk.involution;
        j["curve_flags"] = sk.curve_flag_ok;
        em.json(j);
        return 0;
    }
    need_format(cfg, {"csv", "json"});
    if (pairs) {
        if (edge < 0 || edge >= cells.m()) throw Error("bad_param", "edge out of range");
        auto ps = enumerate_pairs(cells, level, edge, cfg.caps);
        Csv csv({"pair", "white", "black", "white_side", "black_side"});
        J rows = J::array();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const Pair& p = ps[i];
            csv.row({istr(i), word_str(p.white), word_str(p.black), istr(p.white_side), istr(p.black_side)});
            rows.push_back({{"pair", i}, {"white", p.white}, {"black", p.black},
                            {"white_side", p.white_side}, {"black_side", p.black_side}});
        }
        j["edge"] = edge;
        j["pairs"] = ps.size();
        em.csv_or_json(csv.text, j, rows);
        return 0;
    }
    auto words = enumerate_tiles(cells, level, {}, cfg.caps);
    Csv csv({"word", "location", "color", "touches_curve"});
    J rows = J::array();
    for (const Word& w : words) {
        bool touches = level > 0 && cells.interior_test(w).touches_curve;
        const char* loc = color_name(level ? cells.rule().loc(w[0]) : 0);
        const char* col = color_name(level ? cells.rule().col(w.back()) : 0);
        csv.row({word_str(w), loc, col, touches ? "1" : "0"});
        rows.push_back({{"word", w}, {"location", loc}, {"color", col}, {"touches_curve", touches}});
    }
    j["tiles"] = words.size();
    em.csv_or_json(csv.text, j, rows);
    return 0;
}

int cmd_subsys(const RunConfig& cfg, const Emitter& em, const std::string& keep, const std::string& drop, int level,
               bool matrix, bool entropy, int prim_cap) {
    Cells cells(rule_arg(cfg.rule));
    Subsystem F = subsys_arg(cells.rule(), keep, drop);
    bool all = !matrix && !entropy && prim_cap <= 0;
    if (cfg.format == "csv") {
        Csv csv({"word", "location", "color"});
        for (const Word& w : subsystem_tiles(cells.rule(), F, level, cfg.caps))
            csv.row({word_str(w), color_name(cells.rule().loc(w[0])), color_name(cells.rule().col(w.back()))});
        if (cfg.out.empty())
            em.out << csv.text;
        else
            write_atomic(cfg.out, csv.text);
        return 0;
    }
    need_format(cfg, {"json"});
    J j = header("subsys", cfg, cells.rule());
    j["subsystem"] = subsys_json(F);
    TileMatrix A = tile_matrix(cells.rule(), F);
    if (all || matrix) j["tile_matrix"] = {{A.a[0][0], A.a[0][1]}, {A.a[1][0], A.a[1][1]}};
    if (all || entropy) {
        j["spectral_radius"] = num(spectral_radius(A));
        j["h_top"] = num(subsystem_entropy(cells.rule(), F));
    }
    if (all || prim_cap > 0) {
        PrimitivityCertificate pc = primitivity(cells, F, prim_cap > 0 ? prim_cap : 6);
        J p;
        p["kind"] = kind_name(pc.kind);
        p["n_F"] = pc.n_F;
        p["cap"] = pc.cap;
        if (pc.kind != PrimitivityKind::Neither) {
            J w = J::array();
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                    w.push_back({{"color", color_name(c)}, {"location", color_name(d)}, {"word", pc.witness[c][d]}});
            p["witness"] = w;
        }
        j["primitivity"] = p;
    }
    if (level >= 0) {
        j["level"] = level;
        j["tile_count"] = subsystem_tile_count(cells.rule(), F, level).str();
    }
    em.json(j);
    return 0;
}

int cmd_pressure(const RunConfig& cfg, const Emitter& em, const std::string& phi_s, const std::string& keep,
                 const std::string& drop, int zn_max, int gibbs) {
    Cells cells(rule_arg(cfg.rule));
    Subsystem F = subsys_arg(cells.rule(), keep, drop);
    Potential phi = load_potential(cells, phi_s);
    if (zn_max < 1) throw Error("bad_param", "--zn-max must be positive");
    PressureEstimate est = pressure(cells, F, phi, zn_max, cfg.tol);
    J j = header("pressure", cfg, cells.rule());
    j["phi"] = phi.name;
    j["subsystem"] = subsys_json(F);
    j["spectral"] = num(est.value);
    j["lo"] = num(est.lo);
    j["hi"] = num(est.hi);
    j["irreducible"] = est.irreducible;
    J comps = J::array();
    for (const auto& c : est.components)
        comps.push_back({{"size", c.size}, {"log_lambda", num(c.log_lambda)}, {"sample", c.sample}});
    j["components"] = comps;

    Csv csv({"n", "log_zn_over_n", "dn", "gap", "coherence_bound"});
    J rows = J::array();
    for (int n = 1; n <= zn_max; ++n) {
        double lz = log_zn(cells, F, phi, n) / n;
        double dn = distortion(cells, phi, n);
        double gap = std::abs(est.value - lz), bound = (dn + std::log(2.0)) / n;
        csv.row({istr(n), f12(lz), f12(dn), f12(gap), f12(bound)});
        rows.push_back({{"n", n}, {"log_zn_over_n", num(lz)}, {"dn", num(dn)}, {"gap", num(gap)},
                        {"coherence_bound", num(bound)}});
    }
    if (gibbs > 0) {
        GibbsReport g = gibbs_report(cells, F, phi, gibbs, cfg.caps);
        J gj;
        gj["exact"] = g.exact;
        gj["c_lo"] = num(g.c_lo);
        gj["c_hi"] = num(g.c_hi);
        gj["within"] = g.within;
        J lv = J::array();
        for (const auto& l : g.levels) {
            J e = {{"n", l.n}, {"min_ratio", num(l.min_ratio)}, {"max_ratio", num(l.max_ratio)},
                   {"mass_sum", num(l.mass_sum)}};
            if (g.exact) {
                e["exact_min"] = l.exact_min;
                e["exact_max"] = l.exact_max;
            }
            lv.push_back(e);
        }
        gj["levels"] = lv;
        j["gibbs"] = gj;
    }
    if (cfg.format == "csv") {
        em.csv_or_json(csv.text, j, rows);
    } else {
        need_format(cfg, {"json"});
        j["rows"] = rows;
        em.json(j);
    }
    return 0;
}

int cmd_rate(const RunConfig& cfg, const Emitter& em, const std::string& phi_s, const std::string& psi_s,
             const std::string& xgrid, const std::string& tgrid, bool cross) {
    need_format(cfg, {"csv", "json"});
    Cells cells(rule_arg(cfg.rule));
    Potential phi = load_potential(cells, phi_s), psi = load_potential(cells, psi_s);
    RateCurve rc = legendre_rate(cells, phi, psi, Grid::parse(xgrid), Grid::parse(tgrid));
    J j = header("rate", cfg, cells.rule());
    j["phi"] = phi.name;
    j["psi"] = psi.name;
    j["mean"] = num(rc.mean);
    j["xmin"] = num(rc.xmin);
    j["xmax"] = num(rc.xmax);
    j["convex"] = rc.convex;
    j["argmin"] = rc.argmin >= 0 ? num(rc.points[rc.argmin].x) : J(nullptr);
    j["unique_argmin"] = rc.unique_argmin;
    j["t_grid_edge"] = rc.t_grid_edge;
    Csv csv = cross ? Csv({"x", "k", "t", "k_markov"}) : Csv({"x", "k", "t"});
    J rows = J::array();
    for (const auto& p : rc.points) {
        J r = {{"x", num(p.x)}, {"k", num(p.k)}, {"t", num(p.t)}};
        if (cross) {
            // the kernel minimization is only posed strictly inside the cycle-mean range
            double km = p.x > rc.xmin && p.x < rc.xmax ? constrained_rate(cells, phi, psi, p.x) : NAN;
            csv.row({f12(p.x), f12(p.k), f12(p.t), f12(km)});
            r["k_markov"] = num(km);
        } else {
            csv.row({f12(p.x), f12(p.k), f12(p.t)});
        }
        rows.push_back(r);
    }
    em.csv_or_json(csv.text, j, rows);
    return 0;
}

J critical_json(const CriticalOrbitReport& r) {
    J j;
    j["critical_count"] = r.critical_count();
    j["has_periodic_critical"] = r.has_periodic_critical;
    j["zero_degrees"] = r.zero_degrees;
    j["vertex_image"] = r.vertex_image;
    J vs = J::array();
    for (const auto& v : r.vertices)
        vs.push_back({{"tile", v.tile}, {"corner", v.corner}, {"local_degree", v.local_degree},
                      {"zero_vertex", v.zero_vertex}, {"orbit", v.orbit}, {"periodic", v.periodic},
                      {"period", v.period}});
    j["vertices"] = vs;
    return j;
}

int cmd_orbits(const RunConfig& cfg, const Emitter& em, const std::string& phi_s, int periodic, int preimage,
               const std::string& base_s, bool critical) {
    Cells cells(rule_arg(cfg.rule));
    J j = header("orbits", cfg, cells.rule());
    if (critical) {
        need_format(cfg, {"json"});
        j["critical"] = critical_json(critical_orbits(cells));
        em.json(j);
        return 0;
    }
    need_format(cfg, {"csv", "json"});
    if ((periodic > 0) == (preimage > 0)) throw Error("bad_param", "give exactly one of --periodic and --preimage");
    Potential phi = load_potential(cells, phi_s);
    j["phi"] = phi.name;
    if (periodic > 0) {
        PeriodicSums s = fixed_tile_sums(cells, phi, periodic);
        j["mode"] = "periodic";
        j["n"] = periodic;
        j["count"] = s.count.str();
        j["divisor"] = s.nmax;
        j["log_lower"] = num(s.log_lower);
        j["log_upper"] = num(s.log_upper);
        j["log_cyclic"] = num(s.log_cyclic);
        j["midpoint_rate"] = num(s.midpoint_rate());
        Csv csv({"word", "phi_lo", "phi_hi"});
        J rows = J::array();
        for (const auto& t : fixed_tiles(cells, phi, periodic, cfg.caps)) {
            csv.row({word_str(t.word), f12(t.phi.lo), f12(t.phi.hi)});
            rows.push_back({{"word", t.word}, {"phi_lo", num(t.phi.lo)}, {"phi_hi", num(t.phi.hi)}});
        }
        em.csv_or_json(csv.text, j, rows);
        return 0;
    }
    BaseSpec base = BaseSpec::parse(base_s);
    PreimageSums s = preimage_sums(cells, phi, preimage, base);
    j["mode"] = "preimage";
    j["n"] = preimage;
    j["base"] = base.str();
    j["weight_total"] = s.weight_total.str();
    j["log_lower"] = num(s.log_lower);
    j["log_upper"] = num(s.log_upper);
    j["midpoint_rate"] = num(s.midpoint_rate());
    Csv csv({"word", "corner", "weight", "phi_lo", "phi_hi"});
    J rows = J::array();
    for (const auto& p : preimages(cells, phi, preimage, base, cfg.caps)) {
        csv.row({word_str(p.word), istr(p.corner), istr(p.weight), f12(p.phi.lo), f12(p.phi.hi)});
        rows.push_back({{"word", p.word}, {"corner", p.corner}, {"weight", p.weight}, {"phi_lo", num(p.phi.lo)},
                        {"phi_hi", num(p.phi.hi)}});
    }
    em.csv_or_json(csv.text, j, rows);
    return 0;
}

int cmd_ldp(const RunConfig& cfg, const Emitter& em, const std::string& phi_s, const std::vector<std::string>& psi_s,
            const std::vector<std::string>& alpha_s, const std::string& est_s, const std::string& n_s,
            const std::string& base_s, int law_n, int pair_n) {
    Cells cells(rule_arg(cfg.rule));
    Potential phi = load_potential(cells, phi_s);
    std::vector<Potential> psis;
    for (const auto& s : psi_s) psis.push_back(load_potential(cells, s));
    std::vector<Rational> alphas;
    for (const auto& s : alpha_s) alphas.push_back(Rational::parse(s));
    if (psis.empty()) throw Error("bad_param", "--psi is required");
    J j = header("ldp", cfg, cells.rule());
    j["phi"] = phi.name;

    if (pair_n > 0) {
        need_format(cfg, {"json"});
        if (alphas.size() != psis.size()) throw Error("bad_param", "give one --alpha per --psi");
        PairMeasureReport r = pair_measure_construct(cells, phi, psis, alphas, pair_n, cfg.caps);
        j["mode"] = "pair_measure";
        j["n"] = r.n;
        J a = J::array();
        for (const auto& x : r.alpha) a.push_back(x.str());
        j["alpha"] = a;
        j["pairs_total"] = r.pairs_total;
        j["pairs_qualifying"] = r.pairs_qualifying;
        j["interior_pair"] = {r.interior_pair[0], r.interior_pair[1]};
        J ints = J::array(), floors = J::array();
        for (double x : r.integrals) ints.push_back(num(x));
        for (double x : r.integral_floor) floors.push_back(num(x));
        j["integrals"] = ints;
        j["integral_floor"] = floors;
        j["integrals_ok"] = r.integrals_ok;
        j["entropy"] = num(r.entropy);
        j["integral_phi"] = num(r.integral_phi);
        j["pressure"] = num(r.pressure);
        j["free_energy"] = num(r.free_energy);
        j["mass_union"] = num(r.mass_union);
        j["max_gibbs"] = num(r.max_gibbs);
        j["dn_phi"] = num(r.dn_phi);
        j["c"] = num(r.c);
        j["bound"] = num(r.bound);
        j["mass_ok"] = r.mass_ok;
        j["block_states"] = r.block.states();
        em.json(j);
        return 0;
    }
    if (psis.size() != 1) throw Error("bad_param", "give one --psi");
    const Potential& psi = psis[0];
    j["psi"] = psi.name;
    need_format(cfg, {"csv", "json"});
    if (law_n > 0) {
        Law law = birkhoff_law(cells, phi, psi, law_n, cfg.caps);
        j["mode"] = "law";
        j["n"] = law.n;
        j["rational"] = law.rational;
        j["mean"] = num(law.mean);
        Csv csv({"value", "prob", "exact"});
        J rows = J::array();
        for (std::size_t b = 0; b < law.prob.size(); ++b) {
            if (law.prob[b] == 0 && (!law.rational || law.exact[b] == 0)) continue;
            std::string ex = law.rational ? law.exact[b].str() : "";
            csv.row({law.value(b).str(), f12(law.prob[b]), ex});
            J r = {{"value", law.value(b).str()}, {"prob", num(law.prob[b])}};
            if (law.rational) r["exact"] = ex;
            rows.push_back(r);
        }
        em.csv_or_json(csv.text, j, rows);
        return 0;
    }
    if (alphas.size() != 1) throw Error("bad_param", "give one --alpha");
    Estimator est = parse_estimator(est_s);
    BaseSpec base = BaseSpec::parse(base_s);
    DeviationCurve dc = deviation_curve(cells, phi, psi, alphas[0], est, NRange::parse(n_s), base, cfg.caps);
    j["mode"] = "curve";
    j["estimator"] = estimator_name(est);
    if (est == Estimator::Preimage) j["base"] = base.str();
    j["alpha"] = dc.alpha.str();
    j["k_alpha"] = num(dc.k_alpha);
    j["mean"] = num(dc.mean);
    j["final_gap"] = num(dc.final_gap);
    j["slope_rate"] = num(dc.slope_rate);
    Csv csv({"n", "rate", "lo", "hi"});
    J rows = J::array();
    for (const auto& r : dc.rows) {
        csv.row({istr(r.n), f12(r.rate), f12(r.lo), f12(r.hi)});
        rows.push_back({{"n", r.n}, {"rate", num(r.rate)}, {"lo", num(r.lo)}, {"hi", num(r.hi)}});
    }
    em.csv_or_json(csv.text, j, rows);
    return 0;
}

int cmd_usc(const RunConfig& cfg, const Emitter& em, const std::string& n_s, int coarse, int prim_cap) {
    need_format(cfg, {"csv", "json"});
    Cells cells(rule_arg(cfg.rule));
    UscReport r = usc_experiment(cells, NRange::parse(n_s), coarse, prim_cap, cfg.caps);
    J j = header("usc", cfg, cells.rule());
    j["vertex"] = r.vertex;
    j["degree"] = r.degree;
    j["period"] = r.period;
    j["n_f"] = r.n_f;
    j["coarse"] = r.coarse;
    j["limit"] = num(r.limit);
    j["hn_decreasing"] = r.hn_decreasing;
    j["hn_above_limit"] = r.hn_above_limit;
    j["mass_decreasing"] = r.mass_decreasing;
    Csv csv({"n", "block", "tiles", "rho", "h_top", "h_top_exact", "h_n", "rows_equal", "mass_outside"});
    J rows = J::array();
    for (const auto& l : r.levels) {
        csv.row({istr(l.n), istr(l.block), istr(l.tiles), l.rho.str(), f12(l.h_top), l.h_top_exact ? "1" : "0",
                 f12(l.h_n), l.rows_equal ? "1" : "0", f12(l.mass_outside)});
        rows.push_back({{"n", l.n}, {"block", l.block}, {"tiles", l.tiles},
                        {"matrix", {{l.matrix[0][0], l.matrix[0][1]}, {l.matrix[1][0], l.matrix[1][1]}}},
                        {"rho", l.rho.str()}, {"h_top", num(l.h_top)}, {"h_top_exact", l.h_top_exact},
                        {"h_n", num(l.h_n)}, {"rows_equal", l.rows_equal}, {"mass_outside", num(l.mass_outside)}});
    }
    em.csv_or_json(csv.text, j, rows);
    return 0;
}

int cmd_density(const RunConfig& cfg, const Emitter& em, const std::string& targets, double eps) {
    Cells cells(rule_arg(cfg.rule));
    std::string base_dir = std::filesystem::path(targets).parent_path().string();
    DensitySpec spec = parse_density_spec(cells, read_file(targets), base_dir);
    DensityReport r = entropy_density_construct(cells, spec, eps, cfg.seed);
    J j = header("density", cfg, cells.rule());
    j["eps"] = num(r.eps);
    j["seed"] = r.seed;
    J tg = J::array();
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        J ints = J::array();
        for (double x : r.target_integrals[i]) ints.push_back(num(x));
        tg.push_back({{"label", spec.targets[i].label}, {"weight", spec.targets[i].weight.str()},
                      {"entropy", num(r.target_entropy[i])}, {"integrals", ints}});
    }
    j["targets"] = tg;
    j["h_target"] = num(r.h_target);
    J it = J::array(), inu = J::array(), di = J::array();
    for (double x : r.int_target) it.push_back(num(x));
    for (double x : r.int_nu) inu.push_back(num(x));
    for (double x : r.delta_int) di.push_back(num(x));
    j["int_target"] = it;
    j["N"] = r.N;
    j["n"] = r.n;
    j["r"] = r.r;
    j["R"] = r.R;
    j["conditions"] = {{"a", num(r.cond_a)}, {"b", num(r.cond_b)}, {"c", num(r.cond_c)}};
    J sets = J::array();
    Csv csv({"target", "n", "dag_nodes", "log_box", "log_count", "entropy_gap", "extras"});
    for (const auto& s : r.sets) {
        sets.push_back({{"target", s.target}, {"n", s.n}, {"dag_nodes", s.dag_nodes}, {"log_box", num(s.log_box)},
                        {"log_count", num(s.log_count)}, {"entropy_gap", num(s.entropy_gap)},
                        {"extras", s.extras.size()}});
        csv.row({istr(s.target), istr(s.n), istr(static_cast<long long>(s.dag_nodes)), f12(s.log_box),
                 f12(s.log_count), f12(s.entropy_gap), istr(static_cast<long long>(s.extras.size()))});
    }
    j["sets"] = sets;
    j["log_rho"] = num(r.log_rho);
    j["h_oracle"] = num(r.h_oracle);
    j["rows_equal"] = r.rows_equal;
    j["strongly_primitive"] = r.strongly_primitive;
    j["ergodic"] = r.ergodic;
    j["nu_states"] = r.nu.states();
    j["h_nu"] = num(r.h_nu);
    j["int_nu"] = inu;
    j["delta_h"] = num(r.delta_h);
    j["delta_int"] = di;
    j["success"] = r.success;
    if (cfg.format == "csv")
        em.csv_or_json(csv.text, j, J::array());
    else {
        need_format(cfg, {"json"});
        em.json(j);
    }
    return 0;
}

int cmd_equidist(const RunConfig& cfg, const Emitter& em, const std::string& phi_s, const std::string& n_s,
                 int coarse, const std::string& mode, const std::string& base_s) {
    need_format(cfg, {"csv", "json"});
    Cells cells(rule_arg(cfg.rule));
    Potential phi = load_potential(cells, phi_s);
    if (mode != "preimage" && mode != "periodic" && mode != "both") throw Error("bad_param", "unknown mode '" + mode + "'");
    BaseSpec base = BaseSpec::parse(base_s);
    J j = header("equidist", cfg, cells.rule());
    j["phi"] = phi.name;
    j["coarse"] = coarse;
    j["base"] = base.str();
    Csv csv({"mode", "n", "tv", "bracket"});
    J rows = J::array();
    for (bool periodic : {false, true}) {
        if ((periodic && mode == "preimage") || (!periodic && mode == "periodic")) continue;
        EquidistCurve c = equidistribution_curve(cells, phi, NRange::parse(n_s), coarse, base, periodic);
        for (const auto& r : c.rows) {
            csv.row({c.mode, istr(r.n), f12(r.tv), f12(r.bracket)});
            rows.push_back({{"mode", c.mode}, {"n", r.n}, {"tv", num(r.tv)}, {"bracket", num(r.bracket)}});
        }
    }
    em.csv_or_json(csv.text, j, rows);
    return 0;
}

int cmd_render(const RunConfig& cfg, const Emitter& em, int depth, const std::string& overlay_s,
               const std::string& keep, const std::string& drop, int edge, const std::string& vertex) {
    need_format(cfg, {"json"});
    if (cfg.out.empty()) throw Error("bad_param", "render needs --out (files <out>-white.svg and <out>-black.svg)");
    Cells cells(rule_arg(cfg.rule));
    Overlay ov;
    ov.kind = parse_overlay(overlay_s);
    if (ov.kind == Overlay::Sub) ov.sub = subsys_arg(cells.rule(), keep, drop);
    ov.e0 = edge;
    if (ov.kind == Overlay::Pairs && (edge < 0 || edge >= cells.m())) throw Error("bad_param", "edge out of range");
    if (ov.kind == Overlay::Flower) {
        auto p = vertex.find(':');
        if (p == std::string::npos) throw Error("bad_param", "--vertex expects tile:corner");
        try {
            ov.vertex_tile = std::stoi(vertex.substr(0, p));
            ov.vertex_corner = std::stoi(vertex.substr(p + 1));
        } catch (const std::exception&) {
            throw Error("bad_param", "--vertex expects tile:corner");
        }
    }
    SvgScene scene = render_svg(cells, depth, ov, cfg.caps);
    J j = header("render", cfg, cells.rule());
    j["depth"] = depth;
    j["overlay"] = overlay_s;
    J files = J::array();
    for (int face = 0; face < 2; ++face) {
        std::string path = cfg.out + "-" + color_name(face) + ".svg";
        write_atomic(path, scene.svg[face]);
        files.push_back({{"face", color_name(face)}, {"path", path}, {"cells", scene.cells[face]},
                         {"highlighted", scene.highlighted[face]}});
    }
    j["files"] = files;
    if (ov.kind == Overlay::Pairs) j["pairs"] = scene.groups;
    em.out << j.dump(2) << "\n";
    return 0;
}

void error_json(std::ostream& err, const std::string& code, const std::string& msg) {
    J j;
    j["error"] = {{"code", code}, {"message", msg}};
    err << j.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"tilepress: thermodynamic formalism experiments on finite subdivision rules"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig cfg;
    std::uint64_t cap = cfg.caps.words, dp_cap = cfg.caps.dp_cells;
    app.add_option("--cap", cap, "enumeration cap (explicit word lists)");
    app.add_option("--dp-cap", dp_cap, "DP table cap (states x sums)");
    app.add_option("--tol", cfg.tol, "Perron iteration tolerance");
    app.add_option("--seed", cfg.seed, "seed for sampled choices");
    app.add_option("--out,-o", cfg.out, "output file (standard output when absent)");
    app.add_option("--format", cfg.format, "csv or json");

    // Per-command options; unused ones stay at their defaults.
    std::string name, phi = "zero", keep, drop, xgrid, tgrid = "-60:60:0.05", est = "birkhoff", nrange, base = "generic:white",
                      targets, overlay = "none", vertex = "0:0", mode = "both";
    std::vector<std::string> psi, alpha;
    int k = 0, flaps = 0, level = -1, edge = 0, prim = 0, zn_max = 12, gibbs = 0, periodic = 0, preimage = 0, law = 0,
        pair = 0, coarse = 2, depth = 2;
    bool counts_only = false, pairs = false, matrix = false, entropy = false, cross = false, critical = false;
    double eps = 0.05;

    auto add_rule = [&](CLI::App* s) { s->add_option("rule", cfg.rule, "rule file or builtin name")->required(); };
    auto add_sub = [&](CLI::App* s) {
        s->add_option("--keep", keep, "kept 1-tile ids");
        s->add_option("--drop", drop, "dropped 1-tile ids");
    };

    auto* c_validate = app.add_subcommand("validate", "check a rule file");
    add_rule(c_validate);
    auto* c_gen = app.add_subcommand("gen", "write a builtin rule");
    c_gen->add_option("name", name, "lattes, triangle, flap or a full builtin name")->required();
    c_gen->add_option("--k", k, "subdivision factor");
    c_gen->add_option("--flaps", flaps, "number of flaps");
    auto* c_cells = app.add_subcommand("cells", "enumerate n-tiles or pairs");
    add_rule(c_cells);
    c_cells->add_option("--level", level)->required();
    c_cells->add_flag("--counts-only", counts_only);
    c_cells->add_flag("--pairs", pairs);
    c_cells->add_option("--edge", edge);
    auto* c_subsys = app.add_subcommand("subsys", "subsystem matrix, entropy and primitivity");
    add_rule(c_subsys);
    add_sub(c_subsys);
    c_subsys->add_option("--level", level);
    c_subsys->add_flag("--matrix", matrix);
    c_subsys->add_flag("--entropy", entropy);
    c_subsys->add_option("--primitivity", prim, "witness cap");
    auto* c_pressure = app.add_subcommand("pressure", "spectral pressure and partition sums");
    add_rule(c_pressure);
    add_sub(c_pressure);
    c_pressure->add_option("--phi", phi);
    c_pressure->add_option("--zn-max", zn_max);
    c_pressure->add_option("--gibbs", gibbs, "Gibbs ratios up to this level");
    auto* c_rate = app.add_subcommand("rate", "Legendre rate function");
    add_rule(c_rate);
    c_rate->add_option("--phi", phi);
    c_rate->add_option("--psi", psi)->required();
    c_rate->add_option("--xgrid", xgrid)->required();
    c_rate->add_option("--tgrid", tgrid);
    c_rate->add_flag("--cross-check", cross, "also minimize over Markov kernels");
    auto* c_orbits = app.add_subcommand("orbits", "fixed tiles and preimages");
    add_rule(c_orbits);
    c_orbits->add_option("--phi", phi);
    c_orbits->add_option("--periodic", periodic);
    c_orbits->add_option("--preimage", preimage);
    c_orbits->add_option("--base", base);
    c_orbits->add_flag("--critical", critical, "critical orbit report");
    auto* c_ldp = app.add_subcommand("ldp", "deviation curves, Birkhoff laws and pair measures");
    add_rule(c_ldp);
    c_ldp->add_option("--phi", phi);
    c_ldp->add_option("--psi", psi);
    c_ldp->add_option("--alpha", alpha);
    c_ldp->add_option("--estimator", est);
    c_ldp->add_option("--n", nrange);
    c_ldp->add_option("--base", base);
    c_ldp->add_option("--law", law, "exact law of S_n psi at this n");
    c_ldp->add_option("--pair-measure", pair, "pair-measure construction at this n");
    auto* c_usc = app.add_subcommand("usc", "entropy drop along periodic critical flowers");
    add_rule(c_usc);
    c_usc->add_option("--n", nrange)->required();
    c_usc->add_option("--coarse", coarse);
    c_usc->add_option("--primitivity", prim, "witness cap");
    auto* c_density = app.add_subcommand("density", "entropy-dense Markov approximation");
    add_rule(c_density);
    c_density->add_option("--targets", targets)->required();
    c_density->add_option("--eps", eps);
    auto* c_equidist = app.add_subcommand("equidist", "equidistribution of preimages and periodic tiles");
    add_rule(c_equidist);
    c_equidist->add_option("--phi", phi);
    c_equidist->add_option("--n", nrange)->required();
    c_equidist->add_option("--coarse", coarse);
    c_equidist->add_option("--mode", mode, "preimage, periodic or both");
    c_equidist->add_option("--base", base);
    auto* c_render = app.add_subcommand("render", "SVG drawing of n-tiles");
    add_rule(c_render);
    add_sub(c_render);
    c_render->add_option("--depth", depth);
    c_render->add_option("--overlay", overlay, "none, subsystem, pairs or flower");
    c_render->add_option("--edge", edge);
    c_render->add_option("--vertex", vertex, "tile:corner of a 1-vertex");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        error_json(err, "usage", e.what());
        return 2;
    }

    try {
        cfg.caps.words = cap;
        cfg.caps.dp_cells = dp_cap;
        cfg.check();
        Emitter em{cfg, out};
        auto dflt = [&](const char* f) {
            if (cfg.format.empty()) cfg.format = f;
        };
        if (*c_validate) return dflt("json"), cmd_validate(cfg, em);
        if (*c_gen) return cmd_gen(cfg, em, name, k, flaps);
        if (*c_cells) return dflt(counts_only ? "json" : "csv"), cmd_cells(cfg, em, level, counts_only, pairs, edge);
        if (*c_subsys) return dflt("json"), cmd_subsys(cfg, em, keep, drop, level, matrix, entropy, prim);
        if (*c_pressure) return dflt("json"), cmd_pressure(cfg, em, phi, keep, drop, zn_max, gibbs);
        if (*c_rate) return dflt("csv"), cmd_rate(cfg, em, phi, psi.empty() ? "" : psi[0], xgrid, tgrid, cross);
        if (*c_orbits) return dflt(critical ? "json" : "csv"), cmd_orbits(cfg, em, phi, periodic, preimage, base, critical);
        if (*c_ldp) {
            dflt(pair > 0 ? "json" : "csv");
            if (pair <= 0 && law <= 0 && nrange.empty()) throw Error("bad_param", "--n is required");
            return cmd_ldp(cfg, em, phi, psi, alpha, est, nrange, base, law, pair);
        }
        if (*c_usc) return dflt("csv"), cmd_usc(cfg, em, nrange, coarse, prim > 0 ? prim : 6);
        if (*c_density) return dflt("json"), cmd_density(cfg, em, targets, eps);
        if (*c_equidist) return dflt("csv"), cmd_equidist(cfg, em, phi, nrange, coarse, mode, base);
        if (*c_render) return dflt("json"), cmd_render(cfg, em, depth, overlay, keep, drop, edge, vertex);
        throw Error("usage", "no subcommand");
    } catch (const Error& e) {
        error_json(err, e.code, e.what());
    } catch (const nlohmann::json::exception& e) {
        error_json(err, "schema", e.what());
    } catch (const std::bad_alloc&) {
        error_json(err, "cap", "out of memory");
    } catch (const std::exception& e) {
        error_json(err, "internal", e.what());
    }
    return 1;
}

}  // namespace tp
