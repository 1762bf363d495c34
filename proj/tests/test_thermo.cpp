#include <doctest.h>

#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "support.hpp"
#include "tilepress/thermo.hpp"

using namespace tp;
using tpt::data_path;

namespace {

const double kE = std::exp(1.0);

Potential corner(const Cells& cells) { return load_potential(cells, data_path("potentials/corner-indicator.json")); }

// Bernoulli(1/4) relative entropy: the rate function of the corner indicator under phi = 0.
double kl_quarter(double x) {
    double a = x > 0 ? x * std::log(4 * x) : 0;
    double b = x < 1 ? (1 - x) * std::log(4 * (1 - x) / 3) : 0;
    return a + b;
}

// Oracle pressure: dense transfer matrix on admissible l-words, largest eigenvalue modulus.
double dense_pressure(const Cells& cells, const Potential& phi) {
    std::vector<Word> words;
    cells.for_each_word(phi.level, {}, [&](const Word& w) {
        words.push_back(w);
        return true;
    });
    const int S = static_cast<int>(words.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(S, S);
    for (int i = 0; i < S; ++i) {
        Word x = words[i];
        double val = 0;
        {
            // value of phi on x read from the potential by rank
            val = phi.v[cells.rank(x.data(), phi.level)];
        }
        for (int j = 0; j < S; ++j) {
            const Word& y = words[j];
            bool ok = phi.level == 1 ? cells.rule().loc(y[0]) == cells.rule().col(x.back())
                                     : std::equal(x.begin() + 1, x.end(), y.begin());
            if (ok) M(i, j) = std::exp(val);
        }
    }
    Eigen::VectorXcd ev = M.eigenvalues();
    double r = 0;
    for (int i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev[i]));
    return std::log(r);
}

// Oracle Z_n for level-1 potentials: S_n phi is exact on each n-tile.
double brute_log_zn(const Cells& cells, const Potential& phi, int n) {
    double z = 0;
    cells.for_each_word(n, {}, [&](const Word& w) {
        double s = 0;
        for (int t : w) s += phi.v[t];
        z += std::exp(s);
        return true;
    });
    return std::log(z);
}

}  // namespace

TEST_CASE("potential files") {
    Cells cells(builtin_rule("lattes-2x2"));
    Potential c = corner(cells);
    CHECK(c.level == 1);
    CHECK(c.is_exact());
    CHECK(c.v == std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0});
    Potential back = parse_potential(cells, serialize_potential(cells, c));
    CHECK(back.v == c.v);
    Potential l2 = load_potential(cells, data_path("potentials/level2.json"));
    CHECK(l2.level == 2);
    Word w00{0, 0}, w44{4, 4}, w01{0, 1};
    CHECK(l2.at(cells, w00.data()) == 1);
    CHECK(l2.at(cells, w44.data()) == 1);
    CHECK(l2.at(cells, w01.data()) == 0);
    CHECK_THROWS_AS(parse_potential(cells, "{\"level\": 1, \"values\": [{\"word\": [9], \"value\": 1}]}"), Error);
    CHECK_THROWS_AS(parse_potential(cells, "{\"level\": 2, \"values\": [{\"word\": [0, 4], \"value\": 1}]}"), Error);
    CHECK_THROWS_AS(parse_potential(cells, "{\"values\": []}"), Error);
    // lift keeps values
    Potential lc = lift(cells, c, 3);
    cells.for_each_word(3, {}, [&](const Word& w) {
        CHECK(lc.at(cells, w.data()) == c.v[w[0]]);
        return true;
    });
    Potential sum = combine(cells, c, 2, l2, 1);
    CHECK(sum.level == 2);
    CHECK(sum.at(cells, w00.data()) == 3);
    CHECK(sum.is_exact());
}

TEST_CASE("spectral pressure matches closed forms and a dense oracle") {
    Cells cells(builtin_rule("lattes-2x2"));
    Subsystem F = full_subsystem(cells.rule());
    Potential zero = constant_potential(cells, Rational(0));
    CHECK(spectral(cells, F, zero).log_lambda == doctest::Approx(std::log(4.0)).epsilon(1e-13));
    Potential c = corner(cells);
    // each tile has exactly one of its four successors in the corner set: lambda = 3 + e
    CHECK(spectral(cells, F, c).log_lambda == doctest::Approx(std::log(3 + kE)).epsilon(1e-13));
    Potential l2 = load_potential(cells, data_path("potentials/level2.json"));
    CHECK(spectral(cells, F, l2).log_lambda == doctest::Approx(dense_pressure(cells, l2)).epsilon(1e-12));
    Cells fl(builtin_rule("flap-2-1"));
    Potential f = parse_potential(fl, "{\"level\": 1, \"values\": [{\"word\": [2], \"value\": \"1/3\"}, {\"word\": [7], \"value\": -2}]}");
    CHECK(spectral(fl, full_subsystem(fl.rule()), f).log_lambda == doctest::Approx(dense_pressure(fl, f)).epsilon(1e-12));
}

TEST_CASE("partition sums and coherence") {
    Cells cells(builtin_rule("lattes-2x2"));
    Subsystem F = full_subsystem(cells.rule());
    Potential c = corner(cells);
    for (int n = 1; n <= 6; ++n) CHECK(log_zn(cells, F, c, n) == doctest::Approx(brute_log_zn(cells, c, n)).epsilon(1e-12));
    for (const char* file : {"potentials/corner-indicator.json", "potentials/level2.json"}) {
        Potential phi = load_potential(cells, data_path(file));
        PressureEstimate pe = pressure(cells, F, phi, 12);
        CHECK(pe.lo <= pe.value);
        CHECK(pe.value <= pe.hi);
        // attained with equality for level-1 phi here (Z_n = 2 lambda^n), so allow rounding
        CHECK(std::abs(pe.value - pe.log_zn / 12) <= (pe.dn + std::log(2.0)) / 12 + 1e-12);
    }
}

TEST_CASE("Birkhoff brackets equal brute-force extension scans") {
    Cells cells(builtin_rule("lattes-2x2"));
    Potential l2 = load_potential(cells, data_path("potentials/level2.json"));
    const auto& r = cells.rule();
    for (int n = 1; n <= 5; ++n) {
        double dmax = 0;
        cells.for_each_word(n, {}, [&](const Word& w) {
            double lo = INFINITY, hi = -INFINITY;
            for (int u = 0; u < cells.tiles(); ++u) {
                if (r.loc(u) != r.col(w.back())) continue;
                Word ext = w;
                ext.push_back(u);
                double s = 0;
                for (int i = 0; i < n; ++i) s += l2.at(cells, ext.data() + i);
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            Bracket b = birkhoff_bracket(cells, l2, w);
            CHECK(b.lo == lo);
            CHECK(b.hi == hi);
            dmax = std::max(dmax, hi - lo);
            return true;
        });
        CHECK(distortion(cells, l2, n) == dmax);
    }
}

TEST_CASE("equilibrium states") {
    Cells cells(builtin_rule("lattes-2x2"));
    Subsystem F = full_subsystem(cells.rule());
    Potential zero = constant_potential(cells, Rational(0));
    MarkovMeasure mu = equilibrium(cells, F, zero);
    for (int n = 1; n <= 4; ++n)
        for (double m : cylinder_masses(cells, mu, n)) CHECK(m == doctest::Approx(0.5 / tpt::ipow(4, n)).epsilon(1e-12));
    CHECK(markov_entropy(mu) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    Potential c = corner(cells);
    CHECK(integral(cells, mu, c) == doctest::Approx(0.25).epsilon(1e-12));
    MarkovMeasure mc = equilibrium(cells, F, c);
    CHECK(integral(cells, mc, c) == doctest::Approx(kE / (3 + kE)).epsilon(1e-12));
    // variational principle: h + int phi = P for the equilibrium state
    MeasureStats st = measure_stats(cells, mc, c, std::log(3 + kE), {c});
    CHECK(st.entropy + st.integrals[0] == doctest::Approx(std::log(3 + kE)).epsilon(1e-12));
    CHECK(st.free_energy == doctest::Approx(0).scale(1));
    // cylinder masses sum to one and refine
    auto m1 = cylinder_masses(cells, mc, 1), m2 = cylinder_masses(cells, mc, 2);
    double s1 = 0;
    for (double x : m1) s1 += x;
    CHECK(s1 == doctest::Approx(1).epsilon(1e-12));
    std::vector<double> agg(m1.size(), 0);
    std::size_t k = 0;
    cells.for_each_word(2, {}, [&](const Word& w) {
        agg[w[0]] += m2[k++];
        return true;
    });
    for (std::size_t t = 0; t < m1.size(); ++t) CHECK(agg[t] == doctest::Approx(m1[t]).epsilon(1e-12));
}

TEST_CASE("Gibbs ratios") {
    Cells cells(builtin_rule("lattes-2x2"));
    Subsystem F = full_subsystem(cells.rule());
    GibbsReport g = gibbs_report(cells, F, constant_potential(cells, Rational(0)), 5);
    CHECK(g.exact);
    REQUIRE(g.levels.size() == 5);
    for (const auto& l : g.levels) {
        CHECK(l.exact_min == "1/2");
        CHECK(l.exact_max == "1/2");
    }
    GibbsReport gc = gibbs_report(cells, F, corner(cells), 5);
    CHECK_FALSE(gc.exact);
    CHECK(gc.within);
    for (const auto& l : gc.levels) {
        // the window is attained; compare with the report's own rounding slack
        CHECK(l.min_ratio >= gc.c_lo * (1 - 1e-9));
        CHECK(l.max_ratio <= gc.c_hi * (1 + 1e-9));
        CHECK(l.mass_sum == doctest::Approx(1).epsilon(1e-12));
    }
}

TEST_CASE("Legendre rate of the corner indicator") {
    Cells cells(builtin_rule("lattes-2x2"));
    Potential zero = constant_potential(cells, Rational(0)), c = corner(cells);
    auto [lo, hi] = cycle_mean_range(cells, full_subsystem(cells.rule()), c);
    CHECK(lo == doctest::Approx(0));
    CHECK(hi == doctest::Approx(1));
    RateCurve rc = legendre_rate(cells, zero, c, Grid::parse("0.05:0.95:0.05"), Grid::parse("-60:60:0.05"));
    CHECK(rc.mean == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rc.convex);
    CHECK(rc.unique_argmin);
    REQUIRE(rc.argmin >= 0);
    CHECK(rc.points[rc.argmin].x == doctest::Approx(0.25));
    for (const auto& p : rc.points) CHECK(p.k == doctest::Approx(kl_quarter(p.x)).epsilon(1e-6).scale(1));
    CHECK(rate_at(cells, zero, c, 0.5, Grid::parse("-60:60:0.05"), std::log(4.0)) ==
          doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3)).epsilon(1e-9));
    // outside the cycle-mean range
    RateCurve out = legendre_rate(cells, zero, c, Grid::parse("1.5:1.5:1"), Grid::parse("-60:60:0.05"));
    CHECK(std::isinf(out.points[0].k));
}

TEST_CASE("constrained Markov-kernel rate agrees with Legendre") {
    Cells cells(builtin_rule("lattes-2x2"));
    Potential zero = constant_potential(cells, Rational(0)), c = corner(cells);
    Potential l2 = load_potential(cells, data_path("potentials/level2.json"));
    for (double x : {0.1, 0.3, 0.5, 0.7}) {
        CAPTURE(x);
        double p0 = std::log(4.0);
        CHECK(constrained_rate(cells, zero, c, x) ==
              doctest::Approx(rate_at(cells, zero, c, x, Grid::parse("-60:60:0.05"), p0)).epsilon(1e-4).scale(1));
        double p2 = spectral(cells, full_subsystem(cells.rule()), l2).log_lambda;
        CHECK(constrained_rate(cells, l2, c, x) ==
              doctest::Approx(rate_at(cells, l2, c, x, Grid::parse("-60:60:0.05"), p2)).epsilon(1e-4).scale(1));
    }
}

TEST_CASE("grids") {
    Grid g = Grid::parse("0:1:0.25");
    CHECK(g.values() == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK_THROWS_AS(Grid::parse("1:0:x"), Error);
}
