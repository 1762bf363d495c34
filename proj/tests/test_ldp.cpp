#include <doctest.h>

#include <cmath>
#include <map>

#include "support.hpp"
#include "tilepress/ldp.hpp"

using namespace tp;
using tpt::data_path;
using tpt::ipow;

namespace {

struct Fixture {
    Cells cells{builtin_rule("lattes-2x2")};
    Potential zero = constant_potential(cells, Rational(0));
    Potential corner = load_potential(cells, data_path("potentials/corner-indicator.json"));
    Potential level2 = load_potential(cells, data_path("potentials/level2.json"));
};

// Oracle law of S_n psi (level-1 psi): masses of all n-cylinders bucketed by the exact sum.
std::map<double, double> enumerated_law(const Cells& cells, const Potential& phi, const Potential& psi, int n) {
    MarkovMeasure mu = equilibrium(cells, full_subsystem(cells.rule()), phi);
    std::vector<double> mass = cylinder_masses(cells, mu, n);
    std::map<double, double> law;
    std::size_t k = 0;
    cells.for_each_word(n, {}, [&](const Word& w) {
        double s = 0;
        for (int t : w) s += psi.v[t];
        law[s] += mass[k++];
        return true;
    });
    return law;
}

double binom(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

// Oracle TV at coarse level 2 from an exhaustive orbit tally: each weighted point y with
// itinerary `path` (its n-word followed by where f^n y continues) contributes the 2-subwords
// at offsets 0..n-1, each with weight 1/n.
double coarse_tv(const Cells& cells, const std::vector<std::pair<Word, double>>& weighted, int n, const MarkovMeasure& mu) {
    std::vector<double> target = cylinder_masses(cells, mu, 2);
    std::vector<double> got(target.size(), 0);
    double total = 0;
    for (const auto& [w, x] : weighted) total += x;
    for (const auto& [path, x] : weighted)
        for (int i = 0; i < n; ++i) got[cells.rank(path.data() + i, 2)] += x / total / n;
    double tv = 0;
    for (std::size_t i = 0; i < got.size(); ++i) tv += std::abs(got[i] - target[i]);
    return tv / 2;
}

}  // namespace

TEST_CASE("birkhoff law equals exhaustive enumeration") {
    Fixture f;
    for (const Potential* phi : {&f.zero, &f.corner, &f.level2})
        for (int n = 1; n <= 6; ++n) {
            CAPTURE(phi->name);
            CAPTURE(n);
            Law law = birkhoff_law(f.cells, *phi, f.corner, n);
            auto brute = enumerated_law(f.cells, *phi, f.corner, n);
            double total = 0;
            for (std::size_t b = 0; b < law.prob.size(); ++b) {
                double v = law.value(b).to_double();
                double expect = brute.count(v) ? brute[v] : 0.0;
                CHECK(law.prob[b] == doctest::Approx(expect).epsilon(1e-12).scale(1e-300));
                total += law.prob[b];
            }
            CHECK(total == doctest::Approx(1).epsilon(1e-12));
        }
}

TEST_CASE("birkhoff law is binomial and exact under the uniform chain") {
    Fixture f;
    for (int n : {1, 4, 8}) {
        Law law = birkhoff_law(f.cells, f.zero, f.corner, n);
        REQUIRE(law.rational);
        CHECK(law.mean == doctest::Approx(n / 4.0));
        for (std::size_t b = 0; b < law.prob.size(); ++b) {
            Rational v = law.value(b);
            REQUIRE(v.den() == 1);
            int k = static_cast<int>(v.num());
            // C(n,k) 3^(n-k) / 4^n exactly
            BigRational expect(BigInt(static_cast<long long>(std::llround(binom(n, k)))) * BigInt(ipow(3, n - k)),
                               BigInt(ipow(4, n)));
            CHECK(law.exact[b] == expect);
        }
        // tail at n/2 compared with the exact sum
        double tail = 0;
        for (int k = (n + 1) / 2; k <= n; ++k) tail += binom(n, k) * std::pow(0.75, n - k) * std::pow(0.25, k);
        CHECK(law.log_tail(Rational(n, 2)) == doctest::Approx(std::log(tail)).epsilon(1e-12));
    }
}

TEST_CASE("birkhoff deviation curve") {
    Fixture f;
    DeviationCurve dc = deviation_curve(f.cells, f.zero, f.corner, Rational(1, 2), Estimator::Birkhoff, NRange::parse("4:20:4"),
                                        BaseSpec{});
    CHECK(dc.k_alpha == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3)).epsilon(1e-9));
    CHECK(dc.mean == doctest::Approx(0.25));
    REQUIRE(dc.rows.size() == 5);
    for (const auto& r : dc.rows) {
        double tail = 0;
        for (int k = (r.n + 1) / 2; k <= r.n; ++k) tail += binom(r.n, k) * std::pow(0.75, r.n - k) * std::pow(0.25, k);
        CHECK(r.rate == doctest::Approx(-std::log(tail) / r.n).epsilon(1e-10));
        // the prefactor makes finite-n rates exceed K
        CHECK(r.rate > dc.k_alpha);
    }
    DeviationCurve below = deviation_curve(f.cells, f.zero, f.corner, Rational(1, 8), Estimator::Birkhoff, NRange::parse("4"),
                                           BaseSpec{});
    CHECK(below.k_alpha == 0);
    DeviationCurve above = deviation_curve(f.cells, f.zero, f.corner, Rational(3, 2), Estimator::Birkhoff, NRange::parse("4"),
                                           BaseSpec{});
    CHECK(std::isinf(above.k_alpha));
    CHECK(std::isinf(above.rows[0].rate));
}

TEST_CASE("periodic and preimage estimators equal brute-force lists") {
    Fixture f;
    for (int n = 2; n <= 6; ++n) {
        double hit = 0, all = 0;
        for (const auto& t : fixed_tiles(f.cells, f.corner, n)) {
            double s = 0;
            for (int x : t.word) s += f.corner.v[x];
            double w = std::exp(t.phi.lo);
            all += w;
            if (2 * s >= n) hit += w;
        }
        DeviationCurve dc = deviation_curve(f.cells, f.corner, f.corner, Rational(1, 2), Estimator::Periodic,
                                            NRange::parse(std::to_string(n)), BaseSpec{});
        CHECK(dc.rows[0].rate == doctest::Approx(-std::log(hit / all) / n).epsilon(1e-12));
        CHECK(dc.rows[0].lo <= dc.rows[0].rate);
        CHECK(dc.rows[0].rate <= dc.rows[0].hi);

        hit = all = 0;
        for (const auto& p : preimages(f.cells, f.corner, n, BaseSpec{})) {
            double w = std::exp(p.phi.lo);
            all += w;
            if (2 * p.phi.lo >= n) hit += w;
        }
        DeviationCurve dp = deviation_curve(f.cells, f.corner, f.corner, Rational(1, 2), Estimator::Preimage,
                                            NRange::parse(std::to_string(n)), BaseSpec{});
        CHECK(dp.rows[0].rate == doctest::Approx(-std::log(hit / all) / n).epsilon(1e-12));
    }
}

TEST_CASE("ranges and estimator names") {
    CHECK(NRange::parse("4:12:4").values() == std::vector<int>{4, 8, 12});
    CHECK(NRange::parse("7").values() == std::vector<int>{7});
    CHECK_THROWS_AS(NRange::parse("x"), Error);
    CHECK(parse_estimator("preimage") == Estimator::Preimage);
    CHECK(std::string(estimator_name(Estimator::Periodic)) == "periodic");
    CHECK_THROWS_AS(parse_estimator("gauss"), Error);
}

TEST_CASE("entropy drop along the flap's critical flower") {
    Cells cells(builtin_rule("flap-2-1"));
    UscReport r = usc_experiment(cells, NRange::parse("1:6"), 2);
    CHECK(r.degree == 2);
    CHECK(r.period == 1);
    CHECK(r.limit == doctest::Approx(std::log(2.0)));
    REQUIRE(r.levels.size() == 6);
    for (const auto& l : r.levels) {
        CAPTURE(l.n);
        CHECK(l.rho == 2 * ipow(2, l.n));
        CHECK(l.h_top_exact);
        CHECK(l.rows_equal);
        CHECK(l.h_top == doctest::Approx((l.n + 1) * std::log(2.0)).epsilon(1e-14));
        CHECK(l.h_n == doctest::Approx(l.h_top / (l.n + r.n_f)).epsilon(1e-14));
        double s = 0;
        for (double x : l.coarse) s += x;
        CHECK(s == doctest::Approx(1).epsilon(1e-12));
    }
    CHECK(r.mass_decreasing);
    // no periodic critical point on a Lattes map
    CHECK_THROWS_AS(usc_experiment(Cells(builtin_rule("lattes-2x2")), NRange::parse("1:2"), 2), Error);
}

TEST_CASE("pair measure construction") {
    Fixture f;
    const int n = 5;
    PairMeasureReport r = pair_measure_construct(f.cells, f.zero, {f.corner}, {Rational(1, 2)}, n);
    // oracle: pairs with a tile reaching the threshold
    Tails t = tails(f.cells, f.corner);
    int qual = 0;
    for (const Pair& p : enumerate_pairs(f.cells, n, 0, Caps{})) {
        double a = birkhoff_bracket(f.cells, f.corner, t, p.white).hi, b = birkhoff_bracket(f.cells, f.corner, t, p.black).hi;
        qual += std::max(a, b) >= n * 0.5 - 1e-12;
    }
    CHECK(r.pairs_total == ipow(4, n));
    CHECK(r.pairs_qualifying == qual);
    CHECK(r.integrals_ok);
    CHECK(r.mass_ok);
    CHECK(r.pressure == doctest::Approx(std::log(4.0)));
    CHECK(r.free_energy == doctest::Approx(r.entropy + r.integral_phi - r.pressure).epsilon(1e-12));
    CHECK_THROWS_AS(pair_measure_construct(f.cells, f.zero, {f.corner}, {Rational(2)}, 3), Error);
}

TEST_CASE("equidistribution distances equal brute-force lists") {
    Fixture f;
    MarkovMeasure mu = equilibrium(f.cells, full_subsystem(f.cells.rule()), f.corner);
    EquidistCurve pre = equidistribution_curve(f.cells, f.corner, NRange::parse("2:8:2"), 2, BaseSpec{}, false);
    EquidistCurve per = equidistribution_curve(f.cells, f.corner, NRange::parse("2:8:2"), 2, BaseSpec{}, true);
    for (std::size_t i = 0; i < pre.rows.size(); ++i) {
        int n = pre.rows[i].n;
        std::vector<std::pair<Word, double>> a, b;
        Word addr = generic_address(f.cells, White, 2);
        for (const auto& p : preimages(f.cells, f.corner, n, BaseSpec{})) {
            Word path = p.word;
            path.insert(path.end(), addr.begin(), addr.end());  // f^n y is the base point
            a.push_back({path, std::exp(p.phi.lo)});
        }
        for (const auto& t : fixed_tiles(f.cells, f.corner, n)) {
            Word path = t.word;
            path.insert(path.end(), t.word.begin(), t.word.end());  // the orbit is periodic
            b.push_back({path, std::exp(t.phi.lo)});
        }
        CHECK(pre.rows[i].tv == doctest::Approx(coarse_tv(f.cells, a, n, mu)).epsilon(1e-10));
        CHECK(per.rows[i].tv == doctest::Approx(coarse_tv(f.cells, b, n, mu)).epsilon(1e-10).scale(1e-12));
        if (i) CHECK(pre.rows[i].tv < pre.rows[i - 1].tv);
    }
    CHECK_THROWS_AS(equidistribution_curve(f.cells, f.corner, NRange::parse("4"), 2, BaseSpec::parse("vertex:0"), false), Error);
    // uniform chain: only boundary terms remain, TV <= 2l/n
    EquidistCurve z = equidistribution_curve(f.cells, f.zero, NRange::parse("2:12:2"), 2, BaseSpec{}, false);
    for (std::size_t i = 0; i < z.rows.size(); ++i) {
        CHECK(z.rows[i].tv <= 4.0 / z.rows[i].n + z.rows[i].bracket + 1e-12);
        if (i) CHECK(z.rows[i].tv < z.rows[i - 1].tv);
    }
}
