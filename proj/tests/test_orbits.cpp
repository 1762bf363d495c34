#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tilepress/orbits.hpp"

using namespace tp;
using tpt::data_path;
using tpt::ipow;

namespace {

double level1_sum(const Potential& phi, const Word& w) {
    double s = 0;
    for (int t : w) s += phi.v[t];
    return s;
}

long long trace_power(const TileMatrix& A, int n) {
    long long m[2][2] = {{1, 0}, {0, 1}};
    for (int k = 0; k < n; ++k) {
        long long r[2][2];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r[i][j] = m[i][0] * A.a[0][j] + m[i][1] * A.a[1][j];
        std::copy(&r[0][0], &r[0][0] + 4, &m[0][0]);
    }
    return m[0][0] + m[1][1];
}

}  // namespace

TEST_CASE("fixed tile counts equal the trace identity") {
    for (const char* name : {"lattes-2x2", "lattes-3x3", "triangle-2x2", "flap-2-1"}) {
        Cells cells(builtin_rule(name));
        TileMatrix A = tile_matrix(cells.rule(), full_subsystem(cells.rule()));
        Potential zero = constant_potential(cells, Rational(0));
        for (int n = 1; n <= 6; ++n) {
            CAPTURE(name);
            CAPTURE(n);
            long long brute = 0;
            cells.for_each_word(n, {}, [&](const Word& w) {
                brute += cells.rule().loc(w[0]) == cells.rule().col(w.back());
                return true;
            });
            CHECK(brute == trace_power(A, n));
            PeriodicSums s = fixed_tile_sums(cells, zero, n);
            CHECK(s.count == brute);
            if (n <= 4) CHECK(static_cast<long long>(fixed_tiles(cells, zero, n).size()) == brute);
        }
    }
}

TEST_CASE("periodic sums for a level-1 potential") {
    Cells cells(builtin_rule("lattes-2x2"));
    Potential c = load_potential(cells, data_path("potentials/corner-indicator.json"));
    for (int n = 1; n <= 6; ++n) {
        double z = 0;
        for (const auto& t : fixed_tiles(cells, c, n)) {
            CHECK(t.phi.lo == level1_sum(c, t.word));
            z += std::exp(level1_sum(c, t.word));
        }
        PeriodicSums s = fixed_tile_sums(cells, c, n);
        CHECK(s.log_cyclic == doctest::Approx(std::log(z)).epsilon(1e-12));
        CHECK(s.log_upper == doctest::Approx(std::log(z)).epsilon(1e-12));
        CHECK(s.log_lower == doctest::Approx(std::log(z / s.nmax)).epsilon(1e-12));
        SplitSums cyc = periodic_split(cells, c, nullptr, n, PeriodicMode::Cyclic);
        CHECK(cyc.log_total() == doctest::Approx(s.log_cyclic).epsilon(1e-12));
    }
}

TEST_CASE("fixed vertex divisor") {
    Cells l2(builtin_rule("lattes-2x2"));
    for (int n = 1; n <= 4; ++n) CHECK(fixed_vertex_divisor(l2, n) == 2);
    Cells fl(builtin_rule("flap-2-1"));
    // v0 is fixed with local degree 2
    for (int n = 1; n <= 4; ++n) CHECK(fixed_vertex_divisor(fl, n) == 2 * ipow(2, n));
}

TEST_CASE("preimages of a generic point") {
    Cells cells(builtin_rule("lattes-2x2"));
    Potential c = load_potential(cells, data_path("potentials/corner-indicator.json"));
    for (Color col : {White, Black}) {
        BaseSpec base;
        base.color = col;
        for (int n = 1; n <= 5; ++n) {
            auto pre = preimages(cells, c, n, base);
            CHECK(pre.size() == static_cast<std::size_t>(ipow(4, n)));
            double z = 0;
            for (const auto& p : pre) {
                CHECK(cells.rule().col(p.word.back()) == col);
                CHECK(p.weight == 1);
                CHECK(p.phi.lo == level1_sum(c, p.word));
                z += std::exp(level1_sum(c, p.word));
            }
            PreimageSums s = preimage_sums(cells, c, n, base);
            CHECK(s.weight_total == ipow(4, n));
            CHECK(s.log_lower == doctest::Approx(std::log(z)).epsilon(1e-12));
            CHECK(s.log_upper == doctest::Approx(std::log(z)).epsilon(1e-12));
            CHECK(preimage_split(cells, c, nullptr, n, base, 0).log_total() == doctest::Approx(std::log(z)).epsilon(1e-12));
        }
    }
}

TEST_CASE("preimages of a vertex carry local degrees summing to d^n") {
    for (const char* name : {"lattes-2x2", "triangle-2x2", "flap-2-1"}) {
        Cells cells(builtin_rule(name));
        Potential zero = constant_potential(cells, Rational(0));
        for (int v = 0; v < cells.m(); ++v)
            for (int n = 1; n <= 4; ++n) {
                CAPTURE(name);
                CAPTURE(v);
                CAPTURE(n);
                BaseSpec base = BaseSpec::parse("vertex:" + std::to_string(v));
                long long total = 0;
                for (const auto& p : preimages(cells, zero, n, base)) {
                    CHECK(p.weight >= 1);
                    // f^n sends corner c of an n-tile where the last letter sends it
                    CHECK(cells.rule().tiles[p.word.back()].corners[p.corner] == v);
                    total += p.weight;
                }
                CHECK(total == ipow(cells.rule().degree, n));
                CHECK(preimage_sums(cells, zero, n, base).weight_total == ipow(cells.rule().degree, n));
            }
    }
}

TEST_CASE("critical orbits") {
    CriticalOrbitReport l2 = critical_orbits(Cells(builtin_rule("lattes-2x2")));
    // four edge midpoints and two face centers
    CHECK(l2.critical_count() == 6);
    CHECK_FALSE(l2.has_periodic_critical);
    CriticalOrbitReport fl = critical_orbits(Cells(builtin_rule("flap-2-1")));
    CHECK(fl.has_periodic_critical);
    CHECK(fl.zero_degrees[0] == 2);
    long long excess = 0;
    for (const auto& v : fl.vertices) excess += v.local_degree - 1;
    CHECK(excess == 2 * 5 - 2);
}

TEST_CASE("generic address is an interior periodic word") {
    Cells cells(builtin_rule("lattes-2x2"));
    for (Color c : {White, Black}) {
        Word w = generic_address(cells, c, 12);
        REQUIRE(w.size() == 12);
        CHECK(cells.rule().loc(w[0]) == c);
        for (std::size_t i = 1; i < w.size(); ++i) CHECK(cells.rule().loc(w[i]) == cells.rule().col(w[i - 1]));
        CHECK(cells.interior(w));
    }
}

TEST_CASE("base specs") {
    CHECK(BaseSpec::parse("generic:black").color == Black);
    CHECK(BaseSpec::parse("vertex:2").index == 2);
    CHECK(BaseSpec::parse("vertex:2").str() == "vertex:2");
    CHECK(BaseSpec::parse("generic:white").str() == "generic:white");
    CHECK_THROWS_AS(BaseSpec::parse("edge:1"), Error);
}
