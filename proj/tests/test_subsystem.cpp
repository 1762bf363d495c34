#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tilepress/subsystem.hpp"

using namespace tp;

namespace {

// 1^T A^n 1 by repeated 2x2 products in exact integers.
BigInt ones_power(const TileMatrix& A, int n) {
    BigInt v[2] = {1, 1};
    for (int k = 0; k < n; ++k) {
        BigInt w0 = A.a[0][0] * v[0] + A.a[0][1] * v[1];
        BigInt w1 = A.a[1][0] * v[0] + A.a[1][1] * v[1];
        v[0] = w0, v[1] = w1;
    }
    return v[0] + v[1];
}

// Oracle: admissible words of the full rule whose letters all lie in F.
BigInt brute_count(const Cells& cells, const Subsystem& F, int n) {
    BigInt k = 0;
    cells.for_each_word(n, {}, [&](const Word& w) {
        bool in = true;
        for (int t : w) in = in && F.has(t);
        k += in;
        return true;
    });
    return k;
}

}  // namespace

TEST_CASE("carpet subsystem") {
    Cells cells(builtin_rule("lattes-3x3"));
    Subsystem F = subsystem_from_spec(cells.rule(), "4,13", true);
    CHECK(F.ids.size() == 16);
    TileMatrix A = tile_matrix(cells.rule(), F);
    CHECK(A.a[0][0] == 4);
    CHECK(A.a[0][1] == 4);
    CHECK(A.a[1][0] == 4);
    CHECK(A.a[1][1] == 4);
    CHECK(spectral_radius(A) == doctest::Approx(8).epsilon(1e-14));
    CHECK(subsystem_entropy(cells.rule(), F) == doctest::Approx(std::log(8.0)).epsilon(1e-14));
    PrimitivityCertificate pc = primitivity(cells, F, 4);
    CHECK(pc.kind == PrimitivityKind::StronglyPrimitive);
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
            const Word& w = pc.witness[c][d];
            REQUIRE(static_cast<int>(w.size()) == pc.n_F);
            CHECK(cells.rule().col(w.back()) == c);
            CHECK(cells.rule().loc(w[0]) == d);
            CHECK(cells.interior(w));
        }
}

TEST_CASE("gasket subsystem is neither") {
    Cells cells(builtin_rule("triangle-2x2"));
    Subsystem F = subsystem_from_spec(cells.rule(), "3,7", true);
    CHECK(subsystem_entropy(cells.rule(), F) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(primitivity(cells, F, 6).kind == PrimitivityKind::Neither);
}

TEST_CASE("full subsystem has entropy log d") {
    for (const char* name : {"lattes-2x2", "lattes-3x3", "triangle-2x2", "flap-2-1"}) {
        CAPTURE(name);
        Cells cells(builtin_rule(name));
        Subsystem F = full_subsystem(cells.rule());
        CHECK(F.full);
        CHECK(subsystem_entropy(cells.rule(), F) == doctest::Approx(std::log(double(cells.rule().degree))).epsilon(1e-13));
    }
}

TEST_CASE("tile counts equal 1^T A^n 1") {
    struct Case {
        const char* rule;
        const char* spec;
        bool drop;
    } cases[] = {{"lattes-3x3", "4,13", true}, {"triangle-2x2", "3,7", true}, {"lattes-2x2", "0,1,4", false},
                 {"flap-2-1", "all", false}, {"lattes-2x2", "0-3", false}};
    for (const auto& cs : cases) {
        Cells cells(builtin_rule(cs.rule));
        Subsystem F = subsystem_from_spec(cells.rule(), cs.spec, cs.drop);
        TileMatrix A = tile_matrix(cells.rule(), F);
        for (int n = 0; n <= 8; ++n) {
            CAPTURE(cs.rule);
            CAPTURE(n);
            BigInt exact = subsystem_tile_count(cells.rule(), F, n);
            CHECK(exact == ones_power(A, n));
            if (n >= 1 && n <= 4) CHECK(exact == brute_count(cells, F, n));
            if (n >= 1 && n <= 3) CHECK(BigInt(subsystem_tiles(cells.rule(), F, n, Caps{}).size()) == exact);
        }
    }
}

TEST_CASE("least word search") {
    Cells cells(builtin_rule("lattes-3x3"));
    Subsystem F = full_subsystem(cells.rule());
    for (int loc = 0; loc < 2; ++loc)
        for (int col = 0; col < 2; ++col)
            for (bool interior : {false, true}) {
                std::optional<Word> brute;
                cells.for_each_word(2, {loc, col}, [&](const Word& w) {
                    if (interior && !cells.interior(w)) return true;
                    brute = w;
                    return false;
                });
                auto got = find_word(cells, F, 2, Color(loc), Color(col), interior);
                CHECK(got == brute);
            }
}

TEST_CASE("subsystem specs") {
    SubdivisionRule r = builtin_rule("lattes-2x2");
    CHECK(subsystem_from_spec(r, "0-3", false).ids == std::vector<int>{0, 1, 2, 3});
    CHECK(subsystem_from_spec(r, "0-3", true).ids == std::vector<int>{4, 5, 6, 7});
    CHECK(subsystem_from_spec(r, "all", false).full);
    CHECK_THROWS_AS(subsystem_from_spec(r, "9", false), Error);
    CHECK_THROWS_AS(subsystem_from_spec(r, "a,b", false), Error);
    CHECK_THROWS_AS(subsystem_from_spec(r, "all", true), Error);
}

TEST_CASE("exact matrix powers") {
    TileMatrix A;
    A.a = {{{2, 1}, {1, 1}}};
    auto P = matrix_power_counts(A, 10);
    // Fibonacci: [[2,1],[1,1]] = [[F3,F2],[F2,F1]], so A^10 = [[F21,F20],[F20,F19]]
    CHECK(P[0][0] == 10946);
    CHECK(P[0][1] == 6765);
    CHECK(P[1][1] == 4181);
}
