#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "tilepress/kernels.hpp"

using namespace tp::kernels;

namespace {

std::vector<double> noise(std::size_t n, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-3, 3);
    std::vector<double> v(n);
    for (auto& x : v) x = u(g) * std::ldexp(1.0, static_cast<int>(g() % 40) - 20);
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("axpy and scale are bitwise identical across variants") {
    if (!cpu_has_avx2()) return;
    for (std::size_t n : {0, 1, 3, 4, 7, 64, 1001}) {
        CAPTURE(n);
        auto x = noise(n, 1), y = noise(n, 2);
        auto y1 = y, y2 = y;
        scalar::axpy(0.37, x.data(), y1.data(), n);
        avx2::axpy(0.37, x.data(), y2.data(), n);
        CHECK(same_bits(y1, y2));
        auto s1 = x, s2 = x;
        scalar::scale(-1.7, s1.data(), n);
        avx2::scale(-1.7, s2.data(), n);
        CHECK(same_bits(s1, s2));
    }
}

TEST_CASE("ratio bounds agree and skip nonpositive denominators") {
    auto y = noise(513, 3), x = noise(513, 4);
    double lo1, hi1, lo2, hi2;
    bool a = scalar::ratio_bounds(y.data(), x.data(), y.size(), &lo1, &hi1);
    REQUIRE(a);
    // direct oracle
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0) {
            lo = std::min(lo, y[i] / x[i]);
            hi = std::max(hi, y[i] / x[i]);
        }
    CHECK(lo1 == lo);
    CHECK(hi1 == hi);
    if (cpu_has_avx2()) {
        bool b = avx2::ratio_bounds(y.data(), x.data(), y.size(), &lo2, &hi2);
        CHECK(b);
        CHECK(lo2 == lo1);
        CHECK(hi2 == hi1);
    }
    std::vector<double> z(5, 0.0);
    CHECK_FALSE(scalar::ratio_bounds(z.data(), z.data(), 5, &lo1, &hi1));
}

TEST_CASE("dispatch can be forced") {
    CHECK(select_isa(Isa::Scalar) == Isa::Scalar);
    Isa got = select_isa(Isa::Avx2);
    CHECK(got == (cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar));
    CHECK(std::string(isa_name(Isa::Scalar)) == "scalar");
}
