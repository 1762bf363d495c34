#include "tilepress/rational.hpp"

#include <cmath>
#include <numeric>

#include "tilepress/common.hpp"

namespace tp {

namespace {

std::int64_t narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw Error("overflow", "rational overflow");
    return static_cast<std::int64_t>(v);
}

Rational make(__int128 n, __int128 d) {
    if (d == 0) throw Error("bad_rational", "zero denominator");
    if (d < 0) { n = -n; d = -d; }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { n /= a; d /= a; }
    return Rational(narrow(n), narrow(d));
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error("bad_rational", "zero denominator");
    if (d < 0) { n = -n; d = -d; }
    std::int64_t g = std::gcd(n, d);
    if (g > 1) { n /= g; d /= g; }
    num_ = n;
    den_ = d;
}

Rational Rational::parse(const std::string& s) {
    if (s.empty()) throw Error("bad_rational", "empty rational");
    try {
        auto slash = s.find('/');
        if (slash != std::string::npos) {
            std::size_t p1 = 0, p2 = 0;
            long long n = std::stoll(s.substr(0, slash), &p1);
            long long d = std::stoll(s.substr(slash + 1), &p2);
            if (p1 != slash || p2 != s.size() - slash - 1) throw Error("bad_rational", "bad rational '" + s + "'");
            return Rational(n, d);
        }
        auto dot = s.find('.');
        if (dot != std::string::npos) {
            std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
            bool neg = !ip.empty() && ip[0] == '-';
            if (neg) ip = ip.substr(1);
            if (fp.size() > 17) throw Error("bad_rational", "too many decimals in '" + s + "'");
            std::int64_t den = 1;
            for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
            std::size_t p = 0;
            std::int64_t a = ip.empty() ? 0 : std::stoll(ip, &p);
            if (!ip.empty() && p != ip.size()) throw Error("bad_rational", "bad rational '" + s + "'");
            std::int64_t b = fp.empty() ? 0 : std::stoll(fp, &p);
            if (!fp.empty() && p != fp.size()) throw Error("bad_rational", "bad rational '" + s + "'");
            Rational r = make(__int128(a) * den + b, den);
            return neg ? -r : r;
        }
        std::size_t p = 0;
        long long n = std::stoll(s, &p);
        if (p != s.size()) throw Error("bad_rational", "bad rational '" + s + "'");
        return Rational(n);
    } catch (const std::logic_error&) {
        throw Error("bad_rational", "bad rational '" + s + "'");
    }
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator+(const Rational& o) const {
    return make(__int128(num_) * o.den_ + __int128(o.num_) * den_, __int128(den_) * o.den_);
}
Rational Rational::operator-(const Rational& o) const { return *this + (-o); }
Rational Rational::operator*(const Rational& o) const {
    return make(__int128(num_) * o.num_, __int128(den_) * o.den_);
}
bool Rational::operator<(const Rational& o) const {
    return __int128(num_) * o.den_ < __int128(o.num_) * den_;
}

std::int64_t lcm64(std::int64_t a, std::int64_t b) {
    return narrow(__int128(a / std::gcd(a, b)) * b);
}

std::optional<Rational> recognize_rational(double x, std::int64_t max_den) {
    if (!std::isfinite(x) || std::abs(x) > 1e12) return std::nullopt;
    // continued fraction convergents
    double r = x;
    std::int64_t h0 = 1, h1 = 0, k0 = 0, k1 = 1;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(r);
        std::int64_t ai = static_cast<std::int64_t>(a);
        std::int64_t h = ai * h0 + h1, k = ai * k0 + k1;
        if (k > max_den) break;
        h1 = h0; h0 = h;
        k1 = k0; k0 = k;
        if (std::abs(x - double(h) / double(k)) <= 1e-15 * std::max(1.0, std::abs(x))) return Rational(h, k);
        double frac = r - a;
        if (frac < 1e-300) break;
        r = 1 / frac;
    }
    return std::nullopt;
}

}  // namespace tp
