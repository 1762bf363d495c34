#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace tp {

// Small exact rational with int64 parts; overflow throws.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d);

    static Rational parse(const std::string& s);  // "p/q", "-3", "0.125"

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return double(num_) / double(den_); }
    std::string str() const;

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator-() const { return Rational(-num_, den_); }
    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator<(const Rational& o) const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::int64_t lcm64(std::int64_t a, std::int64_t b);

// p/q with q <= max_den when x equals it to within 1e-15 relative, else nullopt.
std::optional<Rational> recognize_rational(double x, std::int64_t max_den = 1 << 24);

}  // namespace tp
