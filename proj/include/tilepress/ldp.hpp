#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tilepress/orbits.hpp"
#include "tilepress/thermo.hpp"

namespace tp {

using BigRational = boost::multiprecision::cpp_rational;

double log_big(const BigInt& x);
double log_big(const BigRational& x);

// Law of S_n psi under the equilibrium state of phi.
struct Law {
    int n = 0;
    bool rational = false;       // exact mode: chain probabilities recognized as rationals
    std::int64_t denom = 1;      // support value of bucket b is (offset + b) / denom
    long long offset = 0;
    std::vector<double> prob;
    std::vector<BigRational> exact;  // filled in exact mode
    double mean = 0;

    Rational value(std::size_t b) const { return Rational(offset + static_cast<long long>(b), denom); }
    // log P(S_n psi >= threshold)
    double log_tail(const Rational& threshold) const;
};

Law birkhoff_law(const Cells& cells, const Potential& phi, const Potential& psi, int n, const Caps& caps = {});

enum class Estimator { Birkhoff, Periodic, Preimage };
Estimator parse_estimator(const std::string& s);
const char* estimator_name(Estimator e);

struct DeviationRow {
    int n = 0;
    double rate = 0;  // -(1/n) log xi_n(mean >= alpha), +inf for an empty event
    double lo = 0, hi = 0;
};
struct DeviationCurve {
    Estimator estimator = Estimator::Birkhoff;
    Rational alpha;
    std::vector<DeviationRow> rows;
    double k_alpha = 0;     // inf of K over [alpha, inf)
    double mean = 0;
    double final_gap = 0;   // |rate(n_max) - k_alpha|
    double slope_rate = 0;  // -(difference of log xi over the last two rows) / (their n gap), extra information
};

struct NRange {
    int a = 1, b = 1, step = 1;
    std::vector<int> values() const;
    static NRange parse(const std::string& s);  // "a:b" or "a:b:step" or "n"
};

DeviationCurve deviation_curve(const Cells& cells, const Potential& phi, const Potential& psi, const Rational& alpha,
                               Estimator est, const NRange& ns, const BaseSpec& base, const Caps& caps = {});

struct UscLevel {
    int n = 0;
    int block = 0;  // n + n_f
    int tiles = 0;
    std::array<std::array<long long, 2>, 2> matrix{};
    bool rows_equal = false;
    BigInt rho;
    double h_top = 0;       // log rho
    bool h_top_exact = false;  // rho == 2 k^n
    double h_n = 0;         // h_top / block
    std::vector<double> coarse;  // masses of all coarse-level words under the averaged measure
    double mass_outside = 0;
};
struct UscReport {
    int vertex = -1;
    int degree = 0;
    int period = 1;
    int n_f = 0;
    int coarse = 2;
    std::vector<UscLevel> levels;
    double limit = 0;  // log(degree) / period
    bool hn_decreasing = true;
    bool hn_above_limit = true;
    bool mass_decreasing = true;
};
UscReport usc_experiment(const Cells& cells, const NRange& ns, int coarse, int prim_cap = 6, const Caps& caps = {});

struct PairMeasureReport {
    int n = 0;
    std::vector<Rational> alpha;
    int pairs_total = 0, pairs_qualifying = 0;
    std::array<bool, 2> interior_pair{false, false};
    std::vector<double> integrals;      // of each Phi_j against the averaged measure
    std::vector<double> integral_floor; // alpha_j - 2 D_n(Phi_j)/n, D_n taken over pairs
    bool integrals_ok = true;
    double entropy = 0;       // of the averaged measure
    double integral_phi = 0;
    double pressure = 0;      // P(f, phi)
    double free_energy = 0;
    double mass_union = 0;    // equilibrium mass of the qualifying pair tiles
    double max_gibbs = 0;
    double dn_phi = 0;        // pair distortion of phi
    double c = 0;
    double bound = 0;         // c e^{free_energy n}
    bool mass_ok = true;
    MarkovMeasure block;      // chain over qualifying pair tiles of f^n
};
PairMeasureReport pair_measure_construct(const Cells& cells, const Potential& phi, const std::vector<Potential>& Phi,
                                         const std::vector<Rational>& alpha, int n, const Caps& caps = {});

struct EquidistRow {
    int n = 0;
    double tv = 0;
    double bracket = 0;
};
struct EquidistCurve {
    std::string mode;  // "preimage" or "periodic"
    int coarse = 2;
    std::vector<EquidistRow> rows;
};
EquidistCurve equidistribution_curve(const Cells& cells, const Potential& phi, const NRange& ns, int coarse,
                                     const BaseSpec& base, bool periodic);

}  // namespace tp
