#pragma once

#include <string>
#include <vector>

#include "tilepress/cells.hpp"
#include "tilepress/perron.hpp"
#include "tilepress/rational.hpp"
#include "tilepress/subsystem.hpp"

namespace tp {

// Locally constant potential: one value per admissible l-word of the full rule,
// indexed by the word's lexicographic rank.
struct Potential {
    std::string name;
    int level = 1;
    std::vector<double> v;
    std::vector<Rational> exact;  // empty when only floating values are known
    double vmin = 0, vmax = 0;

    bool is_exact() const { return !exact.empty(); }
    double at(const Cells& cells, const int* w) const { return v[cells.rank(w, level)]; }
};

Potential constant_potential(const Cells& cells, const Rational& c, int level = 1);
// JSON: {"level": l, "default": "0", "values": [{"word": [..], "value": "p/q"}]}
Potential parse_potential(const Cells& cells, const std::string& text);
// "zero" or a file path.
Potential load_potential(const Cells& cells, const std::string& spec);
std::string serialize_potential(const Cells& cells, const Potential& p);
Potential lift(const Cells& cells, const Potential& p, int level);
// a*p + b*q at the larger level (exact when both are exact and a, b are integers).
Potential combine(const Cells& cells, const Potential& p, double a, const Potential& q, double b);

// Admissible l-words of a subsystem with shift transitions X -> Y (X[1..] = Y[..l-1]).
struct WordChain {
    int level = 1;
    std::vector<Word> words;      // lexicographic
    std::vector<int> state_of;    // rank among all admissible l-words -> state, or -1
    Csr adj;                      // unit weights
};
WordChain word_chain(const Cells& cells, const Subsystem& F, int level, const Caps& caps = {});

// Range of the last l-1 Birkhoff terms over all completions of a (l-1)-suffix.
struct Tails {
    int k = 0;  // l - 1
    std::vector<double> lo, hi;  // by rank of the k-word (one entry when k = 0)
    double lo_at(const Cells& cells, const int* suffix) const { return k ? lo[cells.rank(suffix, k)] : 0.0; }
    double hi_at(const Cells& cells, const int* suffix) const { return k ? hi[cells.rank(suffix, k)] : 0.0; }
    double mid_at(const Cells& cells, const int* suffix) const { return (lo_at(cells, suffix) + hi_at(cells, suffix)) / 2; }
};
Tails tails(const Cells& cells, const Potential& phi);

struct Bracket {
    double lo = 0, hi = 0;
    double mid() const { return (lo + hi) / 2; }
};

// Range of S_n phi over the n-tile w.
Bracket birkhoff_bracket(const Cells& cells, const Potential& phi, const Word& w);
Bracket birkhoff_bracket(const Cells& cells, const Potential& phi, const Tails& t, const Word& w);
// max over n-words of the bracket width.
double distortion(const Cells& cells, const Potential& phi, int n);

struct ComponentPressure {
    int size = 0;
    double log_lambda = 0;
    Word sample;  // first state word of the component
};

struct SpectralData {
    WordChain chain;
    Csr m;                    // weighted matrix on essential states, M[X->Y] = e^{phi(X)}
    std::vector<int> states;  // chain state of each row of m
    bool irreducible = false;
    std::vector<ComponentPressure> components;
    double log_lambda = 0;
    PerronResult right, left;  // filled when irreducible
};
SpectralData spectral(const Cells& cells, const Subsystem& F, const Potential& phi, double tol = 1e-13);

struct PressureEstimate {
    std::string method;
    double value = 0;
    double lo = 0, hi = 0;
    int n = 0;
    double log_zn = 0;      // log Z_n with midpoint sups
    double dn = 0;          // D_n
    bool irreducible = true;
    std::vector<ComponentPressure> components;
};

// log Z_n(F, phi) with sup S_n phi replaced by the bracket midpoint (or by lo/hi when which = -1/+1).
double log_zn(const Cells& cells, const Subsystem& F, const Potential& phi, int n, int which = 0);
// Spectral value with a bracket derived from Z_n at level zn.
PressureEstimate pressure(const Cells& cells, const Subsystem& F, const Potential& phi, int zn, double tol = 1e-13);

// Stationary chain measure on words. Each state emits one 1-tile; the measure of a word is the
// total mass of state paths emitting it.
struct MarkovMeasure {
    int level = 1;
    std::string provenance;
    std::vector<int> emit;
    std::vector<Word> label;
    Csr p;
    std::vector<double> pi;
    double pressure = 0;  // log Perron root for equilibrium measures

    int states() const { return p.n; }
};

MarkovMeasure equilibrium(const Cells& cells, const Subsystem& F, const Potential& phi, double tol = 1e-13);
// Builds a chain measure from a weighted irreducible matrix with Perron data.
MarkovMeasure chain_measure(const Csr& m, const PerronResult& right, const PerronResult& left);

double cylinder_mass(const MarkovMeasure& mu, const Word& w);
// Masses of all admissible n-words of the full rule, in lexicographic order.
std::vector<double> cylinder_masses(const Cells& cells, const MarkovMeasure& mu, int n, const Caps& caps = {});

struct GibbsLevel {
    int n = 0;
    double min_ratio = 0, max_ratio = 0;
    double mass_sum = 0;
    std::string exact_min, exact_max;  // "p/q" in exact mode
};
struct GibbsReport {
    bool exact = false;  // phi = 0 with a rational chain: ratios computed in exact arithmetic
    double c_lo = 0, c_hi = 0;  // a-priori window from Perron data
    std::vector<GibbsLevel> levels;
    bool within = true;
};
GibbsReport gibbs_report(const Cells& cells, const Subsystem& F, const Potential& phi, int cap, const Caps& caps = {});

double markov_entropy(const MarkovMeasure& mu);
double integral(const Cells& cells, const MarkovMeasure& mu, const Potential& psi);

struct MeasureStats {
    double entropy = 0;
    std::vector<double> integrals;
    double free_energy = 0;
};
MeasureStats measure_stats(const Cells& cells, const MarkovMeasure& mu, const Potential& phi, double pressure_phi,
                           const std::vector<Potential>& psis);

// Minimum and maximum cycle mean of psi on the full chain (Karp).
std::pair<double, double> cycle_mean_range(const Cells& cells, const Subsystem& F, const Potential& psi);

struct RatePoint {
    double x = 0;
    double k = 0;  // +inf outside the cycle-mean range
    double t = 0;  // maximizing t
};
struct RateCurve {
    std::vector<RatePoint> points;
    double mean = 0;  // integral of psi against the equilibrium state of phi
    double xmin = 0, xmax = 0;
    bool convex = true;
    bool t_grid_edge = false;  // some maximizer sat on the grid boundary
    int argmin = -1;
    bool unique_argmin = true;
};

struct Grid {
    double a = 0, b = 0, step = 1;
    std::vector<double> values() const;
    static Grid parse(const std::string& s);  // "a:b:step"
};

// q(t) = P(phi + t psi) - P(phi) on the full map.
double pressure_shift(const Cells& cells, const Potential& phi, const Potential& psi, double t, double p0);
double rate_at(const Cells& cells, const Potential& phi, const Potential& psi, double x, const Grid& tgrid,
               double p0, double* t_star = nullptr, bool* edge = nullptr);
RateCurve legendre_rate(const Cells& cells, const Potential& phi, const Potential& psi, const Grid& xgrid, const Grid& tgrid);

// Independent check: min over Markov kernels on the l-word chain with mean psi = x of P(phi) - h - int phi.
double constrained_rate(const Cells& cells, const Potential& phi, const Potential& psi, double x);

}  // namespace tp
