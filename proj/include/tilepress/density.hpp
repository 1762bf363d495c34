#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tilepress/thermo.hpp"

namespace tp {

// One component of a target measure: the measure of maximal entropy of a subsystem, or the
// periodic orbit of a cyclic word.
struct DensityTarget {
    Rational weight;
    std::string label;
    bool cycle = false;
    Subsystem sub;  // when !cycle
    Word word;      // when cycle
};

struct DensitySpec {
    std::vector<DensityTarget> targets;
    std::vector<Potential> observables;  // level 1 with rational values
};

// JSON: {"targets": [{"weight": "1/2", "drop": [4, 13]}, {"weight": "1/2", "keep": "all"},
//                    {"weight": "1", "cycle": [4]}],
//        "observables": ["file.json", "zero", {...inline potential...}]}
// Relative observable paths resolve against base_dir.
DensitySpec parse_density_spec(const Cells& cells, const std::string& text, const std::string& base_dir);

// Chain of the target component; states emit one 1-tile each.
MarkovMeasure target_measure(const Cells& cells, const DensityTarget& t);

struct DensityCaps {
    int n_max = 400;
    int r_sum_max = 12;
    std::uint64_t dag_nodes = 6'000'000;
    int pair_level_max = 6;
    int sample_tries = 200;
};

// Selected word set for one target: words of the support chain with every Birkhoff sum in its
// box, plus the tiles of one interior pair per color (each extended by a connector and a sampled
// typical segment).
struct WordSet {
    int target = 0;
    int n = 0;
    std::uint64_t dag_nodes = 0;
    double log_box = 0;      // log of the number of box words
    double log_count = 0;    // log |T|
    double entropy_gap = 0;  // |log|T|/n - h|
    std::vector<Word> extras;
    std::array<Word, 2> pair_body;  // word of T through the white tile of the interior pair, per location
    std::array<double, 2> located{};  // words located in each color
    std::array<double, 2> colored{};  // words of each color
};

struct DensityReport {
    double eps = 0;
    std::uint64_t seed = 0;
    std::vector<double> weights;
    std::vector<double> target_entropy;
    std::vector<std::vector<double>> target_integrals;  // [target][observable]
    double h_target = 0;
    std::vector<double> int_target;

    int N = 0;  // connector length
    std::array<std::array<Word, 2>, 2> connector;  // [from color][to location]
    int n = 0;
    std::vector<int> r;
    int R = 0;  // sum r_i (n + N)
    double cond_a = 0, cond_b = 0, cond_c = 0;  // log2/R, weight mismatch, connector cost
    std::vector<WordSet> sets;

    double log_rho = 0;   // log of the Perron root of the block tile matrix
    double h_oracle = 0;  // log_rho / R
    bool rows_equal = true;
    std::array<std::array<bool, 2>, 2> interior_witness{};  // [location][color] R-word interior
    bool strongly_primitive = false;
    bool ergodic = false;

    MarkovMeasure nu;
    double h_nu = 0;
    std::vector<double> int_nu;
    double delta_h = 0;
    std::vector<double> delta_int;
    bool success = false;
};

DensityReport entropy_density_construct(const Cells& cells, const DensitySpec& spec, double eps, std::uint64_t seed,
                                        const DensityCaps& caps = {});

}  // namespace tp
