#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tilepress/density.hpp"

using namespace tp;
using tpt::data_path;

namespace {

DensitySpec spec_file(const Cells& cells, const std::string& name) {
    return parse_density_spec(cells, read_file(data_path("targets/" + name)), data_path("targets"));
}

// Oracle checks on a chain measure: stationarity, row sums, entropy from the definition.
void check_chain(const MarkovMeasure& nu, double h_reported) {
    const Csr& P = nu.p;
    std::vector<double> next(P.n, 0.0);
    double pi_sum = 0, h = 0, row_err = 0;
    for (int i = 0; i < P.n; ++i) {
        pi_sum += nu.pi[i];
        double row = 0;
        for (std::size_t k = P.ptr[i]; k < P.ptr[i + 1]; ++k) {
            row += P.val[k];
            next[P.col[k]] += nu.pi[i] * P.val[k];
            if (P.val[k] > 0) h -= nu.pi[i] * P.val[k] * std::log(P.val[k]);
        }
        row_err = std::max(row_err, std::abs(row - 1));
    }
    CHECK(row_err < 1e-12);
    CHECK(pi_sum == doctest::Approx(1).epsilon(1e-10));
    double err = 0;
    for (int i = 0; i < P.n; ++i) err = std::max(err, std::abs(next[i] - nu.pi[i]));
    CHECK(err < 1e-12);
    CHECK(h == doctest::Approx(h_reported).epsilon(1e-9));
}

}  // namespace

TEST_CASE("target specs") {
    Cells cells(builtin_rule("lattes-3x3"));
    DensitySpec s = spec_file(cells, "mixed-3x3.json");
    REQUIRE(s.targets.size() == 2);
    CHECK(s.targets[0].weight == Rational(1, 2));
    CHECK(s.targets[0].sub.ids.size() == 16);
    CHECK(s.targets[1].sub.full);
    CHECK(s.observables.size() == 2);
    CHECK_THROWS_AS(parse_density_spec(cells, "{\"targets\": [{\"weight\": \"1/2\", \"keep\": \"all\"}]}", "."), Error);
    CHECK_THROWS_AS(parse_density_spec(cells, "{\"targets\": [{\"weight\": 1, \"shape\": 3}]}", "."), Error);
    CHECK_THROWS_AS(parse_density_spec(cells, "{\"targets\": []}", "."), Error);
    CHECK_THROWS_AS(parse_density_spec(cells,
                                       "{\"targets\": [{\"weight\": 1, \"keep\": \"all\"}], \"observables\": "
                                       "[{\"level\": 2, \"values\": []}]}",
                                       "."),
                    Error);
}

TEST_CASE("target measures") {
    Cells cells(builtin_rule("lattes-3x3"));
    DensitySpec s = spec_file(cells, "mixed-3x3.json");
    CHECK(markov_entropy(target_measure(cells, s.targets[0])) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    CHECK(markov_entropy(target_measure(cells, s.targets[1])) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
    DensitySpec c = spec_file(cells, "cycle-3x3.json");
    MarkovMeasure cyc = target_measure(cells, c.targets[0]);
    CHECK(markov_entropy(cyc) == doctest::Approx(0).scale(1));
    CHECK(integral(cells, cyc, c.observables[0]) == doctest::Approx(1));
}

TEST_CASE("cycle target") {
    Cells cells(builtin_rule("lattes-3x3"));
    DensitySpec s = spec_file(cells, "cycle-3x3.json");
    DensityReport r = entropy_density_construct(cells, s, 0.1, 1);
    CHECK(r.success);
    CHECK(r.ergodic);
    CHECK(r.strongly_primitive);
    CHECK(r.delta_h <= 0.1);
    check_chain(r.nu, r.h_nu);
    CHECK(r.int_nu[0] == doctest::Approx(integral(cells, r.nu, s.observables[0])).epsilon(1e-9));
}

TEST_CASE("mixed target") {
    Cells cells(builtin_rule("lattes-3x3"));
    DensitySpec s = spec_file(cells, "mixed-3x3.json");
    DensityReport r = entropy_density_construct(cells, s, 0.05, 1);
    CHECK(r.success);
    CHECK(r.ergodic);
    CHECK(r.strongly_primitive);
    CHECK(r.rows_equal);
    CHECK(r.h_target == doctest::Approx(0.5 * std::log(8.0) + 0.5 * std::log(9.0)).epsilon(1e-12));
    CHECK(std::abs(r.h_nu - r.h_target) <= 0.05);
    // the Markov measure is the maximal-entropy measure of the block subsystem
    CHECK(r.h_nu == doctest::Approx(r.h_oracle).epsilon(1e-9));
    check_chain(r.nu, r.h_nu);
    for (std::size_t j = 0; j < s.observables.size(); ++j) {
        CHECK(r.int_nu[j] == doctest::Approx(integral(cells, r.nu, s.observables[j])).epsilon(1e-9));
        CHECK(r.delta_int[j] <= 0.05);
    }
    // seeded runs are reproducible
    DensityReport again = entropy_density_construct(cells, s, 0.05, 1);
    CHECK(again.h_nu == r.h_nu);
    CHECK(again.nu.pi == r.nu.pi);
}
