#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "support.hpp"
#include "tilepress/rule.hpp"

using namespace tp;
using tpt::shipped_rule;

namespace {

const char* kRules[] = {"lattes-2x2", "lattes-3x3", "triangle-2x2", "flap-2-1"};

double area(const Polygon& p) {
    double a = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point& u = p[i];
        const Point& v = p[(i + 1) % p.size()];
        a += u[0] * v[1] - v[0] * u[1];
    }
    return a / 2;
}

std::string expect_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code;
    }
    return "";
}

}  // namespace

TEST_CASE("shipped rules validate and close Riemann-Hurwitz") {
    for (const char* name : kRules) {
        CAPTURE(name);
        SubdivisionRule r = shipped_rule(name);
        ValidationReport v = validate_rule(r);
        CHECK(v.pass);
        CHECK(v.failures.empty());
        // sum over 1-vertices of (deg - 1) is 2d - 2 on the sphere
        CHECK(v.rh_sum == 2 * r.degree - 2);
        // Euler: V - E + F = 2 with F = 2d tiles and E = m d edges
        CHECK(v.vertex_count - r.m * r.degree + 2 * r.degree == 2);
    }
}

TEST_CASE("builtin shapes") {
    SubdivisionRule l2 = lattes_rule(2), l3 = lattes_rule(3), tri = triangle_rule(), fl = flap_rule(2, 1);
    CHECK(l2.m == 4);
    CHECK(l2.degree == 4);
    CHECK(l2.size() == 8);
    CHECK(l3.degree == 9);
    CHECK(tri.m == 3);
    CHECK(tri.degree == 4);
    CHECK(fl.degree == 5);
    CHECK(fl.size() == 10);
    CHECK_FALSE(fl.geometry.has_value());
    CHECK(builtin_rule("lattes-3x3").degree == 9);
    CHECK(expect_code([] { builtin_rule("lattes-2x3"); }) == "unknown_rule");
    CHECK(expect_code([] { builtin_rule("spiral"); }) == "unknown_rule");
}

TEST_CASE("serialization round trip is byte stable") {
    for (const char* name : kRules) {
        CAPTURE(name);
        SubdivisionRule r = builtin_rule(name);
        std::string a = serialize_rule(r);
        std::string b = serialize_rule(parse_rule(a));
        CHECK(a == b);
        CHECK(a == tp::read_file(tpt::data_path(std::string("rules/") + name + ".json")));
    }
}

TEST_CASE("parse errors carry codes") {
    CHECK(expect_code([] { parse_rule("{\"m\": 4,"); }) == "syntax");
    CHECK(expect_code([] { parse_rule("[]"); }) == "schema");
    CHECK(expect_code([] { parse_rule("{\"m\": 4, \"degree\": 4}"); }) == "schema");
    nlohmann::json j = nlohmann::json::parse(serialize_rule(lattes_rule(2)));
    j["tiles"][0]["color"] = "grey";
    CHECK(expect_code([&] { parse_rule(j.dump()); }) == "schema");
}

TEST_CASE("broken involution is reported") {
    nlohmann::json j = nlohmann::json::parse(serialize_rule(lattes_rule(2)));
    auto& s = j["tiles"][0]["sides"][1];
    s["neighbor_side"] = (s["neighbor_side"].get<int>() + 1) % 4;
    SubdivisionRule r = parse_rule(j.dump());
    ValidationReport v = validate_rule(r);
    CHECK_FALSE(v.pass);
    CHECK_FALSE(v.failures.empty());
    CHECK(expect_code([&] { require_valid(r); }) == "invalid_rule");
}

TEST_CASE("wrong degree is reported") {
    nlohmann::json j = nlohmann::json::parse(serialize_rule(lattes_rule(2)));
    j["degree"] = 5;
    CHECK_FALSE(validate_rule(parse_rule(j.dump())).pass);
}

TEST_CASE("iterated rule is the rule of f^q") {
    for (const char* name : {"lattes-2x2", "triangle-2x2", "flap-2-1"}) {
        CAPTURE(name);
        SubdivisionRule r = builtin_rule(name);
        SubdivisionRule r2 = iterate_rule(r, 2);
        CHECK(r2.degree == r.degree * r.degree);
        CHECK(r2.size() == 2 * r2.degree);
        ValidationReport v = validate_rule(r2);
        CHECK(v.pass);
        CHECK(v.rh_sum == 2 * r2.degree - 2);
    }
}

TEST_CASE("index tables agree with the sides") {
    SubdivisionRule r = lattes_rule(3);
    RuleIndex ix = index_rule(r);
    for (int t = 0; t < r.size(); ++t)
        for (int a = 0; a < r.m; ++a) {
            int j = ix.edge_side[t][a];
            REQUIRE(j >= 0);
            CHECK(r.tiles[t].sides[j].image_edge == a);
        }
}

TEST_CASE("realized tiles tile each face") {
    for (const char* name : {"lattes-2x2", "lattes-3x3", "triangle-2x2"}) {
        CAPTURE(name);
        SubdivisionRule r = builtin_rule(name);
        double face = std::abs(area(r.geometry->vertices));
        for (int n = 1; n <= 3; ++n) {
            std::vector<Polygon> ps = realize_geometry(r, n);
            CHECK(ps.size() == static_cast<std::size_t>(2 * tpt::ipow(r.degree, n)));
            double total = 0;
            for (const auto& p : ps) {
                CHECK(p.size() == static_cast<std::size_t>(r.m));
                // every tile is non-degenerate and of equal share in these uniform rules
                CHECK(std::abs(area(p)) == doctest::Approx(face / tpt::ipow(r.degree, n)).epsilon(1e-9));
                total += std::abs(area(p));
            }
            CHECK(total == doctest::Approx(2 * face).epsilon(1e-12));
        }
    }
    CHECK(expect_code([] { realize_geometry(flap_rule(2, 1), 2); }) == "no_geometry");
}
