#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "tilepress/cli.hpp"
#include "tilepress/parallel.hpp"

using namespace tp;
using tpt::data_path;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "tilepress");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("tilepress-test-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d / name;
}

std::string pot(const char* name) { return data_path(std::string("potentials/") + name + ".json"); }

struct Golden {
    const char* file;
    std::vector<std::string> args;
};

std::vector<Golden> goldens() {
    return {
        {"validate-lattes-2x2.json", {"validate", data_path("rules/lattes-2x2.json")}},
        {"subsys-carpet.json", {"subsys", "lattes-3x3", "--drop", "4,13", "--level", "4"}},
        {"cells-lattes-2x2-2.csv", {"cells", "lattes-2x2", "--level", "2"}},
        {"pairs-lattes-2x2-2.csv", {"cells", "lattes-2x2", "--level", "2", "--pairs", "--edge", "0"}},
        {"pressure-level2.json", {"pressure", "lattes-2x2", "--phi", pot("level2"), "--zn-max", "6"}},
        {"rate-corner.csv", {"rate", "lattes-2x2", "--psi", pot("corner-indicator"), "--xgrid", "0:1:0.125"}},
        {"orbits-preimage-vertex.csv", {"orbits", "lattes-2x2", "--phi", pot("corner-indicator"), "--preimage", "3", "--base", "vertex:1"}},
        {"law-corner-8.csv", {"ldp", "lattes-2x2", "--psi", pot("corner-indicator"), "--law", "8"}},
        {"ldp-periodic.csv", {"ldp", "lattes-2x2", "--psi", pot("corner-indicator"), "--alpha", "1/2", "--estimator", "periodic", "--n", "4:12:4"}},
        {"usc-flap.csv", {"usc", "flap-2-1", "--n", "1:6", "--coarse", "2"}},
        {"equidist-corner.csv", {"equidist", "lattes-2x2", "--phi", pot("corner-indicator"), "--n", "4:12:4", "--coarse", "2"}},
        {"density-cycle.json", {"density", "lattes-3x3", "--targets", data_path("targets/cycle-3x3.json"), "--eps", "0.1"}},
    };
}

}  // namespace

TEST_CASE("subsys reports the carpet entropy") {
    Run r = run({"subsys", "lattes-3x3", "--drop", "4,13", "--entropy"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["schema"] == "tilepress/subsys/1");
    CHECK(j["h_top"].get<double>() == doctest::Approx(std::log(8.0)).epsilon(1e-14));
    CHECK_FALSE(j.contains("tile_matrix"));
    Run all = run({"subsys", "triangle-2x2", "--drop", "3,7"});
    auto k = nlohmann::json::parse(all.out);
    CHECK(k["primitivity"]["kind"] == "neither-up-to-cap");
    CHECK(k["tile_matrix"] == nlohmann::json::parse("[[3,0],[0,3]]"));
}

TEST_CASE("invalid rules exit nonzero with a report") {
    nlohmann::json j = nlohmann::json::parse(read_file(data_path("rules/lattes-2x2.json")));
    j["degree"] = 3;
    fs::path bad = scratch("bad.rule");
    write_atomic(bad.string(), j.dump());
    Run r = run({"validate", bad.string()});
    CHECK(r.code == 1);
    auto rep = nlohmann::json::parse(r.out);
    CHECK(rep["pass"] == false);
    CHECK_FALSE(rep["failures"].empty());

    Run missing = run({"validate", scratch("nothing.json").string()});
    CHECK(missing.code == 1);
    CHECK(nlohmann::json::parse(missing.err)["error"]["code"] == "io");

    write_atomic(bad.string(), "{\"m\": ");
    Run syntax = run({"cells", bad.string(), "--level", "1"});
    CHECK(syntax.code == 1);
    CHECK(nlohmann::json::parse(syntax.err)["error"]["code"] == "syntax");
}

TEST_CASE("usage and parameter errors") {
    Run a = run({"cells", "lattes-2x2"});
    CHECK(a.code == 2);
    CHECK(nlohmann::json::parse(a.err)["error"]["code"] == "usage");
    Run b = run({"frobnicate"});
    CHECK(b.code == 2);
    Run c = run({"pressure", "lattes-2x2", "--tol", "2"});
    CHECK(c.code == 1);
    CHECK(nlohmann::json::parse(c.err)["error"]["code"] == "bad_param");
    Run d = run({"cells", "lattes-3x3", "--level", "6", "--cap", "1000"});
    CHECK(d.code == 1);
    CHECK(nlohmann::json::parse(d.err)["error"]["code"] == "cap");
    Run e = run({"ldp", "lattes-2x2", "--psi", pot("corner-indicator"), "--alpha", "3", "--pair-measure", "3"});
    CHECK(e.code == 1);
    CHECK(nlohmann::json::parse(e.err)["error"]["code"] == "empty_set");
    Run f = run({"cells", "lattes-2x2", "--level", "1", "--format", "xml"});
    CHECK(f.code == 1);
    Run g = run({"render", "flap-2-1", "--out", scratch("flap").string()});
    CHECK(g.code == 1);
    CHECK(nlohmann::json::parse(g.err)["error"]["code"] == "no_geometry");
}

TEST_CASE("gen writes rules that validate") {
    fs::path p = scratch("gen.json");
    Run r = run({"gen", "flap", "--k", "2", "--flaps", "1", "-o", p.string()});
    REQUIRE(r.code == 0);
    CHECK(read_file(p.string()) == read_file(data_path("rules/flap-2-1.json")));
    CHECK(run({"validate", p.string()}).code == 0);
    Run s = run({"gen", "lattes", "--k", "3"});
    CHECK(s.out == read_file(data_path("rules/lattes-3x3.json")));
}

TEST_CASE("outputs are atomic and byte identical across runs") {
    fs::path p = scratch("rate.csv");
    std::vector<std::string> args = {"rate", "lattes-2x2", "--psi", pot("corner-indicator"), "--xgrid", "0:1:0.25", "--out", p.string()};
    REQUIRE(run(args).code == 0);
    std::string first = read_file(p.string());
    std::string summary = read_file(scratch("rate.json").string());
    CHECK(nlohmann::json::parse(summary)["schema"] == "tilepress/rate/1");
    REQUIRE(run(args).code == 0);
    CHECK(read_file(p.string()) == first);
    for (const auto& e : fs::directory_iterator(p.parent_path()))
        CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
    // CSV floats carry at most 12 significant digits
    std::regex longnum("[0-9]\\.?[0-9]{13,}");
    CHECK_FALSE(std::regex_search(first, longnum));
}

TEST_CASE("golden outputs") {
    const bool update = std::getenv("TILEPRESS_UPDATE_GOLDEN") != nullptr;
    for (const auto& g : goldens()) {
        CAPTURE(g.file);
        Run r = run(g.args);
        REQUIRE(r.code == 0);
        std::string path = std::string(TILEPRESS_GOLDEN) + "/" + g.file;
        if (update) write_atomic(path, r.out);
        CHECK(r.out == read_file(path));
    }
}

TEST_CASE("carpet rendering matches the base-3 digit rule") {
    fs::path p = scratch("carpet");
    Run r = run({"render", "lattes-3x3", "--depth", "3", "--overlay", "subsystem", "--drop", "4,13", "--out", p.string()});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    for (int face = 0; face < 2; ++face) {
        CHECK(j["files"][face]["cells"] == 729);
        CHECK(j["files"][face]["highlighted"] == 512);
        std::string svg = read_file(p.string() + "-" + color_name(face) + ".svg");
        std::regex poly("<polygon class=\"(\\w+)\"[^>]*points=\"([^\"]*)\"");
        int seen = 0;
        for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it) {
            // centroid in unit coordinates (480 px square, 10 px margin, y flipped)
            std::istringstream pts((*it)[2].str());
            double sx = 0, sy = 0, x, y;
            char comma;
            int k = 0;
            while (pts >> x >> comma >> y) sx += x, sy += y, ++k;
            double u = (sx / k - 10) / 480, v = 1 - (sy / k - 10) / 480;
            // a level-3 cell survives iff no digit position has both base-3 digits equal to 1
            int a = static_cast<int>(u * 27), b = static_cast<int>(v * 27);
            bool in = true;
            for (int d = 0; d < 3; ++d, a /= 3, b /= 3) in = in && !(a % 3 == 1 && b % 3 == 1);
            CHECK(((*it)[1].str() == "in") == in);
            ++seen;
        }
        CHECK(seen == 729);
        CHECK(svg.find("id=\"legend\"") != std::string::npos);
    }
}

TEST_CASE("pair and flower overlays") {
    fs::path p = scratch("pairs");
    Run r = run({"render", "lattes-2x2", "--depth", "2", "--overlay", "pairs", "--out", p.string()});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["pairs"] == 16);
    CHECK(j["files"][0]["highlighted"].get<int>() + j["files"][1]["highlighted"].get<int>() == 32);
    for (int n = 1; n <= 3; ++n) {
        Run f = run({"render", "lattes-2x2", "--depth", std::to_string(n), "--overlay", "flower", "--vertex", "0:2",
                     "--out", scratch("flower").string()});
        REQUIRE(f.code == 0);
        auto k = nlohmann::json::parse(f.out);
        // the face center is critical of degree 2 at every level
        CHECK(k["files"][0]["highlighted"].get<int>() + k["files"][1]["highlighted"].get<int>() == 4);
    }
}

TEST_CASE("thread cap") {
    ::setenv("TILEPRESS_THREADS", "1", 1);
    CHECK(worker_count() == 1);
    Run a = run({"equidist", "lattes-2x2", "--phi", pot("corner-indicator"), "--n", "4:8:4"});
    ::unsetenv("TILEPRESS_THREADS");
    Run b = run({"equidist", "lattes-2x2", "--phi", pot("corner-indicator"), "--n", "4:8:4"});
    CHECK(a.out == b.out);
}
