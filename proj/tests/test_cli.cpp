#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include "dccert/serialize.hpp"

using namespace dccert;

namespace {

Json interval_problem_json() {
    Json j;
    j["version"] = "1";
    Json obj;
    obj["u"] = {{"maxaffine", Json::array({Json::array({"1", "0"}), Json::array({"-1", "0"})})}};
    obj["h"] = {{"maxaffine", Json::array({Json::array({"0", "0"})})}};
    Json cset;
    cset["C"] = {{"hrep", {{"A", Json::array({Json::array({"1"}), Json::array({"-1"})})},
                           {"b", Json::array({"3", "-1"})}}}};
    cset["z0"] = Json::array({"2"});
    cset["phi_us"] = Json::array({Json{{"maxaffine", Json::array({Json::array({"1", "0"})})}}});
    j["problem"] = {{"objective", obj}, {"constraint", {{"set", cset}}}};
    j["options"] = {{"tol", "1e-6"}, {"eta_points", 9}};
    return j;
}

}  // namespace

TEST_CASE("serialization round trip is exact") {
    Json j = interval_problem_json();
    ParsedProblem p1 = parse_problem_json(j);
    REQUIRE(p1.set.has_value());
    Json j2 = problem_to_json(p1);
    ParsedProblem p2 = parse_problem_json(j2);
    Json j3 = problem_to_json(p2);
    CHECK(j2.dump() == j3.dump());  // parse -> serialize fixed point

    // Numbers survive as decimal strings bit-exactly.
    CHECK(p2.set->z0[0] == p1.set->z0[0]);
    Json j4 = problem_to_json(p2);
    CHECK(j4 == j3);
}

TEST_CASE("dtos round-trips doubles") {
    for (double v : {0.1, 1e-9, -3.25, 2.0 / 3.0, 1e100, 0.0}) {
        Json s = dtos(v);
        CHECK(parse_number(s) == v);
    }
}

TEST_CASE("malformed input raises InputError naming the field") {
    Json j = interval_problem_json();
    j["problem"].erase("constraint");
    CHECK_THROWS_AS(parse_problem_json(j), InputError);
    try {
        parse_problem_json(j);
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("constraint") != std::string::npos);
    }
}

TEST_CASE("convex function serialization covers all kinds") {
    ConvexFunc f = ConvexFunc::sum(
        {ConvexFunc::quadratic(Mat{{2, 0}, {0, 2}}, {1, -1}, 0.5),
         ConvexFunc::max_affine(2, {{{1, 0}, 0.0}, {{0, 1}, 0.25}}),
         ConvexFunc::indicator(Polytope::box({-1, -1}, {1, 1}))});
    Json j = convexfunc_to_json(f);
    ConvexFunc g = convexfunc_from_json(j);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int t = 0; t < 50; ++t) {
        Vec x{U(rng), U(rng)};
        double a = eval(f, x), b = eval(g, x);
        if (a == std::numeric_limits<double>::infinity())
            CHECK(b == std::numeric_limits<double>::infinity());
        else CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("cli binary end to end") {
    Json j = interval_problem_json();
    std::string dir = "cli_scratch";
    int mkrc = std::system(("mkdir -p " + dir).c_str());
    REQUIRE(mkrc == 0);
    std::string file = dir + "/problem.json";
    {
        std::ofstream out(file);
        out << j.dump(2);
    }
    std::string exe = "../dccert";

    // Verdict at the optimum: exit 0, Holds in the report.
    std::string rpt = dir + "/report.json";
    int rc = std::system((exe + " check-global " + file + " --point 1.0 --out " + rpt +
                          " > " + dir + "/stdout.txt 2>&1")
                             .c_str());
    REQUIRE(rc == 0);
    {
        std::ifstream in(rpt);
        Json r = Json::parse(in);
        CHECK(r.at("verdict") == "Holds");
        CHECK(r.contains("input_digest"));
        CHECK(r.contains("witnesses"));
    }

    // A Fails verdict is still exit 0.
    rc = std::system((exe + " check-global " + file + " --point 2.0 > /dev/null 2>&1").c_str());
    CHECK(rc == 0);

    // Malformed file: exit 2.
    std::string bad = dir + "/bad.json";
    {
        std::ofstream out(bad);
        out << "{\"version\": \"1\"}";
    }
    rc = std::system((exe + " check-global " + bad + " --point 1.0 > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // validate subcommand runs.
    rc = std::system((exe + " validate " + file + " > /dev/null 2>&1").c_str());
    CHECK(rc == 0);

    // oracle subcommand agrees with the known optimum.
    std::string orpt = dir + "/oracle.json";
    rc = std::system(
        (exe + " oracle " + file + " --grid-points 801 --out " + orpt + " > /dev/null 2>&1")
            .c_str());
    REQUIRE(rc == 0);
    {
        std::ifstream in(orpt);
        Json r = Json::parse(in);
        REQUIRE(r.at("found").get<bool>());
        CHECK(std::abs(parse_number(r.at("value")) - 1.0) <= 1e-2);
    }

    // Determinism: identical inputs and seeds give identical reports modulo
    // the timing field.
    std::string r1 = dir + "/r1.json", r2 = dir + "/r2.json";
    rc = std::system((exe + " check-global " + file + " --point 1.0 --seed 5 --out " + r1 +
                      " > /dev/null 2>&1")
                         .c_str());
    REQUIRE(rc == 0);
    rc = std::system((exe + " check-global " + file + " --point 1.0 --seed 5 --out " + r2 +
                      " > /dev/null 2>&1")
                         .c_str());
    REQUIRE(rc == 0);
    std::ifstream in1(r1), in2(r2);
    Json a = Json::parse(in1), b = Json::parse(in2);
    a.erase("elapsed_ms");
    b.erase("elapsed_ms");
    CHECK(a.dump() == b.dump());

    // solve subcommand with a CSV trace.
    std::string csv = dir + "/trace.csv";
    rc = std::system(
        (exe + " solve " + file + " --point 3.0 --csv " + csv + " > /dev/null 2>&1").c_str());
    CHECK(rc == 0);
    {
        std::ifstream in(csv);
        std::string header;
        std::getline(in, header);
        CHECK(header == "iter,merit,x0");
    }
}
