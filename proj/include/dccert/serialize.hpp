#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "dccert/applications.hpp"
#include "dccert/certificates.hpp"
#include "dccert/conic.hpp"

namespace dccert {

using Json = nlohmann::json;

/// Shortest decimal string that round-trips to the same double.
std::string dtos(double v);
double parse_number(const Json& j);  // accepts numbers and decimal strings

/// FNV-1a digest of raw bytes, hex-encoded (report provenance field).
std::string fnv1a_hex(const std::string& bytes);

Json polytope_to_json(const Polytope& P);
Polytope polytope_from_json(const Json& j);

Json convexfunc_to_json(const ConvexFunc& f);
ConvexFunc convexfunc_from_json(const Json& j);

Json dcpair_to_json(const DCPair& f);
DCPair dcpair_from_json(const Json& j);

struct ProblemOptions {
    double tol = 1e-6;
    std::size_t eta_points = 33;
    std::size_t alpha_points = 101;
    std::vector<double> eta_schedule;
    unsigned seed = 2024;
    std::size_t threads = 1;
    double eta_max = -1;  // <0: default rule
};

struct SdpData {
    MatrixMap M;
    DCPair phi;
    Polytope Q;
};

/// Parsed problem file: exactly one of the four problem kinds.
struct ParsedProblem {
    std::string version = "1";
    std::optional<Problem> set;
    std::optional<ConeProblem> cone;
    std::optional<SipProblem> sip;
    std::optional<SdpData> sdp;
    ProblemOptions options;
};

ParsedProblem parse_problem_json(const Json& j);
Json problem_to_json(const ParsedProblem& p);

}  // namespace dccert
