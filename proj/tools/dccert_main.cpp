// dccert: batch front end for the DC optimality certificate checkers.
//
// Subcommands take a JSON problem file plus a candidate point and emit a
// human-readable verdict on stdout and, optionally, a JSON report and CSV
// trace. Exit codes: 0 = a verdict was produced (Fails is still a verdict),
// 2 = input error, 3 = numeric failure.

#include <chrono>
#include <random>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dccert/oracle.hpp"
#include "dccert/serialize.hpp"
#include "dccert/solver.hpp"

using namespace dccert;

namespace {

struct CommonArgs {
    std::string file;
    std::vector<double> point;
    std::string out_path;
    std::string csv_path;
    double tol = -1;
    double eta_max = -1;
    std::size_t eta_points = 0;
    std::size_t alpha_points = 0;
    unsigned seed = 0;
    std::size_t threads = 0;
    bool have_seed = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ParsedProblem load(const CommonArgs& a, std::string& digest) {
    std::string text = read_file(a.file);
    digest = fnv1a_hex(text);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw InputError(std::string("JSON parse error: ") + e.what());
    }
    ParsedProblem p = parse_problem_json(j);
    if (a.tol > 0) p.options.tol = a.tol;
    if (a.eta_points) p.options.eta_points = a.eta_points;
    if (a.alpha_points) p.options.alpha_points = a.alpha_points;
    if (a.have_seed) p.options.seed = a.seed;
    if (a.eta_max > 0) p.options.eta_max = a.eta_max;
    if (a.threads) p.options.threads = a.threads;
    else if (const char* env = std::getenv("DCCERT_THREADS"))
        p.options.threads = std::strtoul(env, nullptr, 10);
    return p;
}

CertOptions to_cert_options(const ProblemOptions& o) {
    CertOptions c;
    c.tol = o.tol;
    c.eta_points = o.eta_points;
    c.seed = o.seed;
    c.threads = std::max<std::size_t>(o.threads, 1);
    c.eta_schedule = o.eta_schedule;
    if (o.eta_max > 0 && c.eta_schedule.empty()) {
        c.eta_schedule.push_back(0.0);
        for (std::size_t i = 1; i <= o.eta_points; ++i)
            c.eta_schedule.push_back(o.eta_max * double(i) / double(o.eta_points));
    }
    return c;
}

const char* verdict_name(CertVerdict v) {
    switch (v) {
        case CertVerdict::Holds: return "Holds";
        case CertVerdict::Fails: return "Fails";
        default: return "NotFoundAtResolution";
    }
}

Json witness_json(const GlobalWitness& w) {
    Json j;
    j["eta"] = dtos(w.eta);
    Json xs = Json::array();
    for (double v : w.xstar) xs.push_back(dtos(v));
    j["xstar"] = xs;
    j["alpha"] = Json::array({dtos(w.alpha.empty() ? 1.0 : w.alpha[0]),
                              dtos(w.alpha.size() > 1 ? w.alpha[1] : 0.0)});
    Json lam = Json::array();
    for (double v : w.lam) lam.push_back(dtos(v));
    j["lambda"] = lam;
    j["eta1"] = dtos(w.eta1);
    j["eta2"] = dtos(w.eta2);
    j["eta3"] = dtos(w.eta3);
    j["slack"] = dtos(w.slack);
    return j;
}

Json base_report(const std::string& check, const std::string& digest) {
    Json r;
    r["tool"] = "dccert 1.0";
    r["check"] = check;
    r["input_digest"] = digest;
    r["assumptions"] = Json::array(
        {"finite-dimensional data; sets are restricted to polytopes in this tool",
         "continuity hypotheses of the global theorem hold by construction for "
         "finite-valued controls"});
    return r;
}

void write_report(const Json& report, const CommonArgs& a) {
    if (!a.out_path.empty()) {
        std::ofstream out(a.out_path);
        out << report.dump(2) << "\n";
    }
}

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_point = true) {
    cmd->add_option("file", a.file, "problem JSON file")->required();
    if (needs_point)
        cmd->add_option("--point", a.point, "candidate point coordinates")->required();
    cmd->add_option("--tol", a.tol, "verdict tolerance");
    cmd->add_option("--eta-max", a.eta_max, "eta schedule upper end");
    cmd->add_option("--eta-points", a.eta_points, "eta schedule points");
    cmd->add_option("--alpha-points", a.alpha_points, "alpha grid points");
    cmd->add_option("--seed", a.seed, "sampling seed")->each([&](const std::string&) {
        a.have_seed = true;
    });
    cmd->add_option("--threads", a.threads, "worker threads (or DCCERT_THREADS)");
    cmd->add_option("--out", a.out_path, "write the JSON report here");
    cmd->add_option("--csv", a.csv_path, "write a CSV trace here");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DC optimality certificate checker"};
    app.require_subcommand(1);

    CommonArgs ga, la, sa, ca, ia, da, va, oa, ra;
    auto* cg = app.add_subcommand("check-global", "Global optimality certificate");
    add_common(cg, ga);
    auto* cl = app.add_subcommand("check-local", "Local necessary conditions");
    add_common(cl, la);
    auto* cs = app.add_subcommand("check-sufficient", "Local sufficiency certificate");
    add_common(cs, sa);
    auto* cc = app.add_subcommand("check-cone", "Cone-constrained global certificate");
    add_common(cc, ca);
    auto* ci = app.add_subcommand("sip", "Semi-infinite multiplier check");
    add_common(ci, ia);
    auto* cd = app.add_subcommand("sdp", "Semidefinite multiplier check");
    add_common(cd, da);
    auto* cv = app.add_subcommand("validate", "B-DC and invariant validation");
    add_common(cv, va, false);
    auto* co = app.add_subcommand("oracle", "Brute-force grid minimum");
    add_common(co, oa, false);
    std::size_t oracle_pts = 201;
    co->add_option("--grid-points", oracle_pts, "points per dimension");
    auto* cr = app.add_subcommand("solve", "DCA-style local solve");
    add_common(cr, ra);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        auto t0 = std::chrono::steady_clock::now();
        auto elapsed_ms = [&] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                .count();
        };

        if (cg->parsed() || cc->parsed()) {
            CommonArgs& a = cg->parsed() ? ga : ca;
            std::string digest;
            ParsedProblem p = load(a, digest);
            CertOptions opts = to_cert_options(p.options);
            Certificate cert;
            if (p.set && cg->parsed()) cert = check_global(*p.set, a.point, opts);
            else if (p.cone) cert = check_cone_global(*p.cone, a.point, opts);
            else throw InputError("problem kind does not match the subcommand");
            std::cout << "verdict: " << verdict_name(cert.verdict) << "\n";
            if (cert.verdict == CertVerdict::Fails)
                std::cout << "refuted at eta=" << dtos(cert.refuted_eta)
                          << " xstar=" << vec_to_string(cert.refuted_xstar)
                          << " margin=" << dtos(cert.refuted_margin) << "\n";
            if (cert.verdict == CertVerdict::Holds)
                std::cout << "converse alpha1 >= " << dtos(cert.min_alpha1)
                          << (cert.all_alpha1_positive ? " (positive: converse applies)" : "")
                          << "\n";
            Json r = base_report(cg->parsed() ? "check-global" : "check-cone", digest);
            r["verdict"] = verdict_name(cert.verdict);
            r["min_alpha1"] = dtos(cert.min_alpha1);
            r["eta_bar_estimate"] = dtos(cert.eta_bar_estimate);
            Json ws = Json::array();
            for (std::size_t i = 0; i < cert.witnesses.size() && i < 32; ++i)
                ws.push_back(witness_json(cert.witnesses[i]));
            r["witnesses"] = ws;
            if (!cert.notes.empty()) r["notes"] = cert.notes;
            r["elapsed_ms"] = elapsed_ms();
            if (!a.csv_path.empty()) {
                std::ofstream csv(a.csv_path);
                csv << "eta,covered\n";
                for (double e : cert.schedule) csv << dtos(e) << ",1\n";
            }
            write_report(r, a);
            return 0;
        }
        if (cl->parsed()) {
            std::string digest;
            ParsedProblem p = load(la, digest);
            Json r = base_report("check-local", digest);
            LocalCertificate lc;
            if (p.set) lc = check_local_necessary(*p.set, la.point, p.options.tol);
            else if (p.cone) lc = check_cone_local(*p.cone, la.point, p.options.tol);
            else throw InputError("check-local expects a set or cone constrained problem");
            std::cout << (lc.multipliers_found ? "multipliers found" : "no multipliers")
                      << ", QC " << (lc.qc_holds ? "holds" : "fails") << "\n";
            r["multipliers_found"] = lc.multipliers_found;
            r["qc_holds"] = lc.qc_holds;
            r["complementarity"] = dtos(lc.complementarity);
            if (lc.multipliers_found) {
                r["alpha"] = Json::array({dtos(lc.alpha[0]), dtos(lc.alpha[1])});
                Json lam = Json::array();
                for (double v : lc.lam) lam.push_back(dtos(v));
                r["lambda"] = lam;
            }
            if (lc.cone_form_found) r["cone_eta"] = dtos(lc.cone_eta);
            if (!lc.notes.empty()) r["notes"] = lc.notes;
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, la);
            return 0;
        }
        if (cs->parsed()) {
            std::string digest;
            ParsedProblem p = load(sa, digest);
            Json r = base_report("check-sufficient", digest);
            SufficientCertificate sc;
            if (p.set)
                sc = check_local_sufficient(*p.set, sa.point, {}, to_cert_options(p.options));
            else if (p.cone)
                sc = check_cone_sufficient(*p.cone, sa.point, {}, to_cert_options(p.options));
            else throw InputError("check-sufficient expects a set or cone problem");
            std::cout << (sc.verdict == SufficientVerdict::LocalMin ? "LocalMin" : "NotCertified")
                      << "\n";
            r["verdict"] = sc.verdict == SufficientVerdict::LocalMin ? "LocalMin" : "NotCertified";
            r["inclusion_ok"] = sc.inclusion_ok;
            r["qualification_ok"] = sc.qualification_ok;
            if (!sc.notes.empty()) r["notes"] = sc.notes;
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, sa);
            return 0;
        }
        if (ci->parsed()) {
            std::string digest;
            ParsedProblem p = load(ia, digest);
            if (!p.sip) throw InputError("sip subcommand expects a sip problem");
            SipResult sr = sip_check_local(*p.sip, ia.point, 1e-6, p.options.tol);
            std::cout << (sr.found ? "measure found"
                                   : (sr.qc_holds ? "NoMultiplier" : "abstain (QC violated)"))
                      << "\n";
            Json r = base_report("sip", digest);
            r["found"] = sr.found;
            r["qc_holds"] = sr.qc_holds;
            Json mu = Json::array();
            for (auto& [i, w] : sr.mu.weights)
                mu.push_back(Json{{"index", i}, {"weight", dtos(w)}});
            r["measure"] = mu;
            r["complementarity"] = dtos(sr.complementarity);
            r["lipschitz_estimate"] = dtos(sr.lipschitz_estimate);
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, ia);
            return 0;
        }
        if (cd->parsed()) {
            std::string digest;
            ParsedProblem p = load(da, digest);
            if (!p.sdp) throw InputError("sdp subcommand expects an sdp problem");
            SdpResult sr =
                sdp_check_local(p.sdp->M, p.sdp->phi, p.sdp->Q, da.point, p.options.tol);
            std::cout << (sr.found ? "multiplier found"
                                   : (sr.qc_holds ? "NoMultiplier" : "abstain (QC violated)"))
                      << "\n";
            Json r = base_report("sdp", digest);
            r["found"] = sr.found;
            r["qc_holds"] = sr.qc_holds;
            if (sr.found) {
                Json A = Json::array();
                for (std::size_t i = 0; i < sr.A.p(); ++i) {
                    Json row = Json::array();
                    for (std::size_t j = 0; j < sr.A.p(); ++j)
                        row.push_back(dtos(sr.A.entries(i, j)));
                    A.push_back(row);
                }
                r["A"] = A;
                r["complementarity"] = dtos(sr.complementarity);
            }
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, da);
            return 0;
        }
        if (cv->parsed()) {
            std::string digest;
            ParsedProblem p = load(va, digest);
            Json r = base_report("validate", digest);
            if (p.set) {
                Polytope dual = dual_slope(p.set->C, p.set->z0);
                std::vector<Vec> grid;
                std::mt19937_64 rng(p.options.seed);
                std::uniform_real_distribution<double> U(-2.0, 2.0);
                for (int i = 0; i < 24; ++i) {
                    Vec x(p.set->dim());
                    for (auto& v : x) v = U(rng);
                    grid.push_back(x);
                }
                BdcReport rep = validate_bdc(p.set->Phi, dual, grid);
                std::cout << "B-DC validation " << (rep.passed ? "pass" : "fail")
                          << " (worst violation " << dtos(rep.worst_violation) << ")\n";
                r["bdc_passed"] = rep.passed;
                r["worst_violation"] = dtos(rep.worst_violation);
                r["domain_convex"] = rep.domain_convex;
            } else if (p.cone) {
                std::vector<Vec> grid;
                std::mt19937_64 rng(p.options.seed);
                std::uniform_real_distribution<double> U(-2.0, 2.0);
                for (int i = 0; i < 24; ++i) {
                    Vec x(p.cone->dim());
                    for (auto& v : x) v = U(rng);
                    grid.push_back(x);
                }
                BdcReport rep = validate_bdc(p.cone->Phi, p.cone->base.B, grid);
                std::cout << "B-DC validation over the cone base "
                          << (rep.passed ? "pass" : "fail") << " (worst violation "
                          << dtos(rep.worst_violation) << ")\n";
                r["bdc_passed"] = rep.passed;
                r["worst_violation"] = dtos(rep.worst_violation);
            } else if (p.sdp) {
                std::vector<Vec> grid;
                std::mt19937_64 rng(p.options.seed);
                std::uniform_real_distribution<double> U(-2.0, 2.0);
                for (int i = 0; i < 12; ++i) {
                    Vec x(p.sdp->phi.dim());
                    for (auto& v : x) v = U(rng);
                    grid.push_back(x);
                }
                double worst = p.sdp->M.validate(grid, 24, p.options.seed);
                std::cout << "DC matrix-mapping validation "
                          << (worst <= 1e-7 ? "pass" : "fail") << " (worst violation "
                          << dtos(worst) << ")\n";
                r["matrix_dc_passed"] = worst <= 1e-7;
                r["worst_violation"] = dtos(worst);
            } else {
                std::cout << "validate: nothing to check for this problem kind\n";
            }
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, va);
            return 0;
        }
        if (co->parsed()) {
            std::string digest;
            ParsedProblem p = load(oa, digest);
            Json r = base_report("oracle", digest);
            GridSpec G;
            std::function<bool(const Vec&)> feas;
            std::function<double(const Vec&)> obj;
            if (p.set) {
                const Problem& P = *p.set;
                double tol = p.options.tol;
                feas = [&P, tol](const Vec& x) { return P.feasible(x, tol); };
                obj = [&P](const Vec& x) { return dc_eval(P.objective, x); };
                G.lo = Vec(P.dim(), -10.0);
                G.hi = Vec(P.dim(), 10.0);
            } else if (p.cone) {
                const ConeProblem& P = *p.cone;
                double tol = p.options.tol;
                feas = [&P, tol](const Vec& x) { return P.feasible(x, tol); };
                obj = [&P](const Vec& x) { return dc_eval(P.objective, x); };
                G.lo = Vec(P.dim(), -10.0);
                G.hi = Vec(P.dim(), 10.0);
            } else if (p.sip) {
                const SipProblem& S = *p.sip;
                double tol = p.options.tol;
                feas = [&S, tol](const Vec& x) {
                    for (const auto& f : S.constraint_funcs)
                        if (dc_eval(f, x) > tol) return false;
                    return true;
                };
                obj = [&S](const Vec& x) { return dc_eval(S.objective, x); };
                G.lo = Vec(S.dim(), -10.0);
                G.hi = Vec(S.dim(), 10.0);
            } else {
                throw InputError("oracle: unsupported problem kind");
            }
            G.points_per_dim = oracle_pts;
            BruteResult br = brute_min(feas, obj, G);
            if (br.found)
                std::cout << "grid minimum " << dtos(br.value) << " at "
                          << vec_to_string(br.x_min) << " (" << br.feasible_count
                          << " feasible points)\n";
            else std::cout << "NoFeasiblePoint\n";
            r["found"] = br.found;
            if (br.found) {
                r["value"] = dtos(br.value);
                Json xm = Json::array();
                for (double v : br.x_min) xm.push_back(dtos(v));
                r["x_min"] = xm;
            }
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, oa);
            return 0;
        }
        if (cr->parsed()) {
            std::string digest;
            ParsedProblem p = load(ra, digest);
            Json r = base_report("solve", digest);
            SolveTrace tr;
            std::size_t dim = 0;
            if (p.set) {
                dim = p.set->dim();
                tr = solve_dca(*p.set, ra.point, Polytope::box(Vec(dim, -10.0), Vec(dim, 10.0)));
            } else if (p.cone) {
                dim = p.cone->dim();
                tr = solve_dca_cone(*p.cone, ra.point,
                                    Polytope::box(Vec(dim, -10.0), Vec(dim, 10.0)));
            } else {
                throw InputError("solve: unsupported problem kind");
            }
            std::cout << "status "
                      << (tr.status == SolveStatus::Converged
                              ? "Converged"
                              : tr.status == SolveStatus::Stalled ? "Stalled" : "MaxIter")
                      << " at " << vec_to_string(tr.final) << " after " << tr.iterates.size()
                      << " iterations\n";
            if (!ra.csv_path.empty()) {
                std::ofstream csv(ra.csv_path);
                csv << "iter,merit";
                for (std::size_t d = 0; d < dim; ++d) csv << ",x" << d;
                csv << "\n";
                for (std::size_t i = 0; i < tr.iterates.size(); ++i) {
                    csv << i << "," << dtos(tr.iterates[i].second);
                    for (double v : tr.iterates[i].first) csv << "," << dtos(v);
                    csv << "\n";
                }
            }
            r["status"] = tr.status == SolveStatus::Converged ? "Converged" : "MaxIter";
            Json xf = Json::array();
            for (double v : tr.final) xf.push_back(dtos(v));
            r["final"] = xf;
            r["iterations"] = tr.iterates.size();
            r["elapsed_ms"] = elapsed_ms();
            write_report(r, ra);
            return 0;
        }
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasiblePointError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const NumericFailureError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
