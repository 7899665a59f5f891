// Acceptance suite: one test case per criterion, each printing a
// [criterion N] PASS/FAIL line. Tolerances are pinned in code.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "corpus.hpp"
#include "dccert/applications.hpp"
#include "dccert/oracle.hpp"
#include "dccert/solver.hpp"

using namespace dccert;

namespace {

void report(int criterion, bool pass, const std::string& detail = "") {
    std::printf("[criterion %2d] %s%s%s\n", criterion, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " - ", detail.c_str());
    std::fflush(stdout);
}

ConvexFunc random_max_affine(std::mt19937_64& rng, std::size_t n, int max_pieces = 4) {
    std::normal_distribution<double> N;
    std::uniform_int_distribution<int> K(2, max_pieces);
    MaxAffineData pieces;
    int k = K(rng);
    for (int i = 0; i < k; ++i) {
        Vec a(n);
        for (auto& v : a) v = N(rng);
        pieces.push_back({a, 0.5 * N(rng)});
    }
    return ConvexFunc::max_affine(n, pieces);
}

GridSpec grid_of(const Vec& lo, const Vec& hi, std::size_t pts) { return GridSpec{lo, hi, pts}; }

}  // namespace

TEST_CASE("criterion 1: improvement-function equivalence") {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0.5, 1.5);
    bool all_ok = true;
    int built = 0;
    for (int trial = 0; built < 50 && trial < 200; ++trial) {
        std::size_t n = (trial % 2) + 1;
        ConvexFunc u_obj = random_max_affine(rng, n);
        ConvexFunc h = (trial % 3 == 0) ? random_max_affine(rng, n, 2) : ConvexFunc::zero(n);
        DCPair objective{u_obj.kind() == ConvexFunc::Kind::MaxAffine && trial % 3 == 0
                             ? ConvexFunc::sum({u_obj, h})
                             : u_obj,
                         h};
        // Affine constraint map centered so that the box is partly feasible.
        Vec a(n);
        for (auto& v : a) v = N(rng);
        ConvexFunc phi_u = (trial % 3 == 0)
                               ? ConvexFunc::sum({ConvexFunc::affine(a, 0), h})
                               : ConvexFunc::affine(a, 0);
        double halfwidth = U(rng) + 0.3;
        Polytope C = Polytope::interval(-halfwidth, halfwidth);
        Problem P{objective, VectorMap({phi_u}, h), C, {0.0}};

        Vec lo(n, -2.0), hi(n, 2.0);
        auto feas = [&](const Vec& x) { return P.feasible(x, 1e-9); };
        auto obj = [&](const Vec& x) { return dc_eval(P.objective, x); };
        BruteResult br = brute_min(feas, obj, grid_of(lo, hi, 201));
        if (!br.found) continue;
        ++built;

        ImprovementObjective io = improvement_objective(P, br.value);
        // Merit argmins over the same grid vs constrained argmins.
        double merit_min = 1e100;
        GridSpec G = grid_of(lo, hi, 201);
        std::vector<Vec> merit_arg, orig_arg;
        std::vector<std::size_t> idx(n, 0);
        Vec x(n);
        while (true) {
            for (std::size_t i = 0; i < n; ++i)
                x[i] = G.lo[i] + (G.hi[i] - G.lo[i]) * double(idx[i]) / double(G.points_per_dim - 1);
            double mv = io.merit(x);
            merit_min = std::min(merit_min, mv);
            std::size_t c = 0;
            while (c < n && ++idx[c] == G.points_per_dim) idx[c++] = 0;
            if (c == n) break;
        }
        if (std::abs(merit_min) > 1e-8) {
            all_ok = false;
            break;
        }
        idx.assign(n, 0);
        while (true) {
            for (std::size_t i = 0; i < n; ++i)
                x[i] = G.lo[i] + (G.hi[i] - G.lo[i]) * double(idx[i]) / double(G.points_per_dim - 1);
            if (io.merit(x) <= merit_min + 1e-9) merit_arg.push_back(x);
            if (feas(x) && obj(x) <= br.value + 1e-9) orig_arg.push_back(x);
            std::size_t c = 0;
            while (c < n && ++idx[c] == G.points_per_dim) idx[c++] = 0;
            if (c == n) break;
        }
        auto close_to_some = [&](const Vec& p, const std::vector<Vec>& set) {
            for (const Vec& q : set)
                if (norm_inf(sub(p, q)) <= 1e-6) return true;
            return false;
        };
        for (const Vec& p : merit_arg)
            if (!close_to_some(p, orig_arg)) { all_ok = false; break; }
        for (const Vec& p : orig_arg)
            if (!close_to_some(p, merit_arg)) { all_ok = false; break; }
        if (!all_ok) break;
    }
    bool pass = all_ok && built == 50;
    report(1, pass, "argmin sets coincide on " + std::to_string(built) + "/50 instances");
    CHECK(pass);
}

TEST_CASE("criterion 2: DC subdifferential formula vs definition oracle") {
    std::mt19937_64 rng(102);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<Vec> samples1, samples2;
    for (int i = 0; i <= 600; ++i) samples1.push_back({-6.0 + 12.0 * i / 600.0});
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j)
            samples2.push_back({-5.0 + 10.0 * i / 40.0, -5.0 + 10.0 * j / 40.0});

    int disagreements = 0, checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + trial % 2;
        const std::vector<Vec>& samples = n == 1 ? samples1 : samples2;
        ConvexFunc g = random_max_affine(rng, n);
        ConvexFunc h = random_max_affine(rng, n, 3);
        Vec x(n), xstar(n);
        for (auto& v : x) v = N(rng);
        for (auto& v : xstar) v = N(rng);
        double eps = U(rng) * 0.4;
        DcSubdiffResult r = dc_subdiff_contains(g, h, x, xstar, eps);
        if (r.verdict == Verdict3::Unknown) continue;
        auto f = [&](const Vec& y) { return eval(g, y) - eval(h, y); };
        bool oracle_ok = subdiff_definition_check(f, x, xstar, eps, samples);
        ++checked;
        // The oracle refutes exactly; the analytic path must agree there,
        // and an analytic Yes must survive the oracle.
        if (!oracle_ok && r.verdict == Verdict3::Yes) ++disagreements;
        if (r.verdict == Verdict3::Yes && !oracle_ok) ++disagreements;
        if (r.verdict == Verdict3::No && oracle_ok) {
            // Sound: the schedule saw a violated eta the sampling missed;
            // verify by a direct vertex re-check at the refuted eta.
            Polytope S = eps_subdiff_vrep(h, x, r.refuted_eta);
            bool truly = false;
            for (const Vec& v : S.vertices())
                if (!in_eps_subdiff(g, x, add(xstar, v), r.refuted_eta + eps)) truly = true;
            if (!truly) ++disagreements;
        }
    }
    bool pass = disagreements == 0 && checked >= 280;
    report(2, pass,
           std::to_string(checked) + " decided instances, " + std::to_string(disagreements) +
               " disagreements");
    CHECK(pass);
}

TEST_CASE("criterion 3: sup rule vs explicit max-affine membership") {
    std::mt19937_64 rng(103);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0, 1);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t k = 2 + trial % 3;  // components
        std::size_t n = 1 + trial % 2;
        std::vector<ConvexFunc> us;
        MaxAffineData pieces;
        for (std::size_t j = 0; j < k; ++j) {
            Vec a(n);
            for (auto& v : a) v = N(rng);
            double b = 0.5 * N(rng);
            us.push_back(ConvexFunc::affine(a, b));
            pieces.push_back({a, b});
        }
        VectorMap Phi(us, ConvexFunc::zero(n));
        ConvexFunc F = ConvexFunc::max_affine(n, pieces);
        Vec x(n), xstar(n);
        for (auto& v : x) v = N(rng);
        for (auto& v : xstar) v = N(rng);
        double eps = U(rng) * 0.5;

        SupRuleResult r =
            sup_compact_subdiff_contains(Phi, ConvexFunc::zero(n), Polytope::simplex(k), x,
                                         xstar, eps, 1e-8);
        bool direct = in_eps_subdiff(F, x, xstar, eps, 1e-8);
        if ((r.verdict == Verdict3::Yes) != direct) {
            // Tolerance skin: re-check with a relaxed/reduced eps margin.
            bool inner = in_eps_subdiff(F, x, xstar, eps - 1e-7, 1e-12);
            bool outer = in_eps_subdiff(F, x, xstar, eps + 1e-7, 1e-12);
            if (inner == outer) ++mismatches;
        }
    }
    bool pass = mismatches == 0;
    report(3, pass, std::to_string(mismatches) + " mismatches in 200 instances");
    CHECK(pass);
}

TEST_CASE("criterion 4: global certificate soundness on the corpus") {
    auto entries = corpus::golden();
    CertOptions opts;
    opts.eta_points = 9;
    opts.boundary_samples = 12;
    int bad = 0;
    for (const auto& e : entries) {
        CAPTURE(e.name);
        auto feas = [&](const Vec& x) { return e.problem.feasible(x, 1e-9); };
        auto obj = [&](const Vec& x) { return dc_eval(e.problem.objective, x); };
        BruteResult br =
            brute_min(feas, obj, grid_of(e.box_lo, e.box_hi, e.box_lo.size() == 1 ? 2001 : 201));
        REQUIRE(br.found);
        CHECK(obj(e.xbar) <= br.value + 1e-6);  // xbar is a grid optimum

        Certificate cg = check_global(e.problem, e.xbar, opts);
        if (cg.verdict != CertVerdict::Holds) ++bad;
        CHECK(cg.verdict == CertVerdict::Holds);
        for (const auto& p : e.perturbed) {
            REQUIRE(e.problem.feasible(p, 1e-9));
            Certificate cf = check_global(e.problem, p, opts);
            if (cf.verdict != CertVerdict::Fails) ++bad;
            CHECK(cf.verdict == CertVerdict::Fails);
        }
    }
    report(4, bad == 0, std::to_string(bad) + " wrong verdicts over 80 checks");
    CHECK(bad == 0);
}

TEST_CASE("criterion 5: local necessary conditions on the corpus") {
    auto entries = corpus::golden();
    int found_at_opt = 0, expected_at_opt = 0;
    int refuted = 0, stationary_documented = 0, tested = 0;
    double worst_compl = 0;
    for (const auto& e : entries) {
        CAPTURE(e.name);
        // At the optimum (skip when the control is genuinely nonsmooth there).
        try {
            LocalCertificate lc = check_local_necessary(e.problem, e.xbar);
            ++expected_at_opt;
            if (lc.multipliers_found) {
                ++found_at_opt;
                worst_compl = std::max(worst_compl, std::abs(lc.complementarity));
            }
        } catch (const NotDifferentiableError&) {
            // documented: control nonsmooth at this optimum
        }
        // At the first differentiable non-optimal probe.
        for (const auto& p : e.perturbed) {
            try {
                LocalCertificate lc = check_local_necessary(e.problem, p);
                ++tested;
                if (!lc.multipliers_found) ++refuted;
                else ++stationary_documented;
                break;
            } catch (const NotDifferentiableError&) {
                continue;
            }
        }
    }
    bool pass = found_at_opt == expected_at_opt && worst_compl <= 1e-8 && refuted >= 18;
    report(5, pass,
           "multipliers at " + std::to_string(found_at_opt) + "/" +
               std::to_string(expected_at_opt) + " optima, complementarity <= " +
               std::to_string(worst_compl) + ", refuted " + std::to_string(refuted) + "/" +
               std::to_string(tested) + " non-optima (" +
               std::to_string(stationary_documented) + " stationary documented)");
    CHECK(pass);
}

TEST_CASE("criterion 6: cone reduction consistency") {
    auto entries = corpus::golden();
    CertOptions opts;
    opts.eta_points = 9;
    opts.boundary_samples = 8;
    int agree = 0;
    for (const auto& e : entries) {
        CAPTURE(e.name);
        ConeProblem cp = corpus::to_cone(e.problem);
        Certificate a = check_global(e.problem, e.xbar, opts);
        Certificate b = check_cone_global(cp, e.xbar, opts);
        Certificate af = check_global(e.problem, e.perturbed[0], opts);
        Certificate bf = check_cone_global(cp, e.perturbed[0], opts);
        bool same = a.verdict == b.verdict && af.verdict == bf.verdict;
        if (same) ++agree;
        CHECK(same);
    }
    report(6, agree == 20, std::to_string(agree) + "/20 identical verdict pairs");
    CHECK(agree == 20);
}

TEST_CASE("criterion 7: SIP multiplier on the t-grid family") {
    auto run = [&](std::size_t grid_n) -> SipResult {
        SipProblem S;
        S.objective = DCPair{ConvexFunc::affine({-1}, 0), ConvexFunc::zero(1)};
        for (std::size_t i = 0; i < grid_n; ++i) {
            double t = 1.0 + 2.0 * double(i) / double(grid_n - 1);
            S.index_points.push_back(t);
            S.constraint_funcs.push_back(
                DCPair{ConvexFunc::affine({1}, -t), ConvexFunc::zero(1)});
        }
        S.box = Polytope::interval(-5, 5);
        return sip_check_local(S, {1.0});
    };
    SipResult coarse = run(21), fine = run(41);
    bool pass = coarse.found && fine.found && coarse.mu.weights.size() == 1 &&
                fine.mu.weights.size() == 1 &&
                std::abs(coarse.mu.weights[0].second - 1.0) <= 1e-8 &&
                std::abs(fine.mu.weights[0].second - 1.0) <= 1e-8 &&
                std::abs(coarse.complementarity) <= 1e-8 &&
                std::abs(fine.complementarity) <= 1e-8 &&
                coarse.mu.weights[0].first == 0 && fine.mu.weights[0].first == 0;
    report(7, pass, "active-index weight 1 at both grid densities");
    CHECK(pass);
}

TEST_CASE("criterion 8: expected functional vs explicit sum") {
    std::mt19937_64 rng(108);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0.1, 1.0);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + trial % 2;
        ConvexFunc f1 = random_max_affine(rng, n), f2 = random_max_affine(rng, n);
        double w1 = U(rng), w2 = U(rng);
        std::vector<std::pair<double, DCPair>> terms{
            {w1, DCPair{f1, ConvexFunc::zero(n)}}, {w2, DCPair{f2, ConvexFunc::zero(n)}}};
        CanonFunc total = add_canon(scale_canon(canonicalize(f1), w1),
                                    scale_canon(canonicalize(f2), w2));
        Vec x(n), y(n);
        for (auto& v : x) v = N(rng);
        for (auto& v : y) v = N(rng);
        bool viaexp = expected_subdiff_contains(terms, x, y, 1e-8);
        bool direct = in_eps_subdiff(total, x, y, 0.0, 1e-8);
        if (viaexp != direct) ++mismatches;
    }
    report(8, mismatches == 0, std::to_string(mismatches) + " mismatches in 100 instances");
    CHECK(mismatches == 0);
}

TEST_CASE("criterion 9: SDP scalarization equivalence") {
    std::mt19937_64 rng(109);
    std::normal_distribution<double> N;
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t p = 2 + trial % 4;  // p <= 5
        std::size_t n = 1 + trial % 2;
        std::vector<std::vector<DCPair>> entries(p, std::vector<DCPair>(p));
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) {
                Vec a(n);
                for (auto& v : a) v = N(rng);
                DCPair e{ConvexFunc::affine(a, N(rng)), ConvexFunc::zero(n)};
                entries[i][j] = e;
                entries[j][i] = e;
            }
        MatrixMap M(p, entries, ConvexFunc::zero(n));
        Vec x(n);
        for (auto& v : x) v = N(rng);
        worst = std::max(worst, scalarization_equiv_check(M, x, 4096, 1000 + trial));
    }
    report(9, worst <= 1e-6, "worst gap " + std::to_string(worst));
    CHECK(worst <= 1e-6);
}

TEST_CASE("criterion 10: SDP certificates on known families") {
    std::mt19937_64 rng(110);
    std::normal_distribution<double> N;
    int bad = 0;
    double worst_compl = 0;

    auto diag_entries = [&]() {
        std::vector<std::vector<DCPair>> e(2, std::vector<DCPair>(2));
        auto zero = DCPair{ConvexFunc::affine({0}, 0), ConvexFunc::zero(1)};
        e[0][0] = DCPair{ConvexFunc::affine({1}, -1), ConvexFunc::zero(1)};
        e[0][1] = e[1][0] = zero;
        e[1][1] = DCPair{ConvexFunc::affine({-1}, -1), ConvexFunc::zero(1)};
        return e;
    }();
    Polytope Q = Polytope::interval(-5, 5);
    DCPair phi{ConvexFunc::affine({-1}, 0), ConvexFunc::zero(1)};  // min -x

    {
        MatrixMap M(2, diag_entries, ConvexFunc::zero(1));
        SdpResult at_opt = sdp_check_local(M, phi, Q, {1.0});
        if (!(at_opt.found && std::abs(at_opt.complementarity) <= 1e-8)) ++bad;
        worst_compl = std::max(worst_compl, std::abs(at_opt.complementarity));
        for (double x : {-1.0, 0.0, 0.5}) {
            SdpResult r = sdp_check_local(M, phi, Q, {x});
            if (r.found) ++bad;
        }
    }

    int families = 0;
    for (int trial = 0; families < 5 && trial < 60; ++trial) {
        // Random symmetric affine family Phi(x) = A0 + x A1.
        Mat A0(2, 2), A1(2, 2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = i; j < 2; ++j) {
                A0(i, j) = A0(j, i) = N(rng) - (i == j ? 1.2 : 0.0);
                A1(i, j) = A1(j, i) = N(rng);
            }
        std::vector<std::vector<DCPair>> entries(2, std::vector<DCPair>(2));
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                entries[i][j] =
                    DCPair{ConvexFunc::affine({A1(i, j)}, A0(i, j)), ConvexFunc::zero(1)};
        MatrixMap M(2, entries, ConvexFunc::zero(1));
        // Feasible interval by brute scan of lambda1.
        auto lam1 = [&](double x) {
            return sym_eig(M.value({x})).values[0];
        };
        double xr = -1e9, xl = 1e9;
        bool interior_seen = false;
        for (int i = 0; i <= 4000; ++i) {
            double x = -5.0 + 10.0 * i / 4000.0;
            if (lam1(x) <= 0) {
                xl = std::min(xl, x);
                xr = std::max(xr, x);
                if (lam1(x) < -1e-3) interior_seen = true;
            }
        }
        if (!interior_seen || xr - xl < 0.5 || xr > 4.9 || xl < -4.9) continue;
        ++families;
        // Polish the right endpoint by bisection: lam1(xr) = 0.
        double lo = xr, hi = std::min(xr + 10.0 / 4000.0, 5.0);
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (lam1(mid) <= 0) lo = mid;
            else hi = mid;
        }
        xr = lo;
        double lo2 = std::max(xl - 10.0 / 4000.0, -5.0), hi2 = xl;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo2 + hi2);
            if (lam1(mid) <= 0) hi2 = mid;
            else lo2 = mid;
        }
        xl = hi2;

        SdpResult at_opt = sdp_check_local(M, phi, Q, {xr}, 1e-7);
        if (!(at_opt.found && std::abs(at_opt.complementarity) <= 1e-8)) ++bad;
        if (at_opt.found) worst_compl = std::max(worst_compl, std::abs(at_opt.complementarity));
        // Non-optimal probes: the other boundary point and two interior ones.
        for (double x : {xl, 0.5 * (xl + xr), xl + 0.25 * (xr - xl)}) {
            SdpResult r = sdp_check_local(M, phi, Q, {x}, 1e-7);
            if (r.found && r.qc_holds) ++bad;
        }
    }
    bool pass = bad == 0 && families == 5 && worst_compl <= 1e-8;
    report(10, pass,
           std::to_string(families) + "/5 random families, " + std::to_string(bad) +
               " bad verdicts, complementarity <= " + std::to_string(worst_compl));
    CHECK(pass);
}

TEST_CASE("criterion 11: eigensolver kernel bounds") {
    std::mt19937_64 rng(111);
    std::normal_distribution<double> N;
    bool pass = true;
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t p = 2 + trial % 7;  // p <= 8
        Mat A(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) A(i, j) = A(j, i) = 3.0 * N(rng);
        EigSym e = sym_eig(SymMatrix::from(A));
        double fro = 0, err = 0, orth = 0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                double rec = 0, dv = 0;
                for (std::size_t k = 0; k < p; ++k) {
                    rec += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
                    dv += e.vectors(k, i) * e.vectors(k, j);
                }
                err += (rec - A(i, j)) * (rec - A(i, j));
                fro += A(i, j) * A(i, j);
                orth = std::max(orth, std::abs(dv - (i == j ? 1.0 : 0.0)));
            }
        if (std::sqrt(err) > 1e-8 * (1.0 + std::sqrt(fro)) || orth > 1e-10) {
            pass = false;
            break;
        }
    }
    report(11, pass, "500 random matrices, p in 2..8");
    CHECK(pass);
}

TEST_CASE("criterion 12: solver sanity over the corpus") {
    auto entries = corpus::golden();
    CertOptions opts;
    opts.eta_points = 7;
    opts.boundary_samples = 8;
    bool monotone = true;
    int certified_false = 0;
    for (const auto& e : entries) {
        CAPTURE(e.name);
        SolveTrace tr;
        try {
            tr = solve_dca(e.problem, e.box_hi, Polytope::box(e.box_lo, e.box_hi));
        } catch (const InputError&) {
            continue;  // non-polyhedral constraint scalarization: out of scope
        }
        for (std::size_t i = 1; i < tr.iterates.size(); ++i)
            if (tr.iterates[i].second > tr.iterates[i - 1].second + 1e-10) monotone = false;
        if (tr.status != SolveStatus::Converged) continue;
        if (!e.problem.feasible(tr.final, 1e-6)) continue;
        SufficientCertificate sc = check_local_sufficient(e.problem, tr.final, {}, opts);
        if (sc.verdict == SufficientVerdict::LocalMin) {
            auto feas = [&](const Vec& x) { return e.problem.feasible(x, 1e-9); };
            auto obj = [&](const Vec& x) { return dc_eval(e.problem.objective, x); };
            double impr = local_improvement(feas, obj, tr.final, 1e-2,
                                            e.box_lo.size() == 1 ? 1001 : 33);
            if (impr > 1e-6) ++certified_false;
        }
    }
    bool pass = monotone && certified_false == 0;
    report(12, pass,
           std::string(monotone ? "merit monotone" : "merit NOT monotone") + ", " +
               std::to_string(certified_false) + " certified-false local-min claims");
    CHECK(pass);
}
