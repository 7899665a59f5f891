#include "dccert/serialize.hpp"

#include <charconv>
#include <cstdint>

namespace dccert {

std::string dtos(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_number(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        double v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw InputError("malformed number string: \"" + s + "\"");
        return v;
    }
    throw InputError("expected a number, got: " + j.dump());
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(dtos(x));
    return a;
}

Vec vec_from_json(const Json& j) {
    if (!j.is_array()) throw InputError("expected an array for a vector: " + j.dump());
    Vec v;
    for (const auto& e : j) v.push_back(parse_number(e));
    return v;
}

Json mat_to_json(const Mat& m) {
    Json a = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) a.push_back(vec_to_json(m.row(i)));
    return a;
}

Mat mat_from_json(const Json& j, std::size_t expect_cols = 0) {
    if (!j.is_array()) throw InputError("expected an array of rows: " + j.dump());
    Mat m;
    for (const auto& row : j) {
        Vec r = vec_from_json(row);
        if (expect_cols && r.size() != expect_cols)
            throw InputError("matrix row width mismatch");
        m.append_row(r);
    }
    return m;
}

}  // namespace

Json polytope_to_json(const Polytope& P) {
    Json j;
    if (P.has_hrep()) {
        const HRep& h = P.hrep();
        Json hr;
        hr["A"] = mat_to_json(h.A);
        hr["b"] = vec_to_json(h.b);
        if (h.Aeq.rows() > 0) {
            hr["Aeq"] = mat_to_json(h.Aeq);
            hr["beq"] = vec_to_json(h.beq);
        }
        j["hrep"] = hr;
    } else {
        Json vr = Json::array();
        for (const Vec& v : P.vertices()) vr.push_back(vec_to_json(v));
        j["vrep"] = vr;
    }
    return j;
}

Polytope polytope_from_json(const Json& j) {
    if (j.contains("hrep")) {
        const Json& hr = j.at("hrep");
        Mat A = mat_from_json(hr.at("A"));
        Vec b = vec_from_json(hr.at("b"));
        Mat Aeq;
        Vec beq;
        if (hr.contains("Aeq")) {
            Aeq = mat_from_json(hr.at("Aeq"));
            beq = vec_from_json(hr.at("beq"));
        }
        if (A.rows() != b.size()) throw InputError("hrep: A rows and b length differ");
        return Polytope::from_hrep(A, b, Aeq, beq);
    }
    if (j.contains("vrep")) {
        std::vector<Vec> vs;
        for (const auto& v : j.at("vrep")) vs.push_back(vec_from_json(v));
        if (vs.empty()) throw InputError("vrep: empty vertex list");
        return Polytope::from_vrep(vs);
    }
    throw InputError("polytope: expected field \"hrep\" or \"vrep\"");
}

Json convexfunc_to_json(const ConvexFunc& f) {
    Json j;
    switch (f.kind()) {
        case ConvexFunc::Kind::MaxAffine: {
            Json pieces = Json::array();
            for (const auto& p : f.pieces()) {
                Json row = Json::array();
                for (double a : p.a) row.push_back(dtos(a));
                row.push_back(dtos(p.b));
                pieces.push_back(row);
            }
            j["maxaffine"] = pieces;
            break;
        }
        case ConvexFunc::Kind::Quadratic:
            j["quadratic"] = {{"Q", mat_to_json(f.Q())}, {"q", vec_to_json(f.q())},
                              {"c", dtos(f.c())}};
            break;
        case ConvexFunc::Kind::IndicatorPoly:
            j["indicator"] = polytope_to_json(f.domain_poly());
            break;
        case ConvexFunc::Kind::Sum: {
            Json terms = Json::array();
            for (const auto& t : f.terms()) terms.push_back(convexfunc_to_json(t));
            j["sum"] = terms;
            break;
        }
    }
    return j;
}

ConvexFunc convexfunc_from_json(const Json& j) {
    if (j.contains("maxaffine")) {
        MaxAffineData pieces;
        std::size_t n = 0;
        for (const auto& row : j.at("maxaffine")) {
            Vec all = vec_from_json(row);
            if (all.empty()) throw InputError("maxaffine: empty piece");
            double b = all.back();
            all.pop_back();
            n = all.size();
            pieces.push_back({all, b});
        }
        return ConvexFunc::max_affine(n, pieces);
    }
    if (j.contains("quadratic")) {
        const Json& q = j.at("quadratic");
        Vec qq = vec_from_json(q.at("q"));
        Mat Q = mat_from_json(q.at("Q"), qq.size());
        double c = q.contains("c") ? parse_number(q.at("c")) : 0.0;
        return ConvexFunc::quadratic(Q, qq, c);
    }
    if (j.contains("indicator")) return ConvexFunc::indicator(polytope_from_json(j.at("indicator")));
    if (j.contains("sum")) {
        std::vector<ConvexFunc> terms;
        for (const auto& t : j.at("sum")) terms.push_back(convexfunc_from_json(t));
        return ConvexFunc::sum(terms);
    }
    throw InputError("convex function: unknown tag in " + j.dump());
}

Json dcpair_to_json(const DCPair& f) {
    return Json{{"u", convexfunc_to_json(f.u)}, {"h", convexfunc_to_json(f.h)}};
}

DCPair dcpair_from_json(const Json& j) {
    if (!j.contains("u") || !j.contains("h"))
        throw InputError("dc pair: expected fields \"u\" and \"h\"");
    return DCPair{convexfunc_from_json(j.at("u")), convexfunc_from_json(j.at("h"))};
}

namespace {

ProblemOptions options_from_json(const Json& j) {
    ProblemOptions o;
    if (!j.is_object()) return o;
    if (j.contains("tol")) o.tol = parse_number(j.at("tol"));
    if (j.contains("eta_points")) o.eta_points = j.at("eta_points").get<std::size_t>();
    if (j.contains("alpha_points")) o.alpha_points = j.at("alpha_points").get<std::size_t>();
    if (j.contains("seed")) o.seed = j.at("seed").get<unsigned>();
    if (j.contains("threads")) o.threads = j.at("threads").get<std::size_t>();
    if (j.contains("eta_max")) o.eta_max = parse_number(j.at("eta_max"));
    if (j.contains("eta_schedule"))
        for (const auto& e : j.at("eta_schedule")) o.eta_schedule.push_back(parse_number(e));
    return o;
}

Json options_to_json(const ProblemOptions& o) {
    Json j;
    j["tol"] = dtos(o.tol);
    j["eta_points"] = o.eta_points;
    j["alpha_points"] = o.alpha_points;
    j["seed"] = o.seed;
    j["threads"] = o.threads;
    if (o.eta_max >= 0) j["eta_max"] = dtos(o.eta_max);
    if (!o.eta_schedule.empty()) {
        Json s = Json::array();
        for (double e : o.eta_schedule) s.push_back(dtos(e));
        j["eta_schedule"] = s;
    }
    return j;
}

}  // namespace

ParsedProblem parse_problem_json(const Json& j) {
    ParsedProblem out;
    if (j.contains("version")) out.version = j.at("version").get<std::string>();
    if (j.contains("options")) out.options = options_from_json(j.at("options"));
    if (!j.contains("problem")) throw InputError("problem file: missing field \"problem\"");
    const Json& pj = j.at("problem");

    if (pj.contains("sip")) {
        const Json& sj = pj.at("sip");
        SipProblem S;
        S.objective = dcpair_from_json(sj.at("objective"));
        for (const auto& t : sj.at("index_points")) S.index_points.push_back(parse_number(t));
        for (const auto& f : sj.at("phi_t")) S.constraint_funcs.push_back(dcpair_from_json(f));
        if (S.index_points.size() != S.constraint_funcs.size())
            throw InputError("sip: index_points and phi_t lengths differ");
        S.box = sj.contains("box") ? polytope_from_json(sj.at("box")).converted()
                                   : Polytope::box(Vec(S.dim(), -10.0), Vec(S.dim(), 10.0));
        out.sip = std::move(S);
        return out;
    }
    if (pj.contains("sdp")) {
        const Json& sj = pj.at("sdp");
        std::size_t p = sj.at("p").get<std::size_t>();
        DCPair phi = dcpair_from_json(pj.at("objective"));
        std::vector<std::vector<DCPair>> entries;
        for (const auto& row : sj.at("entries")) {
            std::vector<DCPair> r;
            for (const auto& e : row) r.push_back(dcpair_from_json(e));
            entries.push_back(std::move(r));
        }
        Polytope Q = pj.contains("Q")
                         ? polytope_from_json(pj.at("Q")).converted()
                         : Polytope::box(Vec(phi.dim(), -100.0), Vec(phi.dim(), 100.0));
        out.sdp.emplace(SdpData{MatrixMap(p, std::move(entries), phi.h), phi, Q});
        return out;
    }

    DCPair objective = dcpair_from_json(pj.at("objective"));
    std::optional<Polytope> Q;
    if (pj.contains("Q")) Q = polytope_from_json(pj.at("Q")).converted();

    if (pj.contains("constraint") && pj.at("constraint").contains("cone")) {
        const Json& cj = pj.at("constraint").at("cone");
        std::vector<Vec> gens;
        for (const auto& g : cj.at("generators")) gens.push_back(vec_from_json(g));
        std::size_t m = gens.empty() ? 1 : gens[0].size();
        PolyCone K = PolyCone::from_generators(m, gens);
        std::optional<Vec> e;
        if (cj.contains("base_e")) e = vec_from_json(cj.at("base_e"));
        std::vector<ConvexFunc> us;
        for (const auto& u : pj.at("constraint").at("phi_us"))
            us.push_back(convexfunc_from_json(u));
        VectorMap Phi(us, objective.h);
        out.cone.emplace(objective, std::move(Phi), make_base(K, e), Q);
        return out;
    }
    if (pj.contains("constraint") && pj.at("constraint").contains("set")) {
        const Json& cj = pj.at("constraint").at("set");
        Polytope C = polytope_from_json(cj.at("C")).converted();
        Vec z0 = vec_from_json(cj.at("z0"));
        std::vector<ConvexFunc> us;
        for (const auto& u : cj.at("phi_us")) us.push_back(convexfunc_from_json(u));
        VectorMap Phi(us, objective.h);
        out.set.emplace(objective, std::move(Phi), C, z0, Q);
        return out;
    }
    throw InputError("problem file: missing or unknown \"constraint\" form");
}

Json problem_to_json(const ParsedProblem& p) {
    Json j;
    j["version"] = p.version;
    j["options"] = options_to_json(p.options);
    Json pj;
    if (p.sip) {
        Json sj;
        sj["objective"] = dcpair_to_json(p.sip->objective);
        Json ip = Json::array();
        for (double t : p.sip->index_points) ip.push_back(dtos(t));
        sj["index_points"] = ip;
        Json ft = Json::array();
        for (const auto& f : p.sip->constraint_funcs) ft.push_back(dcpair_to_json(f));
        sj["phi_t"] = ft;
        sj["box"] = polytope_to_json(p.sip->box);
        pj["sip"] = sj;
    } else if (p.sdp) {
        Json sj;
        sj["p"] = p.sdp->M.p;
        Json rows = Json::array();
        for (const auto& row : p.sdp->M.entry_funcs) {
            Json r = Json::array();
            for (const auto& e : row) r.push_back(dcpair_to_json(e));
            rows.push_back(r);
        }
        sj["entries"] = rows;
        pj["sdp"] = sj;
        pj["objective"] = dcpair_to_json(p.sdp->phi);
        pj["Q"] = polytope_to_json(p.sdp->Q);
    } else if (p.cone) {
        pj["objective"] = dcpair_to_json(p.cone->objective);
        Json cj;
        Json gens = Json::array();
        for (const Vec& g : p.cone->base.K.generators) gens.push_back([&] {
            Json a = Json::array();
            for (double v : g) a.push_back(dtos(v));
            return a;
        }());
        cj["generators"] = gens;
        Json us = Json::array();
        for (std::size_t jx = 0; jx < p.cone->Phi.out_dim(); ++jx)
            us.push_back(convexfunc_to_json(p.cone->Phi.component_u(jx)));
        pj["constraint"] = {{"cone", cj}, {"phi_us", us}};
        if (p.cone->Q) pj["Q"] = polytope_to_json(*p.cone->Q);
    } else if (p.set) {
        pj["objective"] = dcpair_to_json(p.set->objective);
        Json cj;
        cj["C"] = polytope_to_json(p.set->C);
        cj["z0"] = [&] {
            Json a = Json::array();
            for (double v : p.set->z0) a.push_back(dtos(v));
            return a;
        }();
        Json us = Json::array();
        for (std::size_t jx = 0; jx < p.set->Phi.out_dim(); ++jx)
            us.push_back(convexfunc_to_json(p.set->Phi.component_u(jx)));
        cj["phi_us"] = us;
        pj["constraint"] = {{"set", cj}};
        if (p.set->Q) pj["Q"] = polytope_to_json(*p.set->Q);
    } else {
        throw InputError("problem_to_json: empty problem");
    }
    j["problem"] = pj;
    return j;
}

}  // namespace dccert
