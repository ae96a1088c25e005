#pragma once

#include <fstream>

#include <json.hpp>

#include "pqlab/experiments.hpp"

namespace pqlab {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) reject("cannot open ", path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        reject("invalid JSON in ", path, ": ", e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) reject("cannot write ", path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

inline Loop loop_from_json(const json& j) {
    Loop loop;
    for (const auto& v : j) loop.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    return loop;
}

inline json loop_to_json(const Loop& loop) {
    json j = json::array();
    for (const Vec2& v : loop) j.push_back({v.x, v.y});
    return j;
}

inline Domain domain_from_json(const json& j) {
    Domain d;
    if (!j.contains("vertices")) reject("domain: missing 'vertices'");
    d.vertices = loop_from_json(j.at("vertices"));
    if (j.contains("holes"))
        for (const auto& h : j.at("holes")) d.holes.push_back(loop_from_json(h));
    if (j.contains("star_decomposition")) {
        for (const auto& s : j.at("star_decomposition")) {
            StarPiece piece;
            piece.loop = loop_from_json(s.at("loop"));
            piece.center = {s.at("center").at(0).get<double>(), s.at("center").at(1).get<double>()};
            d.star_pieces.push_back(piece);
        }
    }
    d.validate();
    return d;
}

inline json domain_to_json(const Domain& d) {
    json j;
    j["vertices"] = loop_to_json(d.vertices);
    if (!d.holes.empty()) {
        j["holes"] = json::array();
        for (const Loop& h : d.holes) j["holes"].push_back(loop_to_json(h));
    }
    if (!d.star_pieces.empty()) {
        j["star_decomposition"] = json::array();
        for (const StarPiece& p : d.star_pieces)
            j["star_decomposition"].push_back(
                {{"loop", loop_to_json(p.loop)}, {"center", {p.center.x, p.center.y}}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Covering and audit
// ---------------------------------------------------------------------------

inline json covering_to_json(const Covering& c) {
    json balls = json::array();
    for (const Ball& b : c.balls) balls.push_back({{"cx", b.center.x}, {"cy", b.center.y}, {"r", b.r}});
    return json{{"delta", c.delta}, {"M", c.M}, {"eps_ov", c.eps_ov}, {"r_min", c.r_min},
                {"balls", balls}};
}

inline Covering covering_from_json(const json& j) {
    Covering c;
    c.delta = j.at("delta").get<double>();
    c.M = j.at("M").get<int>();
    c.eps_ov = j.at("eps_ov").get<double>();
    c.r_min = j.at("r_min").get<double>();
    for (const auto& b : j.at("balls"))
        c.balls.push_back({{b.at("cx").get<double>(), b.at("cy").get<double>()}, b.at("r").get<double>()});
    c.rebuild_neighbor_index();
    return c;
}

inline json audit_to_json(const CoveringAudit& a) {
    return json{{"coverage_defect", a.coverage_defect},
                {"max_multiplicity", a.max_multiplicity},
                {"min_overlap_ratio", a.min_overlap_ratio},
                {"c_boundary", a.c_boundary},
                {"radius_ratio_bound", a.radius_ratio_bound},
                {"containment_ok", a.containment_ok},
                {"passed", a.passed}};
}

// ---------------------------------------------------------------------------
// Integrand
// ---------------------------------------------------------------------------

inline Integrand integrand_from_json(const json& j) {
    Integrand F;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "power")
        F.kind = IntegrandKind::power;
    else if (kind == "double_phase")
        F.kind = IntegrandKind::double_phase;
    else if (kind == "pq_blend")
        F.kind = IntegrandKind::pq_blend;
    else
        reject("integrand: unknown kind '", kind, "'");
    F.p = j.at("p").get<double>();
    F.q = j.at("q").get<double>();
    F.alpha = j.value("alpha", 1.0);
    F.nu = j.value("nu", 1.0);
    F.mu = j.value("mu", 0.0);
    F.Lambda = j.value("Lambda", 1.0);
    F.s0 = j.value("s0", 2.0);
    F.eps0 = j.value("eps0", 0.25);
    F.autonomous = j.value("autonomous", F.kind != IntegrandKind::double_phase);
    if (j.contains("growth")) {
        std::string gr = j.at("growth").get<std::string>();
        if (gr == "natural")
            F.growth = GrowthClass::natural;
        else if (gr == "controlled")
            F.growth = GrowthClass::controlled;
        else if (gr == "controlled_duality")
            F.growth = GrowthClass::controlled_duality;
        else
            reject("integrand: unknown growth class '", gr, "'");
    }
    if (j.contains("a")) {
        const json& a = j.at("a");
        std::string type = a.at("type").get<std::string>();
        if (type == "constant") {
            F.a.type = CoefficientA::Type::constant;
            F.a.value = a.at("value").get<double>();
        } else if (type == "x1_power") {
            F.a.type = CoefficientA::Type::x1_power;
            F.a.exponent = a.at("exponent").get<double>();
        } else if (type == "dist_power") {
            F.a.type = CoefficientA::Type::dist_power;
            F.a.exponent = a.at("exponent").get<double>();
            F.a.seg_a = {a.at("segment").at(0).at(0).get<double>(),
                         a.at("segment").at(0).at(1).get<double>()};
            F.a.seg_b = {a.at("segment").at(1).at(0).get<double>(),
                         a.at("segment").at(1).at(1).get<double>()};
        } else {
            reject("integrand: unknown coefficient type '", type, "'");
        }
    }
    F.validate();
    return F;
}

inline json audit_report_to_json(const HypothesisReport& rep) {
    json entries = json::array();
    for (const AuditEntry& e : rep.entries)
        entries.push_back({{"name", e.name},
                           {"measured_constant", e.measured},
                           {"declared", e.declared},
                           {"pass", e.pass},
                           {"checked", e.checked}});
    return json{{"hypotheses", entries}, {"all_passed", rep.all_passed}};
}

// ---------------------------------------------------------------------------
// Field binary format (PQF1)
// ---------------------------------------------------------------------------

// magic "PQF1", u32 version, u32 components m, u32 nx, u32 ny (cell counts),
// f64 h, f64 origin x, f64 origin y, then (nx+1)(ny+1)*m row-major f64
// values, little-endian.
inline void save_field(const std::string& path, const Field& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) reject("cannot write ", path);
    const Grid& g = *f.grid;
    out.write("PQF1", 4);
    auto w32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto w64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    w32(1u);
    w32(static_cast<std::uint32_t>(f.m));
    w32(static_cast<std::uint32_t>(g.nx));
    w32(static_cast<std::uint32_t>(g.ny));
    w64(g.h);
    w64(g.origin.x);
    w64(g.origin.y);
    out.write(reinterpret_cast<const char*>(f.values.data()), f.values.size() * sizeof(double));
}

// Loads a field; the grid mask is rebuilt from `dom` when given, otherwise
// every node counts as inside.
inline Field load_field(const std::string& path, const Domain* dom = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) reject("cannot open ", path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PQF1", 4) != 0) reject(path, ": not a PQF1 field file");
    auto r32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto r64 = [&]() {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    std::uint32_t version = r32();
    if (version != 1u) reject(path, ": unsupported PQF1 version ", version);
    std::uint32_t m = r32(), nx = r32(), ny = r32();
    auto grid = std::make_shared<Grid>();
    grid->h = r64();
    grid->origin.x = r64();
    grid->origin.y = r64();
    grid->nx = static_cast<int>(nx);
    grid->ny = static_cast<int>(ny);
    std::size_t n = grid->node_count();
    grid->inside_mask.assign(n, 1);
    grid->signed_dist.assign(n, 0.0);
    if (dom) {
        for (int j = 0; j < grid->nodes_y(); ++j) {
            for (int i = 0; i < grid->nodes_x(); ++i) {
                double sd = signed_distance(*dom, grid->node(i, j));
                grid->signed_dist[grid->idx(i, j)] = sd;
                grid->inside_mask[grid->idx(i, j)] = sd >= 0.0 ? 1 : 0;
            }
        }
    }
    Field f(grid, static_cast<int>(m));
    in.read(reinterpret_cast<char*>(f.values.data()), f.values.size() * sizeof(double));
    if (!in) reject(path, ": truncated PQF1 payload");
    return f;
}

// ---------------------------------------------------------------------------
// Descriptors and experiment configs
// ---------------------------------------------------------------------------

inline FieldDescriptor descriptor_from_json(const json& j) {
    FieldDescriptor d;
    std::string type = j.at("type").get<std::string>();
    if (type == "zero")
        d.type = FieldDescriptor::Type::zero;
    else if (type == "affine")
        d.type = FieldDescriptor::Type::affine;
    else if (type == "bump")
        d.type = FieldDescriptor::Type::bump;
    else if (type == "radial_power")
        d.type = FieldDescriptor::Type::radial_power;
    else if (type == "log_log")
        d.type = FieldDescriptor::Type::log_log;
    else if (type == "interface_tanh")
        d.type = FieldDescriptor::Type::interface_tanh;
    else
        reject("descriptor: unknown type '", type, "'");
    d.a0 = j.value("a0", 0.0);
    d.ax = j.value("ax", 0.0);
    d.ay = j.value("ay", 0.0);
    if (j.contains("center"))
        d.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
    d.radius = j.value("radius", d.radius);
    d.amplitude = j.value("amplitude", d.amplitude);
    d.beta = j.value("beta", d.beta);
    d.cap = j.value("cap", d.cap);
    d.background = j.value("background", 0.0);
    d.width = j.value("width", d.width);
    return d;
}

// Sub-objects may be inlined or referenced by path relative to the config.
inline json resolve_ref(const json& j, const std::string& key, const std::string& base_dir) {
    const json& v = j.at(key);
    if (v.is_string()) {
        std::string path = v.get<std::string>();
        if (!path.empty() && path[0] != '/' && !base_dir.empty()) path = base_dir + "/" + path;
        return load_json_file(path);
    }
    return v;
}

inline ExperimentConfig experiment_config_from_json(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg;
    cfg.domain = domain_from_json(resolve_ref(j, "domain", base_dir));
    cfg.F = integrand_from_json(resolve_ref(j, "integrand", base_dir));
    if (j.contains("g")) cfg.g_desc = descriptor_from_json(j.at("g"));
    if (j.contains("u")) cfg.u_desc = descriptor_from_json(j.at("u"));
    cfg.eps_schedule = j.value("eps_schedule", std::vector<double>{});
    cfg.h = j.value("h", cfg.h);
    cfg.margin = j.value("margin", cfg.margin);
    cfg.r_min = j.value("r_min", cfg.r_min);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.C0 = j.value("C0", cfg.C0);
    cfg.N = j.value("N", cfg.N);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
        cfg.solver.tol_grad = s.value("tol_grad", cfg.solver.tol_grad);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// CSV and report emission (floats printed with 17 significant digits)
// ---------------------------------------------------------------------------

inline std::string convergence_csv(const ConvergenceReport& rep) {
    std::string s =
        "eps,err_w1p,a2_lq,energy_a1,energy_ueps,energy_u,under_resolved_frac,"
        "boundary_agreement\n";
    for (const ConvergenceRow& r : rep.rows) {
        s += fmt17(r.eps) + "," + fmt17(r.err_w1p) + "," + fmt17(r.a2_lq) + "," +
             fmt17(r.energy_a1) + "," + fmt17(r.energy_ueps) + "," + fmt17(r.energy_u) + "," +
             fmt17(r.under_resolved_frac) + "," + fmt17(r.boundary_agreement) + "\n";
    }
    return s;
}

inline std::string case_set_string(const TheoremCase& tc) {
    std::string s;
    for (int c : tc.applicable_cases) {
        if (!s.empty()) s += ";";
        s += std::to_string(c);
    }
    return s;
}

inline std::string conclusion_string(CaseConclusion c) {
    switch (c) {
        case CaseConclusion::relaxation_equality: return "relaxation_equality";
        case CaseConclusion::min_equality: return "min_equality";
        case CaseConclusion::none: return "none";
    }
    return "none";
}

inline json theorem_case_to_json(const TheoremCase& tc) {
    json constraints = json::array();
    for (const auto& [name, value] : tc.active_constraints)
        constraints.push_back({{"name", name}, {"threshold", value}});
    return json{{"applicable_cases", tc.applicable_cases},
                {"conclusion", conclusion_string(tc)},
                {"active_constraints", constraints},
                {"required_N", tc.required_N}};
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, double alpha) {
    std::string s =
        "p,q,n,alpha,is_minimizer,cases,conclusion,thr_nonautonomous,thr_p_plus_1,thr_np_nm1,"
        "thr_natural_cap,thr_p_plus_2,thr_controlled_cap,thr_duality,thr_controlled_linf,"
        "required_N\n";
    for (const SweepRow& r : rows) {
        std::string line = fmt17(r.p) + "," + fmt17(r.q) + "," + std::to_string(r.n) + "," +
                           fmt17(alpha) + "," + (r.is_minimizer ? "1" : "0") + "," +
                           case_set_string(r.tc) + "," + conclusion_string(r.tc.conclusion);
        for (const auto& [name, value] : r.tc.active_constraints) line += "," + fmt17(value);
        line += "," + std::to_string(r.tc.required_N);
        s += line + "\n";
    }
    return s;
}

inline std::string gap_flag_string(GapFlag f) {
    switch (f) {
        case GapFlag::gap_suspected: return "gap_suspected";
        case GapFlag::no_gap_consistent: return "no_gap_consistent";
        case GapFlag::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

inline json gap_report_to_json(const GapReport& rep) {
    json meshes = json::array();
    for (const auto& [h, e] : rep.smooth_min_per_mesh)
        meshes.push_back({{"h", h}, {"min_energy", e}});
    return json{{"singular_energy", rep.singular_energy},
                {"smooth_min_per_mesh", meshes},
                {"gap_estimate", rep.gap_estimate},
                {"classifier_verdict", theorem_case_to_json(rep.classifier_verdict)},
                {"flag", gap_flag_string(rep.flag)},
                {"disclaimer", rep.disclaimer}};
}

inline json rate_report_to_json(const RateReport& rep) {
    json items = json::array();
    for (const RateItem& it : rep.items) {
        json rows = json::array();
        for (const RateRow& r : it.rows) rows.push_back({{"eps", r.eps}, {"lhs", r.lhs}, {"rhs", r.rhs}});
        items.push_back({{"name", it.name},
                         {"predicted_slope", it.predicted_slope},
                         {"fitted_slope", it.fitted_slope},
                         {"exact", it.exact},
                         {"flagged", it.flagged},
                         {"rows", rows}});
    }
    return json{{"ball_center", {rep.ball_center.x, rep.ball_center.y}},
                {"ball_radius", rep.ball_radius},
                {"items", items}};
}

}  // namespace pqlab
