// Command-line driver: coverings, partitions, smoothing, energies, audits,
// the exponent classifier, and the convergence / gap / sweep experiments.

#include <iostream>

#include <CLI11.hpp>

#include "pqlab/io.hpp"

using namespace pqlab;

namespace {

std::string dir_of(const std::string& path) {
    auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) reject("cannot write ", path);
    out << text;
}

int run_cover(const std::string& domain_path, double r_min, double lambda,
              const std::string& out, double audit_h, const std::string& audit_out) {
    Domain dom = domain_from_json(load_json_file(domain_path));
    Covering cov = build_wb_covering(dom, r_min, lambda);
    double ph = audit_h > 0.0 ? audit_h : r_min / 5.0;
    CoveringAudit audit = audit_covering(cov, dom, ph);
    if (!out.empty()) save_json_file(out, covering_to_json(cov));
    if (!audit_out.empty()) save_json_file(audit_out, audit_to_json(audit));
    std::cout << "balls=" << cov.balls.size() << " delta=" << fmt17(cov.delta) << " M=" << cov.M
              << " eps_ov=" << fmt17(cov.eps_ov)
              << " coverage_defect=" << fmt17(audit.coverage_defect)
              << " passed=" << (audit.passed ? "yes" : "no") << "\n";
    return 0;
}

int run_partition(const std::string& covering_path, const std::string& domain_path, double h,
                  const std::string& out, const std::string& dump_psi) {
    Covering cov = covering_from_json(load_json_file(covering_path));
    Domain dom = domain_from_json(load_json_file(domain_path));
    auto grid = build_grid(dom, h, 0.0);
    PartitionOfUnity pou = build_partition(cov, grid);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid->node_count(); ++k) {
        if (!pou.covered_mask[k]) continue;
        double s = 0.0;
        for (const WindowField& w : pou.psi)
            s += w.value_at(static_cast<int>(k % grid->nodes_x()),
                            static_cast<int>(k / grid->nodes_x()));
        worst = std::max(worst, std::abs(s - 1.0));
    }
    if (!out.empty())
        save_json_file(out, json{{"deriv_bound_c", pou.deriv_bound_c},
                                 {"partition_sum_defect", worst},
                                 {"balls", cov.balls.size()}});
    if (!dump_psi.empty()) {
        Field sum(grid, 1);
        for (const WindowField& w : pou.psi)
            for (int j = w.j0; j < w.j0 + w.ny; ++j)
                for (int i = w.i0; i < w.i0 + w.nx; ++i)
                    sum.at(grid->idx(i, j), 0) += w.values[w.widx(i, j)];
        save_field(dump_psi, sum);
    }
    std::cout << "deriv_bound_c=" << fmt17(pou.deriv_bound_c) << " sum_defect=" << fmt17(worst)
              << "\n";
    return 0;
}

int run_smooth(const std::string& config_path, double eps, const std::string& out_prefix) {
    json j = load_json_file(config_path);
    ExperimentConfig cfg = experiment_config_from_json(j, dir_of(config_path));
    double margin = cfg.margin < 0.0 ? 4.0 * cfg.h : cfg.margin;
    auto grid = build_grid(cfg.domain, cfg.h, margin);
    Field u = sample_descriptor(cfg.u_desc, grid);
    Field g = sample_descriptor(cfg.g_desc, grid);
    Covering cov = build_wb_covering(cfg.domain, cfg.r_min, cfg.lambda);
    PartitionOfUnity pou = build_partition(cov, grid);
    SmoothingParams params;
    params.eps = eps > 0.0 ? eps : cfg.eps_schedule.at(0);
    params.C0 = cfg.C0 > 0.0 ? cfg.C0 : 0.96 * cov.delta / (2.0 * params.eps);
    params.N = cfg.N;
    SmoothedResult res = boundary_adapted_smooth(u, g, cov, pou, params);
    save_field(out_prefix + "_ueps.pqf", res.u_eps);
    save_field(out_prefix + "_a1.pqf", res.A1);
    save_field(out_prefix + "_a2.pqf", res.A2);
    std::cout << "under_resolved=" << res.under_resolved_count << "/" << cov.balls.size()
              << " boundary_agreement=" << fmt17(res.boundary_agreement) << "\n";
    return 0;
}

int run_energy(const std::string& field_path, const std::string& integrand_path,
               const std::string& domain_path) {
    Integrand F = integrand_from_json(load_json_file(integrand_path));
    Domain dom;
    Domain* dom_ptr = nullptr;
    if (!domain_path.empty()) {
        dom = domain_from_json(load_json_file(domain_path));
        dom_ptr = &dom;
    }
    Field u = load_field(field_path, dom_ptr);
    double e = energy(F, gradient(u), *u.grid);
    std::cout << fmt17(e) << "\n";
    return 0;
}

int run_audit(const std::string& integrand_path, int samples, std::uint64_t seed,
              const std::string& out) {
    Integrand F = integrand_from_json(load_json_file(integrand_path));
    SamplePlan plan;
    plan.n_points = samples;
    plan.n_gradients = samples;
    plan.n_scales = std::max(8, samples / 4);
    plan.seed = seed;
    HypothesisReport rep = hypothesis_audit(F, plan);
    json out_json = audit_report_to_json(rep);
    if (!out.empty())
        save_json_file(out, out_json);
    else
        std::cout << out_json.dump(2) << "\n";
    return rep.all_passed ? 0 : 3;
}

int run_classify(double p, double q, int n, int m, double alpha, const ClassifierFlags& flags) {
    TheoremCase tc = classify_case(p, q, n, m, alpha, flags);
    std::cout << theorem_case_to_json(tc).dump(2) << "\n";
    return 0;
}

int run_converge(const std::string& config_path, const std::string& out_csv) {
    json j = load_json_file(config_path);
    ExperimentConfig cfg = experiment_config_from_json(j, dir_of(config_path));
    ConvergenceReport rep = convergence_experiment(cfg);
    std::string csv = convergence_csv(rep);
    if (!out_csv.empty())
        write_text(out_csv, csv);
    else
        std::cout << csv;
    json summary{{"classifier", theorem_case_to_json(rep.verdict)},
                 {"out_of_range", rep.out_of_range},
                 {"used_adapted_shells", rep.used_adapted_shells},
                 {"used_C0", rep.used_C0},
                 {"used_N", rep.used_N},
                 {"a2_slope", rep.a2_slope},
                 {"a2_slope_required", rep.a2_slope_required},
                 {"err_decreasing", rep.err_decreasing},
                 {"energy_gap_decreasing", rep.energy_gap_decreasing}};
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_gap(const std::string& config_path, const std::string& out_json_path) {
    json j = load_json_file(config_path);
    ExperimentConfig cfg = experiment_config_from_json(j, dir_of(config_path));
    if (!j.contains("competitor")) reject("gap: config needs a 'competitor' descriptor");
    FieldDescriptor competitor = descriptor_from_json(j.at("competitor"));
    GapReport rep = gap_probe(cfg, competitor);
    json out = gap_report_to_json(rep);
    if (!out_json_path.empty())
        save_json_file(out_json_path, out);
    else
        std::cout << out.dump(2) << "\n";
    return rep.flag == GapFlag::inconclusive ? 3 : 0;
}

int run_sweep(const std::string& config_path, const std::string& out_csv) {
    json j = load_json_file(config_path);
    SweepConfig sc;
    if (j.contains("p_list")) sc.p_list = j.at("p_list").get<std::vector<double>>();
    sc.q_span = j.value("q_span", sc.q_span);
    sc.q_step = j.value("q_step", sc.q_step);
    if (j.contains("n_list")) sc.n_list = j.at("n_list").get<std::vector<int>>();
    sc.alpha = j.value("alpha", sc.alpha);
    sc.m = j.value("m", sc.m);
    std::string growth = j.value("growth", std::string("controlled_duality"));
    sc.base_flags.growth = growth == "natural"
                               ? GrowthClass::natural
                               : (growth == "controlled" ? GrowthClass::controlled
                                                         : GrowthClass::controlled_duality);
    sc.base_flags.autonomous = j.value("autonomous", true);
    sc.base_flags.bounded_u = j.value("bounded_u", true);
    sc.base_flags.doubling = j.value("doubling", true);
    sc.base_flags.holder_x = j.value("holder_x", true);
    sc.base_flags.x_condition = j.value("x_condition", true);
    std::string csv = sweep_csv(sweep(sc), sc.alpha);
    if (!out_csv.empty())
        write_text(out_csv, csv);
    else
        std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for (p,q)-growth energies and boundary-adapted smoothing"};
    app.require_subcommand(1);

    std::string domain_path, covering_path, config_path, field_path, integrand_path;
    std::string out, out_csv, out_json_path, audit_out, dump_psi;
    double r_min = 0.1, lambda = 0.25, h = 1.0 / 128.0, eps = -1.0, audit_h = -1.0;
    int samples = 256;
    std::uint64_t seed = 1;

    auto* cover = app.add_subcommand("cover", "build and audit a Whitney-Besicovitch covering");
    cover->add_option("domain", domain_path)->required();
    cover->add_option("--r-min", r_min);
    cover->add_option("--lambda", lambda);
    cover->add_option("--out", out);
    cover->add_option("--audit-h", audit_h);
    cover->add_option("--audit-out", audit_out);

    auto* part = app.add_subcommand("partition", "build the partition of unity for a covering");
    part->add_option("covering", covering_path)->required();
    part->add_option("--domain", domain_path)->required();
    part->add_option("--h", h);
    part->add_option("--out", out);
    part->add_option("--dump-psi", dump_psi);

    auto* smooth = app.add_subcommand("smooth", "run the boundary-adapted smoothing operator");
    smooth->add_option("config", config_path)->required();
    smooth->add_option("--eps", eps);
    smooth->add_option("--out", out)->required();

    auto* energy_cmd = app.add_subcommand("energy", "quadrature energy of a field");
    energy_cmd->add_option("field", field_path)->required();
    energy_cmd->add_option("integrand", integrand_path)->required();
    energy_cmd->add_option("--domain", domain_path);

    auto* audit = app.add_subcommand("audit", "sampled hypothesis audit of an integrand");
    audit->add_option("integrand", integrand_path)->required();
    audit->add_option("--samples", samples);
    audit->add_option("--seed", seed);
    audit->add_option("--out", out);

    double cp = 2.0, cq = 2.0, calpha = 1.0;
    int cn = 2, cm = 1;
    ClassifierFlags cflags;
    std::string growth = "natural";
    auto* classify = app.add_subcommand("classify", "evaluate the exponent-range cases");
    classify->add_option("--p", cp)->required();
    classify->add_option("--q", cq)->required();
    classify->add_option("--n", cn);
    classify->add_option("--m", cm);
    classify->add_option("--alpha", calpha);
    classify->add_option("--growth", growth)
        ->check(CLI::IsMember({"natural", "controlled", "controlled_duality"}));
    classify->add_flag("--autonomous", cflags.autonomous);
    classify->add_flag("--bounded-u", cflags.bounded_u);
    classify->add_flag("--doubling", cflags.doubling);
    classify->add_flag("--holder-x", cflags.holder_x);
    classify->add_flag("--x-condition", cflags.x_condition);
    classify->add_flag("--minimizer", cflags.is_minimizer);

    auto* converge = app.add_subcommand("converge", "energy convergence experiment");
    converge->add_option("config", config_path)->required();
    converge->add_option("--out-csv", out_csv);

    auto* gap = app.add_subcommand("gap", "Lavrentiev gap probe over three refined meshes");
    gap->add_option("config", config_path)->required();
    gap->add_option("--out-json", out_json_path);

    auto* sweep_cmd = app.add_subcommand("sweep", "classifier sweep over a (p,q) grid");
    sweep_cmd->add_option("config", config_path)->required();
    sweep_cmd->add_option("--out-csv", out_csv);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cover->parsed()) return run_cover(domain_path, r_min, lambda, out, audit_h, audit_out);
        if (part->parsed()) return run_partition(covering_path, domain_path, h, out, dump_psi);
        if (smooth->parsed()) return run_smooth(config_path, eps, out);
        if (energy_cmd->parsed()) return run_energy(field_path, integrand_path, domain_path);
        if (audit->parsed()) return run_audit(integrand_path, samples, seed, out);
        if (classify->parsed()) {
            cflags.growth = growth == "natural"
                                ? GrowthClass::natural
                                : (growth == "controlled" ? GrowthClass::controlled
                                                          : GrowthClass::controlled_duality);
            return run_classify(cp, cq, cn, cm, calpha, cflags);
        }
        if (converge->parsed()) return run_converge(config_path, out_csv);
        if (gap->parsed()) return run_gap(config_path, out_json_path);
        if (sweep_cmd->parsed()) return run_sweep(config_path, out_csv);
    } catch (const rejection& e) {
        std::cerr << "rejected: " << e.what() << "\n";
        return 2;
    } catch (const inconclusive& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
