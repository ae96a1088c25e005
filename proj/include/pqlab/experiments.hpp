#pragma once

#include "pqlab/descriptors.hpp"
#include "pqlab/integrands.hpp"
#include "pqlab/smoothing.hpp"

namespace pqlab {

// ---------------------------------------------------------------------------
// Discrete minimization
// ---------------------------------------------------------------------------

struct SolverParams {
    int max_iters = 20000;
    double tol_grad = 1e-9;  // sup-norm of the discrete Euler-Lagrange residual
    double armijo = 1e-4;
    std::uint64_t seed = 7;
};

struct MinimizeResult {
    Field u;
    std::vector<double> energy_trace;  // non-increasing by backtracking
    double residual = 0.0;             // sup |div_h dF(x,Du)| over free nodes
    double el_sign = 0.0;              // integral of dF(x,Du) . (Du - Dg)
    int iters = 0;
    bool converged = false;
    bool line_search_failed = false;
};

namespace detail {

// cell-corner gradient of u on cell (i,j); z has 2m entries
inline void cell_gradient(const Grid& g, const Field& u, int i, int j, double* z) {
    std::size_t k00 = g.idx(i, j), k10 = g.idx(i + 1, j);
    std::size_t k01 = g.idx(i, j + 1), k11 = g.idx(i + 1, j + 1);
    for (int c = 0; c < u.m; ++c) {
        z[2 * c] = (u.at(k10, c) + u.at(k11, c) - u.at(k00, c) - u.at(k01, c)) / (2.0 * g.h);
        z[2 * c + 1] = (u.at(k01, c) + u.at(k11, c) - u.at(k00, c) - u.at(k10, c)) / (2.0 * g.h);
    }
}

struct CellList {
    std::vector<int> ci, cj;  // cells with all four corners inside
};

inline CellList inside_cells(const Grid& g) {
    CellList cl;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.inside(i, j) && g.inside(i + 1, j) && g.inside(i, j + 1) &&
                g.inside(i + 1, j + 1)) {
                cl.ci.push_back(i);
                cl.cj.push_back(j);
            }
    return cl;
}

inline double quadrature_energy(const Integrand& F, const Grid& g, const Field& u,
                                const CellList& cl) {
    std::vector<double> terms(cl.ci.size());
    parallel_for(cl.ci.size(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> z(2 * u.m);
        for (std::size_t t = lo; t < hi; ++t) {
            cell_gradient(g, u, cl.ci[t], cl.cj[t], z.data());
            Vec2 xc{g.origin.x + (cl.ci[t] + 0.5) * g.h, g.origin.y + (cl.cj[t] + 0.5) * g.h};
            terms[t] = density(F, xc, z.data(), 2 * u.m);
        }
    });
    return pairwise_sum(terms) * g.h * g.h;
}

// dE/du assembled per cell; free nodes only (others stay pinned to g)
inline void energy_gradient(const Integrand& F, const Grid& g, const Field& u, const CellList& cl,
                            const std::vector<std::uint8_t>& free_node, std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> z(2 * u.m), dz(2 * u.m);
    double w = g.h * g.h / (2.0 * g.h);  // h^2 * (1/(2h))
    for (std::size_t t = 0; t < cl.ci.size(); ++t) {
        int i = cl.ci[t], j = cl.cj[t];
        cell_gradient(g, u, i, j, z.data());
        Vec2 xc{g.origin.x + (i + 0.5) * g.h, g.origin.y + (j + 0.5) * g.h};
        d_density(F, xc, z.data(), 2 * u.m, dz.data());
        std::size_t k00 = g.idx(i, j), k10 = g.idx(i + 1, j);
        std::size_t k01 = g.idx(i, j + 1), k11 = g.idx(i + 1, j + 1);
        for (int c = 0; c < u.m; ++c) {
            double gx = dz[2 * c] * w, gy = dz[2 * c + 1] * w;
            grad[k00 * u.m + c] += -gx - gy;
            grad[k10 * u.m + c] += gx - gy;
            grad[k01 * u.m + c] += -gx + gy;
            grad[k11 * u.m + c] += gx + gy;
        }
    }
    for (std::size_t k = 0; k < g.node_count(); ++k)
        if (!free_node[k])
            for (int c = 0; c < u.m; ++c) grad[k * u.m + c] = 0.0;
}

inline void convexity_spot_audit(const Integrand& F, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double z[2], w[2], mid[2];
    for (int t = 0; t < 256; ++t) {
        double mag = std::pow(10.0, 3.0 * uni(rng));
        for (int c = 0; c < 2; ++c) {
            z[c] = uni(rng) * mag;
            w[c] = uni(rng) * mag;
            mid[c] = 0.5 * (z[c] + w[c]);
        }
        Vec2 x{0.5 * (uni(rng) + 1.0), 0.5 * (uni(rng) + 1.0)};
        double lhs = density(F, x, mid, 2);
        double rhs = 0.5 * (density(F, x, z, 2) + density(F, x, w, 2));
        if (lhs > rhs + 1e-9 * (1.0 + std::abs(rhs)))
            reject("minimize: density failed the segment convexity audit at |z|~", mag);
    }
}

}  // namespace detail

// Projected steepest descent with Barzilai-Borwein step seeding and Armijo
// backtracking on the cell-quadrature energy. Dirichlet data g is pinned on
// every node within distance h of the boundary (and outside).
inline MinimizeResult minimize(const Integrand& F, const Field& g, std::shared_ptr<const Grid> grid,
                               const SolverParams& sp = {}) {
    F.validate();
    g.check_finite("minimize boundary data");
    detail::convexity_spot_audit(F, sp.seed);
    const Grid& gr = *grid;
    detail::CellList cl = detail::inside_cells(gr);
    if (cl.ci.empty()) reject("minimize: no interior cells");

    std::vector<std::uint8_t> free_node(gr.node_count(), 0);
    for (std::size_t k = 0; k < gr.node_count(); ++k)
        free_node[k] = gr.inside_mask[k] && gr.signed_dist[k] >= gr.h ? 1 : 0;

    MinimizeResult res;
    res.u = g;
    std::size_t nval = res.u.values.size();
    std::vector<double> grad(nval), grad_prev(nval), u_prev(nval), trial(nval);

    double E = detail::quadrature_energy(F, gr, res.u, cl);
    res.energy_trace.push_back(E);
    double step = gr.h * gr.h;  // conservative first step ~ inverse Laplacian scale
    const double h2 = gr.h * gr.h;

    for (int it = 0; it < sp.max_iters; ++it) {
        detail::energy_gradient(F, gr, res.u, cl, free_node, grad);
        double gsup = 0.0, gnorm2 = 0.0;
        for (std::size_t k = 0; k < nval; ++k) {
            gsup = std::max(gsup, std::abs(grad[k]));
            gnorm2 += grad[k] * grad[k];
        }
        res.residual = gsup / h2;
        res.iters = it;
        if (res.residual <= sp.tol_grad) {
            res.converged = true;
            break;
        }
        if (it > 0) {
            // BB1 step from the last secant pair
            double sy = 0.0, ss = 0.0;
            for (std::size_t k = 0; k < nval; ++k) {
                double sk = res.u.values[k] - u_prev[k];
                double yk = grad[k] - grad_prev[k];
                sy += sk * yk;
                ss += sk * sk;
            }
            if (sy > 0.0 && ss > 0.0) step = ss / sy;
        }
        step = std::clamp(step, 1e-14, 1e14);

        u_prev = res.u.values;
        grad_prev = grad;
        double t = step;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t k = 0; k < nval; ++k) trial[k] = u_prev[k] - t * grad[k];
            std::swap(res.u.values, trial);
            double Et = detail::quadrature_energy(F, gr, res.u, cl);
            if (Et <= E - sp.armijo * t * gnorm2) {
                E = Et;
                accepted = true;
                break;
            }
            std::swap(res.u.values, trial);
            t *= 0.5;
        }
        if (!accepted) {
            res.line_search_failed = true;  // returns the last iterate
            break;
        }
        res.energy_trace.push_back(E);
    }

    // second Euler-Lagrange relation of the optimality system
    {
        std::vector<double> terms(cl.ci.size());
        std::vector<double> z(2 * res.u.m), zg(2 * res.u.m), dz(2 * res.u.m);
        for (std::size_t t = 0; t < cl.ci.size(); ++t) {
            detail::cell_gradient(gr, res.u, cl.ci[t], cl.cj[t], z.data());
            detail::cell_gradient(gr, g, cl.ci[t], cl.cj[t], zg.data());
            Vec2 xc{gr.origin.x + (cl.ci[t] + 0.5) * gr.h, gr.origin.y + (cl.cj[t] + 0.5) * gr.h};
            d_density(F, xc, z.data(), 2 * res.u.m, dz.data());
            double s = 0.0;
            for (int c = 0; c < 2 * res.u.m; ++c) s += dz[c] * (z[c] - zg[c]);
            terms[t] = s;
        }
        res.el_sign = pairwise_sum(terms) * h2;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Convergence experiment
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    Domain domain;
    Integrand F;
    FieldDescriptor g_desc;
    FieldDescriptor u_desc;
    std::vector<double> eps_schedule;
    double h = 1.0 / 128.0;
    double margin = -1.0;  // < 0: use 4h
    double r_min = 0.1;
    double lambda = 0.25;
    double C0 = -1.0;  // < 0: auto from delta and the largest eps
    double N = 1.0;
    SolverParams solver;
    std::uint64_t seed = 1;

    void validate() const {
        if (eps_schedule.size() < 1) reject("experiment: empty eps schedule");
        for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
            if (eps_schedule[i] < 2.0 * h)
                reject("experiment: eps ", eps_schedule[i], " below 2h = ", 2.0 * h);
            if (i > 0 && eps_schedule[i] >= eps_schedule[i - 1])
                reject("experiment: eps schedule must be strictly decreasing");
        }
        if (r_min < 4.0 * h) reject("experiment: r_min must be >= 4h, got ", r_min);
    }
};

struct ConvergenceRow {
    double eps = 0.0;
    double err_w1p = 0.0;       // ||u_eps - u||_{W^{1,p}}
    double a2_lq = 0.0;         // ||A2||_{L^q}
    double energy_a1 = 0.0;     // F-energy of A1
    double energy_ueps = 0.0;   // F-energy of D u_eps
    double energy_u = 0.0;      // F-energy of D u
    double under_resolved_frac = 0.0;
    double boundary_agreement = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    TheoremCase verdict;
    bool out_of_range = false;       // classifier found no applicable case
    bool used_adapted_shells = false;
    double used_C0 = 0.0;
    double used_N = 1.0;
    double a2_slope = std::numeric_limits<double>::quiet_NaN();
    double a2_slope_required = 0.0;
    bool err_decreasing = true;
    bool energy_gap_decreasing = true;  // last three |energy_ueps - energy_u| monotone
    bool energy_growing = true;         // energy_ueps monotone increasing (divergence signal)
};

inline ConvergenceReport convergence_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    cfg.F.validate();
    const double n_dim = 2.0;
    double margin = cfg.margin < 0.0 ? 4.0 * cfg.h : cfg.margin;
    auto grid = build_grid(cfg.domain, cfg.h, margin);
    Field u = sample_descriptor(cfg.u_desc, grid);
    Field g = sample_descriptor(cfg.g_desc, grid);

    Covering cov = build_wb_covering(cfg.domain, cfg.r_min, cfg.lambda);
    PartitionOfUnity pou = build_partition(cov, grid);

    ClassifierFlags flags;
    flags.autonomous = cfg.F.autonomous;
    flags.growth = cfg.F.growth;
    flags.holder_x = !cfg.F.autonomous;
    flags.x_condition = !cfg.F.autonomous;
    flags.doubling = true;
    flags.bounded_u = cfg.u_desc.type != FieldDescriptor::Type::log_log &&
                      cfg.u_desc.type != FieldDescriptor::Type::radial_power;
    flags.is_minimizer = false;
    ConvergenceReport rep;
    rep.verdict = classify_case(cfg.F.p, cfg.F.q, 2, 1, cfg.F.alpha, flags);
    rep.out_of_range = rep.verdict.applicable_cases.empty();

    double eps_max = cfg.eps_schedule.front();
    rep.used_C0 = cfg.C0 > 0.0 ? cfg.C0 : 0.96 * cov.delta / (2.0 * eps_max);
    rep.used_N = cfg.N;
    rep.a2_slope_required = 0.8 * (1.0 - n_dim * (1.0 / cfg.F.p - 1.0 / cfg.F.q));

    bool adapted = !rep.out_of_range && cfg.F.autonomous &&
                   (rep.verdict.applicable_cases.count(2) || rep.verdict.applicable_cases.count(5));
    rep.used_adapted_shells = adapted;

    Field du = gradient(u);
    double e_u = energy(cfg.F, du, *grid);
    auto inside = grid->inside_mask;

    for (double eps : cfg.eps_schedule) {
        SmoothingParams params;
        params.eps = eps;
        params.C0 = rep.used_C0;
        params.N = cfg.N;

        const PartitionOfUnity* active_pou = &pou;
        PartitionOfUnity adapted_pou;
        if (adapted) {
            // weight-adapted cutoff shells, w = |D v_eps|^p per ball
            Field v = blend_source(u, g, eps);
            Field dv = gradient(v);
            std::vector<double> w(grid->node_count());
            for (std::size_t k = 0; k < w.size(); ++k)
                w[k] = std::pow(node_norm2(dv, k), cfg.F.p / 2.0);
            std::vector<WindowField> bumps(cov.balls.size());
            for (std::size_t b = 0; b < cov.balls.size(); ++b) {
                double shell = adapted_shell_radius(*grid, cov.balls[b], w, cov.delta,
                                                    cfg.F.q + 1.0, cfg.F.p, 0.5);
                bumps[b] = bump(*grid, cov.balls[b], cov.delta, BumpProfile::polynomial, shell);
            }
            adapted_pou = build_partition(cov, grid, std::move(bumps));
            active_pou = &adapted_pou;
        }

        SmoothedResult sm = boundary_adapted_smooth(u, g, cov, *active_pou, params);
        ConvergenceRow row;
        row.eps = eps;
        row.err_w1p = w1p_norm(field_diff(sm.u_eps, u), cfg.F.p, inside);
        row.a2_lq = lp_norm(sm.A2, cfg.F.q, inside);
        row.energy_a1 = energy(cfg.F, sm.A1, *grid);
        row.energy_ueps = energy(cfg.F, gradient(sm.u_eps), *grid);
        row.energy_u = e_u;
        row.under_resolved_frac =
            cov.balls.empty() ? 0.0
                              : static_cast<double>(sm.under_resolved_count) / cov.balls.size();
        row.boundary_agreement = sm.boundary_agreement;
        rep.rows.push_back(row);
    }

    std::vector<double> xs, ys;
    for (const ConvergenceRow& r : rep.rows) {
        xs.push_back(r.eps);
        ys.push_back(r.a2_lq);
    }
    rep.a2_slope = fit_loglog_slope(xs, ys);
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        if (rep.rows[i].err_w1p > rep.rows[i - 1].err_w1p * (1.0 + 1e-9))
            rep.err_decreasing = false;
        if (rep.rows[i].energy_ueps < rep.rows[i - 1].energy_ueps * (1.0 - 1e-12))
            rep.energy_growing = false;
    }
    std::size_t nr = rep.rows.size();
    if (nr >= 3) {
        for (std::size_t i = nr - 2; i < nr; ++i) {
            double prev = std::abs(rep.rows[i - 1].energy_ueps - rep.rows[i - 1].energy_u);
            double cur = std::abs(rep.rows[i].energy_ueps - rep.rows[i].energy_u);
            if (cur > prev * (1.0 + 1e-9)) rep.energy_gap_decreasing = false;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Lavrentiev gap probe
// ---------------------------------------------------------------------------

enum class GapFlag { gap_suspected, no_gap_consistent, inconclusive };

struct GapReport {
    double singular_energy = 0.0;  // Richardson-extrapolated F(u*)
    std::vector<std::pair<double, double>> smooth_min_per_mesh;  // (h, min energy)
    double gap_estimate = 0.0;
    TheoremCase classifier_verdict;
    GapFlag flag = GapFlag::inconclusive;
    std::string disclaimer =
        "Discrete verdicts are evidence about the exact infima, not proof; conforming bilinear "
        "minimization bounds the W^{1,q} infimum from above only up to mesh resolution.";
};

inline constexpr double kGapMargin = 0.10;

inline GapReport gap_probe(const ExperimentConfig& cfg, const FieldDescriptor& competitor) {
    cfg.F.validate();
    GapReport rep;
    ClassifierFlags flags;
    flags.autonomous = cfg.F.autonomous;
    flags.growth = cfg.F.growth;
    flags.holder_x = !cfg.F.autonomous;
    flags.x_condition = !cfg.F.autonomous;
    flags.is_minimizer = true;
    flags.doubling = true;
    rep.classifier_verdict = classify_case(cfg.F.p, cfg.F.q, 2, 1, cfg.F.alpha, flags);

    std::vector<double> hs{cfg.h, cfg.h / 2.0, cfg.h / 4.0};
    std::vector<double> singular_energies;
    bool solver_ok = true;
    for (double h : hs) {
        auto grid = build_grid(cfg.domain, h, 0.0);
        Field ustar = sample_descriptor(competitor, grid);
        double e_star = energy(cfg.F, gradient(ustar), *grid);
        if (!std::isfinite(e_star)) reject("gap_probe: competitor energy not finite on mesh h=", h);
        singular_energies.push_back(e_star);
        MinimizeResult mr = minimize(cfg.F, ustar, grid, cfg.solver);
        if (mr.line_search_failed) solver_ok = false;
        rep.smooth_min_per_mesh.push_back({h, mr.energy_trace.back()});
    }
    // first-order Richardson extrapolation from the two finest meshes
    rep.singular_energy = 2.0 * singular_energies[2] - singular_energies[1];
    double ref = rep.singular_energy;
    rep.gap_estimate = rep.smooth_min_per_mesh.back().second - ref;

    if (!solver_ok) {
        rep.flag = GapFlag::inconclusive;
        return rep;
    }
    if (cfg.F.p == cfg.F.q) {
        rep.flag = GapFlag::no_gap_consistent;  // spaces coincide, no gap possible
        return rep;
    }
    bool above1 = rep.smooth_min_per_mesh[1].second > (1.0 + kGapMargin) * ref;
    bool above2 = rep.smooth_min_per_mesh[2].second > (1.0 + kGapMargin) * ref;
    if (above1 && above2)
        rep.flag = GapFlag::gap_suspected;
    else if (!above1 && !above2)
        rep.flag = GapFlag::no_gap_consistent;
    else
        rep.flag = GapFlag::inconclusive;
    return rep;
}

// ---------------------------------------------------------------------------
// Classifier sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
    std::vector<double> p_list{1.5, 2.0, 2.5, 3.0, 4.0};
    double q_span = 3.0;
    double q_step = 0.1;
    std::vector<int> n_list{2, 3};
    double alpha = 1.0;
    int m = 1;
    ClassifierFlags base_flags;  // growth/bounded/doubling/... fixed; minimizer swept
};

struct SweepRow {
    double p = 0.0, q = 0.0;
    int n = 0;
    bool is_minimizer = false;
    TheoremCase tc;
};

inline std::vector<SweepRow> sweep(const SweepConfig& sc) {
    std::vector<SweepRow> rows;
    int kmax = static_cast<int>(std::round(sc.q_span / sc.q_step));
    for (int n : sc.n_list) {
        for (double p : sc.p_list) {
            for (int k = 0; k <= kmax; ++k) {
                double q = p + k * sc.q_step;
                for (int mz = 0; mz <= 1; ++mz) {
                    ClassifierFlags flags = sc.base_flags;
                    flags.is_minimizer = mz == 1;
                    SweepRow row;
                    row.p = p;
                    row.q = q;
                    row.n = n;
                    row.is_minimizer = flags.is_minimizer;
                    row.tc = classify_case(p, q, n, sc.m, sc.alpha, flags);
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

}  // namespace pqlab
