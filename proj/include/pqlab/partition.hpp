#pragma once

#include "pqlab/field_ops.hpp"
#include "pqlab/wb_cover.hpp"

namespace pqlab {

enum class BumpProfile { polynomial, smooth_exp };

// Radial cutoff profile: 1 for t <= r_lo, 0 for t >= r_hi.
inline double bump_value(double t, double r_lo, double r_hi, BumpProfile profile) {
    if (t <= r_lo) return 1.0;
    if (t >= r_hi) return 0.0;
    double tau = (t - r_lo) / (r_hi - r_lo);
    if (profile == BumpProfile::polynomial) {
        // cubic smoothstep, C^1, |d/dtau| <= 1.5
        return 1.0 - tau * tau * (3.0 - 2.0 * tau);
    }
    return std::exp(1.0 - 1.0 / (1.0 - tau * tau));
}

// Cutoff phi for one ball: phi = 1 on B_i, phi = 0 outside (1+delta/2)B_i,
// with the 1->0 transition on [shell, (1+delta/2) r_i]. Default shell = r_i.
inline WindowField bump(const Grid& grid, const Ball& ball, double delta,
                        BumpProfile profile = BumpProfile::polynomial,
                        double shell = -1.0) {
    double r_hi = (1.0 + delta / 2.0) * ball.r;
    double r_lo = shell < 0.0 ? ball.r : shell;
    if (shell >= 0.0 && (shell <= ball.r || shell >= r_hi))
        reject("bump: shell ", shell, " outside the admissible annulus (", ball.r, ",", r_hi, ")");
    WindowField w = make_window(grid, ball.center, r_hi);
    for (int j = w.j0; j < w.j0 + w.ny; ++j)
        for (int i = w.i0; i < w.i0 + w.nx; ++i)
            w.values[w.widx(i, j)] =
                bump_value(dist(grid.node(i, j), ball.center), r_lo, r_hi, profile);
    return w;
}

struct PartitionOfUnity {
    const Covering* covering = nullptr;
    std::shared_ptr<const Grid> grid;
    std::vector<WindowField> psi;
    std::vector<std::uint8_t> covered_mask;  // nodes inside some core B_i
    double deriv_bound_c = 0.0;              // measured max_i r_i * ||D psi_i||_inf
};

namespace detail {

inline double window_max_grad(const Grid& g, const WindowField& w) {
    double best = 0.0;
    for (int j = w.j0; j < w.j0 + w.ny; ++j) {
        for (int i = w.i0; i < w.i0 + w.nx; ++i) {
            // centered differences; the zero extension outside the window is
            // exact because the cutoff vanishes there
            double dx = (w.value_at(i + 1, j) - w.value_at(i - 1, j)) / (2.0 * g.h);
            double dy = (w.value_at(i, j + 1) - w.value_at(i, j - 1)) / (2.0 * g.h);
            best = std::max(best, std::sqrt(dx * dx + dy * dy));
        }
    }
    return best;
}

}  // namespace detail

// psi_i = phi_i / sum_j phi_j on the nodes covered by the union of cores.
inline PartitionOfUnity build_partition(const Covering& cov, std::shared_ptr<const Grid> grid,
                                        std::vector<WindowField> bumps) {
    if (bumps.size() != cov.balls.size())
        reject("build_partition: ", bumps.size(), " bumps for ", cov.balls.size(), " balls");
    const Grid& g = *grid;
    PartitionOfUnity pou;
    pou.covering = &cov;
    pou.grid = grid;

    std::vector<double> total(g.node_count(), 0.0);
    for (const WindowField& w : bumps)
        for (int j = w.j0; j < w.j0 + w.ny; ++j)
            for (int i = w.i0; i < w.i0 + w.nx; ++i)
                total[g.idx(i, j)] += w.values[w.widx(i, j)];

    pou.covered_mask.assign(g.node_count(), 0);
    for (const Ball& b : cov.balls) {
        int i0 = std::max(0, static_cast<int>(std::floor((b.center.x - b.r - g.origin.x) / g.h)));
        int j0 = std::max(0, static_cast<int>(std::floor((b.center.y - b.r - g.origin.y) / g.h)));
        int i1 = std::min(g.nx, static_cast<int>(std::ceil((b.center.x + b.r - g.origin.x) / g.h)));
        int j1 = std::min(g.ny, static_cast<int>(std::ceil((b.center.y + b.r - g.origin.y) / g.h)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                if (dist(g.node(i, j), b.center) < b.r) pou.covered_mask[g.idx(i, j)] = 1;
    }

    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (pou.covered_mask[k] && total[k] < 1.0 - 1e-9)
            reject("build_partition: sum of cutoffs is ", total[k], " < 1 at covered node ", k,
                   "; the bumps violate phi_i = 1 on B_i");
    }

    // psi = phi / max(sum phi, 1): the paper formula where the cores cover,
    // a plain decay of phi on the finite covering's outer band
    pou.psi = std::move(bumps);
    for (WindowField& w : pou.psi) {
        for (int j = w.j0; j < w.j0 + w.ny; ++j) {
            for (int i = w.i0; i < w.i0 + w.nx; ++i) {
                double& v = w.values[w.widx(i, j)];
                v /= std::max(total[g.idx(i, j)], 1.0);
            }
        }
    }

    double c = 0.0;
    for (std::size_t b = 0; b < pou.psi.size(); ++b)
        c = std::max(c, cov.balls[b].r * detail::window_max_grad(g, pou.psi[b]));
    pou.deriv_bound_c = c;
    return pou;
}

inline PartitionOfUnity build_partition(const Covering& cov, std::shared_ptr<const Grid> grid,
                                        BumpProfile profile = BumpProfile::polynomial) {
    std::vector<WindowField> bumps(cov.balls.size());
    const Grid& g = *grid;
    parallel_for(cov.balls.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b) bumps[b] = bump(g, cov.balls[b], cov.delta, profile);
    });
    return build_partition(cov, grid, std::move(bumps));
}

// Discrete shell selection: among uniformly spaced candidate radii in
// (r_i, (1+delta/2) r_i), returns the radius minimizing the shell integral
// of |w| (smallest radius wins ties). The minimum is bounded by the candidate
// mean, which discretizes the annulus average (2/(delta r_i)) * integral.
inline double adapted_shell_radius(const Grid& grid, const Ball& ball,
                                   const std::vector<double>& weight, double delta, double t1,
                                   double t2, double delta_exp, int n_candidates = 32,
                                   double* shell_integral_out = nullptr,
                                   double* candidate_mean_out = nullptr) {
    if (!(t1 > t2) || !(t2 >= 1.0)) reject("adapted_shell_radius: need t1 > t2 >= 1");
    if (!(delta_exp > 0.0) || !(delta_exp < 1.0))
        reject("adapted_shell_radius: need delta_exp in (0,1), got ", delta_exp);
    if (n_candidates < 32) reject("adapted_shell_radius: need at least 32 candidate radii");
    if (weight.size() != grid.node_count())
        reject("adapted_shell_radius: weight field size mismatch");
    double r_hi = (1.0 + delta / 2.0) * ball.r;
    for (std::size_t k = 0; k < weight.size(); ++k)
        if (!(weight[k] >= 0.0))
            reject("adapted_shell_radius: weight must be nonnegative and finite; node ", k,
                   " has ", weight[k]);

    double best_val = std::numeric_limits<double>::infinity();
    double best_r = 0.0;
    double mean = 0.0;
    for (int k = 1; k <= n_candidates; ++k) {
        double r = ball.r + k * (r_hi - ball.r) / (n_candidates + 1);
        int npts = std::max(64, static_cast<int>(std::ceil(2.0 * M_PI * r / grid.h)));
        double acc = 0.0;
        for (int s = 0; s < npts; ++s) {
            double ang = 2.0 * M_PI * s / npts;
            Vec2 p{ball.center.x + r * std::cos(ang), ball.center.y + r * std::sin(ang)};
            acc += std::abs(grid.interp(weight, p));
        }
        double integral = acc * (2.0 * M_PI * r / npts);
        mean += integral;
        bool better = best_r == 0.0 || integral < best_val - 1e-12 * (1.0 + best_val);
        if (better) {
            best_val = integral;
            best_r = r;
        }
    }
    mean /= n_candidates;
    if (shell_integral_out) *shell_integral_out = best_val;
    if (candidate_mean_out) *candidate_mean_out = mean;
    return best_r;
}

}  // namespace pqlab
