#pragma once

#include "pqlab/partition.hpp"

namespace pqlab {

enum class MollifierKind { polynomial, smooth_exp };

// Radially symmetric nonnegative kernel sampled on grid nodes; discrete
// weights sum to exactly 1 (pairwise-summed normalization).
struct Kernel {
    std::vector<int> di, dj;
    std::vector<double> w;
    int radius_nodes = 0;

    static Kernel build(double eps, double h, MollifierKind kind) {
        if (eps < 2.0 * h)
            reject("mollify: kernel radius ", eps, " is under-resolved (< 2h = ", 2.0 * h, ")");
        Kernel k;
        int R = static_cast<int>(std::floor(eps / h));
        k.radius_nodes = R;
        std::vector<double> raw;
        for (int dj = -R; dj <= R; ++dj) {
            for (int di = -R; di <= R; ++di) {
                double s2 = (di * di + dj * dj) * h * h / (eps * eps);
                if (s2 >= 1.0) continue;
                double v = kind == MollifierKind::polynomial
                               ? std::pow(1.0 - s2, 3)
                               : std::exp(-1.0 / (1.0 - s2));
                k.di.push_back(di);
                k.dj.push_back(dj);
                raw.push_back(v);
            }
        }
        double total = pairwise_sum(raw);
        k.w.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) k.w[i] = raw[i] / total;
        return k;
    }
};

// Discrete convolution with a unit-mass radial kernel of support radius eps.
// Where the kernel sticks out of the bbox the weights are restricted and
// renormalized, which keeps unit mass (and constants exact) at every node.
inline Field mollify(const Field& f, double eps, MollifierKind kind = MollifierKind::polynomial) {
    const Grid& g = *f.grid;
    f.check_finite("mollify input");
    Kernel K = Kernel::build(eps, g.h, kind);
    Field out(f.grid, f.m);
    int nxn = g.nodes_x(), nyn = g.nodes_y();
    int R = K.radius_nodes;
    parallel_for(nyn, [&](std::size_t j0, std::size_t j1) {
        std::vector<double> acc(f.m);
        for (std::size_t j = j0; j < j1; ++j) {
            int jj = static_cast<int>(j);
            for (int i = 0; i < nxn; ++i) {
                bool interior = i >= R && i + R < nxn && jj >= R && jj + R < nyn;
                std::fill(acc.begin(), acc.end(), 0.0);
                double wsum = 0.0;
                for (std::size_t t = 0; t < K.w.size(); ++t) {
                    int ii = i + K.di[t], jk = jj + K.dj[t];
                    if (!interior) {
                        if (ii < 0 || ii >= nxn || jk < 0 || jk >= nyn) continue;
                        wsum += K.w[t];
                    }
                    std::size_t src = g.idx(ii, jk);
                    for (int c = 0; c < f.m; ++c) acc[c] += K.w[t] * f.at(src, c);
                }
                std::size_t dst = g.idx(i, jj);
                double scale = interior ? 1.0 : (wsum > 0.0 ? 1.0 / wsum : 0.0);
                for (int c = 0; c < f.m; ++c) out.at(dst, c) = acc[c] * scale;
            }
        }
    });
    return out;
}

// v_eps := g on the strip {d(x,∂Ω) < eps} and on the exterior extension
// region, u elsewhere in Omega.
inline Field blend_source(const Field& u, const Field& g, double eps) {
    if (u.grid != g.grid || u.m != g.m) reject("blend_source: u and g live on different grids");
    const Grid& gr = *u.grid;
    Field v = u;
    for (std::size_t k = 0; k < gr.node_count(); ++k) {
        if (gr.signed_dist[k] < eps) {
            for (int c = 0; c < u.m; ++c) v.at(k, c) = g.at(k, c);
        }
    }
    return v;
}

struct SmoothingParams {
    double eps = 0.1;   // global scale, in (0,1)
    double C0 = 0.0;    // prefactor of delta_i = C0 * r_i^N; <= 0 means delta/4
    double N = 1.0;     // radius exponent, >= 1
    MollifierKind mollifier = MollifierKind::polynomial;

    double prefactor(double delta) const { return C0 > 0.0 ? C0 : delta / 4.0; }

    // per-ball kernel radius delta_i * eps
    double kernel_radius(double delta, double r) const {
        return prefactor(delta) * std::pow(r, N) * eps;
    }

    void validate(const Covering& cov) const {
        if (!(eps > 0.0) || eps >= 1.0) reject("smoothing: eps must lie in (0,1), got ", eps);
        if (N < 1.0) reject("smoothing: N must be >= 1, got ", N);
        for (const Ball& b : cov.balls) {
            double lhs = (1.0 + cov.delta / 2.0) * b.r + kernel_radius(cov.delta, b.r);
            double rhs = (1.0 + cov.delta) * b.r;
            if (lhs > rhs * (1.0 + 1e-12))
                reject("smoothing: kernel constraint (1+delta/2)r + C0 r^N eps <= (1+delta)r "
                       "fails for r=", b.r, " (", lhs, " > ", rhs, "); decrease C0 or eps");
        }
    }
};

struct SmoothedResult {
    Field u_eps;
    Field A1;  // 2m components
    Field A2;  // 2m components
    Field v_source;
    std::vector<double> per_ball_radii;     // delta_i * eps, 0 for under-resolved balls
    std::vector<std::uint8_t> ball_resolved;
    int under_resolved_count = 0;
    double boundary_agreement = 0.0;  // max |u_eps - g| over boundary-adjacent inside nodes
};

inline constexpr double kUnderResolvedCap = 0.20;

// Two-parameter boundary-adapted smoothing:
//   u_eps = sum_i (v ⋆ rho_{delta_i eps}) psi_i + (1 - sum psi_i) v,
// with v the blended source and delta_i = C0 r_i^N. The gradient splits as
//   A1 = sum_i (Dv ⋆ rho_i) psi_i + (1 - sum psi_i) Dv,
//   A2 = sum_i (v ⋆ rho_i - v) D psi_i.
// Balls whose kernel radius falls below 2h cannot be represented on the grid;
// their source is taken unmollified (which on the strip reproduces g).
inline SmoothedResult boundary_adapted_smooth(const Field& u, const Field& g, const Covering& cov,
                                              const PartitionOfUnity& pou,
                                              const SmoothingParams& params) {
    if (u.grid != g.grid || u.m != g.m) reject("boundary_adapted_smooth: u/g grid mismatch");
    if (pou.grid != u.grid) reject("boundary_adapted_smooth: partition grid mismatch");
    if (pou.covering != &cov || pou.psi.size() != cov.balls.size())
        reject("boundary_adapted_smooth: covering/partition mismatch");
    params.validate(cov);
    const Grid& gr = *u.grid;
    const int m = u.m;

    SmoothedResult res;
    res.v_source = blend_source(u, g, params.eps);
    const Field& v = res.v_source;
    Field dv = gradient(v);
    res.u_eps = v;
    res.A1 = dv;
    res.A2 = Field(u.grid, 2 * m);
    res.per_ball_radii.resize(cov.balls.size(), 0.0);
    res.ball_resolved.assign(cov.balls.size(), 0);

    for (std::size_t b = 0; b < cov.balls.size(); ++b) {
        double s = params.kernel_radius(cov.delta, cov.balls[b].r);
        res.per_ball_radii[b] = s;
        if (s < 2.0 * gr.h) {
            ++res.under_resolved_count;  // identity fallback, merged with the strip source
            continue;
        }
        res.ball_resolved[b] = 1;
        Kernel K = Kernel::build(s, gr.h, params.mollifier);
        const WindowField& psi = pou.psi[b];

        parallel_for(psi.ny, [&](std::size_t wj0, std::size_t wj1) {
            std::vector<double> vc(m), dvc(2 * m);
            for (std::size_t wj = wj0; wj < wj1; ++wj) {
                int j = psi.j0 + static_cast<int>(wj);
                for (int i = psi.i0; i < psi.i0 + psi.nx; ++i) {
                    double p = psi.value_at(i, j);
                    double dpx = (psi.value_at(i + 1, j) - psi.value_at(i - 1, j)) / (2.0 * gr.h);
                    double dpy = (psi.value_at(i, j + 1) - psi.value_at(i, j - 1)) / (2.0 * gr.h);
                    if (p == 0.0 && dpx == 0.0 && dpy == 0.0) continue;
                    std::fill(vc.begin(), vc.end(), 0.0);
                    std::fill(dvc.begin(), dvc.end(), 0.0);
                    for (std::size_t t = 0; t < K.w.size(); ++t) {
                        // kernel support stays inside (1+delta)B_i ⊂ Ω ⊂ bbox
                        std::size_t src = gr.idx(i + K.di[t], j + K.dj[t]);
                        for (int c = 0; c < m; ++c) vc[c] += K.w[t] * v.at(src, c);
                        for (int c = 0; c < 2 * m; ++c) dvc[c] += K.w[t] * dv.at(src, c);
                    }
                    std::size_t k = gr.idx(i, j);
                    for (int c = 0; c < m; ++c) {
                        double dval = vc[c] - v.at(k, c);
                        res.u_eps.at(k, c) += dval * p;
                        res.A2.at(k, 2 * c) += dval * dpx;
                        res.A2.at(k, 2 * c + 1) += dval * dpy;
                    }
                    for (int c = 0; c < 2 * m; ++c) res.A1.at(k, c) += (dvc[c] - dv.at(k, c)) * p;
                }
            }
        });
    }

    double frac = cov.balls.empty()
                      ? 0.0
                      : static_cast<double>(res.under_resolved_count) / cov.balls.size();
    if (frac > kUnderResolvedCap)
        reject("boundary_adapted_smooth: ", res.under_resolved_count, " of ", cov.balls.size(),
               " balls have kernel radius below 2h = ", 2.0 * gr.h,
               "; use a finer grid or a larger C0");

    // boundary class check: u_eps agrees with g next to ∂Ω
    double agree = 0.0;
    for (int j = 0; j < gr.nodes_y(); ++j) {
        for (int i = 0; i < gr.nodes_x(); ++i) {
            if (!gr.inside(i, j)) continue;
            bool adj = i == 0 || j == 0 || i == gr.nx || j == gr.ny || !gr.inside(i - 1, j) ||
                       !gr.inside(i + 1, j) || !gr.inside(i, j - 1) || !gr.inside(i, j + 1);
            if (!adj) continue;
            std::size_t k = gr.idx(i, j);
            for (int c = 0; c < m; ++c)
                agree = std::max(agree, std::abs(res.u_eps.at(k, c) - g.at(k, c)));
        }
    }
    res.boundary_agreement = agree;
    return res;
}

// ---------------------------------------------------------------------------
// Mollification rate table
// ---------------------------------------------------------------------------

struct RateRow {
    double eps = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct RateItem {
    std::string name;
    double predicted_slope = std::numeric_limits<double>::quiet_NaN();
    std::vector<RateRow> rows;
    double fitted_slope = std::numeric_limits<double>::quiet_NaN();
    bool exact = false;    // lhs numerically zero, slope fit skipped
    bool flagged = false;  // slope more than 0.15 below the predicted exponent
};

struct RateReport {
    Vec2 ball_center;
    double ball_radius = 0.0;
    std::vector<RateItem> items;
};

// Measures the six mollification estimates on a ball placed at the grid
// center, against the scale eps. Items 1-3 are boundedness checks (their
// constant must not grow as eps decreases); items 4-6 carry rate predictions
// 1, 1 + n(1/q - 1/p) and p/q.
inline RateReport rate_table(const Field& u, double p, double q,
                             const std::vector<double>& eps_list,
                             MollifierKind kind = MollifierKind::polynomial) {
    if (eps_list.size() < 3) reject("rate_table: need at least 3 eps values for a slope fit");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (eps_list[i] >= eps_list[i - 1]) reject("rate_table: eps_list must be decreasing");
    if (!(p > 1.0) || q < p) reject("rate_table: need 1 < p <= q");
    const Grid& g = *u.grid;
    double eps_max = eps_list.front();
    for (double e : eps_list)
        if (e < 2.0 * g.h) reject("rate_table: eps ", e, " below kernel resolution 2h");

    const double n = 2.0;
    RateReport rep;
    Vec2 c{g.origin.x + g.nx * g.h * 0.5, g.origin.y + g.ny * g.h * 0.5};
    double half = 0.5 * std::min(g.nx, g.ny) * g.h;
    double radius = half - eps_max - 2.0 * g.h;
    if (radius <= 4.0 * g.h) reject("rate_table: grid too small for the ball + eps margin");
    rep.ball_center = c;
    rep.ball_radius = radius;

    auto B = ball_mask(g, c, radius);
    rep.items.resize(6);
    rep.items[0].name = "Lp_bound";
    rep.items[1].name = "Linf_bound";
    rep.items[2].name = "Linf_vs_eps^-n/p";
    rep.items[3].name = "Lp_error";
    rep.items[3].predicted_slope = 1.0;
    rep.items[4].name = "Lq_error_sobolev";
    rep.items[4].predicted_slope = 1.0 + n * (1.0 / q - 1.0 / p);
    rep.items[5].name = "Lq_error_interp";
    rep.items[5].predicted_slope = p / q;

    for (double eps : eps_list) {
        auto Bplus = ball_mask(g, c, radius + eps);
        Field ue = mollify(u, eps, kind);
        Field diff = field_diff(ue, u);
        double u_lp = lp_norm(u, p, Bplus);
        double u_linf = linf_norm(u, Bplus);
        double u_w1p = w1p_norm(u, p, Bplus);
        rep.items[0].rows.push_back({eps, lp_norm(ue, p, B), u_lp});
        rep.items[1].rows.push_back({eps, linf_norm(ue, B), u_linf});
        rep.items[2].rows.push_back({eps, linf_norm(ue, B), std::pow(eps, -n / p) * u_lp});
        rep.items[3].rows.push_back({eps, lp_norm(diff, p, B), eps * u_w1p});
        double lq_err = lp_norm(diff, q, B);
        rep.items[4].rows.push_back(
            {eps, lq_err, std::pow(eps, rep.items[4].predicted_slope) * std::pow(u_w1p, p / q)});
        rep.items[5].rows.push_back(
            {eps, lq_err,
             std::pow(eps, p / q) * std::pow(u_w1p, p / q) * std::pow(u_linf, 1.0 - p / q)});
    }

    for (std::size_t it = 0; it < rep.items.size(); ++it) {
        RateItem& item = rep.items[it];
        std::vector<double> xs, ys;
        double scale = 0.0;
        for (const RateRow& r : item.rows) scale = std::max(scale, std::abs(r.rhs));
        bool zero = true;
        for (const RateRow& r : item.rows) zero = zero && std::abs(r.lhs) <= 1e-13 * (1.0 + scale);
        if (zero) {
            item.exact = true;
            continue;
        }
        if (it <= 2) {
            // boundedness: track the constant lhs/rhs; flag if it blows up
            for (const RateRow& r : item.rows) {
                xs.push_back(r.eps);
                ys.push_back(r.lhs / r.rhs);
            }
            item.fitted_slope = fit_loglog_slope(xs, ys);
            item.flagged = std::isfinite(item.fitted_slope) && item.fitted_slope < -0.15;
        } else {
            for (const RateRow& r : item.rows) {
                xs.push_back(r.eps);
                ys.push_back(r.lhs);
            }
            item.fitted_slope = fit_loglog_slope(xs, ys);
            item.flagged = !(item.fitted_slope >= item.predicted_slope - 0.15);
        }
    }
    return rep;
}

// Radial truncation at level k around the boundary datum:
// T_k u = u where |u-g| <= k, g + k (u-g)/|u-g| elsewhere.
inline Field truncate_field(const Field& u, const Field& g, double k) {
    if (!(k > 0.0)) reject("truncate: level k must be positive, got ", k);
    if (u.grid != g.grid || u.m != g.m) reject("truncate: u/g grid mismatch");
    Field out = u;
    for (std::size_t node = 0; node < u.grid->node_count(); ++node) {
        double d2 = 0.0;
        for (int c = 0; c < u.m; ++c) {
            double w = u.at(node, c) - g.at(node, c);
            d2 += w * w;
        }
        double d = std::sqrt(d2);
        if (d <= k) continue;
        double scale = k / d;
        for (int c = 0; c < u.m; ++c)
            out.at(node, c) = g.at(node, c) + (u.at(node, c) - g.at(node, c)) * scale;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Star-shaped rescaling
// ---------------------------------------------------------------------------

struct StarScaleReport {
    double t = 0.0;
    double smooth_band_width = 0.0;  // open neighborhood of ∂Ω where the result is g + scaled tail
};

// t(s): linear approach to 1; keeps the convexity remainder O(s-1).
inline double star_scale_blend(double s) { return std::clamp(1.0 - (s - 1.0), 0.5, 1.0 - 1e-12); }

// Glued star-shaped rescaling sum_i eta_i u_i^s with
//   u_i^s(x) = t * (1/s) (u-g)(c_i + s (x - c_i)) + g(x),
// where (u-g) is extended by zero outside Omega and optionally pre-mollified
// at scale eps. Agrees with g at the boundary and equals g exactly when u=g.
inline Field star_scale(const Field& u, const Field& g, const Domain& dom, double s, double t = -1.0,
                        double eps = 0.0, StarScaleReport* report = nullptr) {
    if (!(s > 1.0) || s - 1.0 > 0.2) reject("star_scale: need 1 < s <= 1.2, got ", s);
    validate_star_decomposition(dom);
    if (u.grid != g.grid || u.m != g.m) reject("star_scale: u/g grid mismatch");
    const Grid& gr = *u.grid;
    if (t <= 0.0) t = star_scale_blend(s);
    if (!(t < 1.0)) reject("star_scale: blend t must lie in (0,1), got ", t);

    // (u - g), zero outside Omega
    Field w(u.grid, u.m);
    for (std::size_t k = 0; k < gr.node_count(); ++k) {
        if (!gr.inside_mask[k]) continue;
        for (int c = 0; c < u.m; ++c) w.at(k, c) = u.at(k, c) - g.at(k, c);
    }

    double min_margin = std::numeric_limits<double>::infinity();
    for (const StarPiece& piece : dom.star_pieces) {
        double margin = polyops::dist_to_loop(piece.center, piece.loop);
        min_margin = std::min(min_margin, (s - 1.0) / s * margin);
    }
    if (eps > 0.0) {
        if (eps > min_margin * s)
            reject("star_scale: eps ", eps, " exceeds the per-subdomain margin bound ",
                   min_margin * s);
        w = mollify(w, eps);
        // re-zero the exterior so the scaled tail still vanishes near ∂Ω
        for (std::size_t k = 0; k < gr.node_count(); ++k)
            if (!gr.inside_mask[k])
                for (int c = 0; c < u.m; ++c) w.at(k, c) = 0.0;
    }

    // piece weights eta_i: squared inward distance, normalized
    std::size_t np = dom.star_pieces.size();
    std::vector<std::vector<double>> eta(np, std::vector<double>(gr.node_count(), 0.0));
    for (std::size_t pi = 0; pi < np; ++pi) {
        const StarPiece& piece = dom.star_pieces[pi];
        for (int j = 0; j < gr.nodes_y(); ++j) {
            for (int i = 0; i < gr.nodes_x(); ++i) {
                Vec2 x = gr.node(i, j);
                if (!polyops::point_in_loop(x, piece.loop)) continue;
                double d = polyops::dist_to_loop(x, piece.loop);
                eta[pi][gr.idx(i, j)] = d * d;
            }
        }
    }
    for (std::size_t k = 0; k < gr.node_count(); ++k) {
        double tot = 0.0;
        for (std::size_t pi = 0; pi < np; ++pi) tot += eta[pi][k];
        if (tot > 0.0)
            for (std::size_t pi = 0; pi < np; ++pi) eta[pi][k] /= tot;
        else if (np > 0 && gr.inside_mask[k])
            eta[0][k] = 1.0;  // measure-zero seams between pieces
    }

    std::vector<std::vector<double>> wcomp(u.m, std::vector<double>(gr.node_count()));
    for (std::size_t k = 0; k < gr.node_count(); ++k)
        for (int c = 0; c < u.m; ++c) wcomp[c][k] = w.at(k, c);

    Field out = g;
    for (int j = 0; j < gr.nodes_y(); ++j) {
        for (int i = 0; i < gr.nodes_x(); ++i) {
            std::size_t k = gr.idx(i, j);
            if (!gr.inside_mask[k]) continue;
            Vec2 x = gr.node(i, j);
            for (std::size_t pi = 0; pi < np; ++pi) {
                double e = eta[pi][k];
                if (e == 0.0) continue;
                Vec2 c0 = dom.star_pieces[pi].center;
                Vec2 xs = c0 + s * (x - c0);
                bool outside = signed_distance(dom, xs) < 0.0;
                for (int c = 0; c < u.m; ++c) {
                    double tail = outside ? 0.0 : gr.interp(wcomp[c], xs);
                    out.at(k, c) += e * t / s * tail;
                }
            }
        }
    }
    if (report) {
        report->t = t;
        report->smooth_band_width = std::max(0.0, min_margin - eps / s);
    }
    return out;
}

}  // namespace pqlab
