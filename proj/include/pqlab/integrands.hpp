#pragma once

#include <random>
#include <set>

#include "pqlab/field_ops.hpp"

namespace pqlab {

enum class IntegrandKind { power, double_phase, pq_blend, custom_tabulated };
enum class GrowthClass { natural, controlled, controlled_duality };

struct CoefficientA {
    enum class Type { constant, x1_power, dist_power } type = Type::constant;
    double value = 0.0;     // constant
    double exponent = 1.0;  // x1_power / dist_power
    Vec2 seg_a, seg_b;      // dist_power segment

    double operator()(Vec2 x) const {
        switch (type) {
            case Type::constant: return value;
            case Type::x1_power: return std::pow(std::max(x.x, 0.0), exponent);
            case Type::dist_power:
                return std::pow(polyops::point_segment_dist(x, seg_a, seg_b), exponent);
        }
        return 0.0;
    }
};

// Energy density F(x,z) with (p,q)-growth. z is an n x m gradient matrix
// stored flat (m components, derivative index fastest).
struct Integrand {
    IntegrandKind kind = IntegrandKind::power;
    double p = 2.0, q = 2.0;
    double alpha = 1.0;   // Hoelder exponent of the x-dependence
    double nu = 1.0;      // ellipticity constant of (H1)
    double mu = 0.0;      // degeneracy parameter in [0,1]
    double Lambda = 1.0;  // growth constant
    CoefficientA a;
    double s0 = 2.0;      // doubling range bound
    double eps0 = 0.25;   // radius for the minimizing-point condition
    bool autonomous = true;
    GrowthClass growth = GrowthClass::natural;
    std::function<double(Vec2, const double*, int)> custom;  // custom_tabulated only

    void validate() const {
        if (!(p > 1.0) || q < p) reject("integrand: need 1 < p <= q, got p=", p, " q=", q);
        if (!(nu > 0.0)) reject("integrand: nu must be positive");
        if (Lambda < nu) reject("integrand: Lambda must be >= nu");
        if (mu < 0.0 || mu > 1.0) reject("integrand: mu must lie in [0,1]");
        if (!(alpha > 0.0) || alpha > 1.0) reject("integrand: alpha must lie in (0,1]");
        if (kind == IntegrandKind::custom_tabulated && !custom)
            reject("integrand: custom_tabulated without a density callback");
    }
};

inline double znorm2(const double* z, int len) {
    double s = 0.0;
    for (int i = 0; i < len; ++i) s += z[i] * z[i];
    return s;
}

inline double density(const Integrand& F, Vec2 x, const double* z, int len) {
    double z2 = znorm2(z, len);
    switch (F.kind) {
        case IntegrandKind::power:
            return std::pow(F.mu * F.mu + z2, F.p / 2.0);
        case IntegrandKind::double_phase:
            return std::pow(z2, F.p / 2.0) + F.a(x) * std::pow(z2, F.q / 2.0);
        case IntegrandKind::pq_blend:
            return std::pow(F.mu * F.mu + z2, F.p / 2.0) + std::pow(F.mu * F.mu + z2, F.q / 2.0);
        case IntegrandKind::custom_tabulated:
            return F.custom(x, z, len);
    }
    return 0.0;
}

// Analytic z-derivative (centered differences for custom_tabulated).
// Degenerate mu=0, z=0: continuous extension, zero for p >= 2; for p < 2 the
// |z| < 1e-14 guard returns the zero limit.
inline void d_density(const Integrand& F, Vec2 x, const double* z, int len, double* out) {
    double z2 = znorm2(z, len);
    auto radial = [&](double coeff) {
        for (int i = 0; i < len; ++i) out[i] = coeff * z[i];
    };
    switch (F.kind) {
        case IntegrandKind::power: {
            radial(F.p * std::pow(F.mu * F.mu + z2, (F.p - 2.0) / 2.0));
            if (F.mu == 0.0 && z2 < 1e-28) radial(0.0);
            return;
        }
        case IntegrandKind::double_phase: {
            if (z2 < 1e-28) {
                radial(0.0);
                return;
            }
            double c = F.p * std::pow(z2, (F.p - 2.0) / 2.0) +
                       F.a(x) * F.q * std::pow(z2, (F.q - 2.0) / 2.0);
            radial(c);
            return;
        }
        case IntegrandKind::pq_blend: {
            double c = F.p * std::pow(F.mu * F.mu + z2, (F.p - 2.0) / 2.0) +
                       F.q * std::pow(F.mu * F.mu + z2, (F.q - 2.0) / 2.0);
            if (F.mu == 0.0 && z2 < 1e-28) c = 0.0;
            radial(c);
            return;
        }
        case IntegrandKind::custom_tabulated: {
            std::vector<double> zp(z, z + len);
            double step = 1e-6 * (1.0 + std::sqrt(z2));
            for (int i = 0; i < len; ++i) {
                zp[i] = z[i] + step;
                double fp = F.custom(x, zp.data(), len);
                zp[i] = z[i] - step;
                double fm = F.custom(x, zp.data(), len);
                zp[i] = z[i];
                out[i] = (fp - fm) / (2.0 * step);
            }
            return;
        }
    }
}

// Midpoint-rule energy: h^2 * sum of F(cell center, Du(cell center)) over
// cells whose four corners are inside; Du averaged from the corner nodes of
// the gradient field. Deterministic pairwise-tree summation.
inline double energy(const Integrand& F, const Field& du, const Grid& g) {
    if (du.grid.get() != &g) reject("energy: gradient field grid mismatch");
    int len = du.m;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(g.nx) * g.ny);
    std::vector<double> z(len);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            std::size_t k00 = g.idx(i, j), k10 = g.idx(i + 1, j);
            std::size_t k01 = g.idx(i, j + 1), k11 = g.idx(i + 1, j + 1);
            if (!(g.inside_mask[k00] && g.inside_mask[k10] && g.inside_mask[k01] &&
                  g.inside_mask[k11]))
                continue;
            for (int c = 0; c < len; ++c) {
                double v = 0.25 * (du.at(k00, c) + du.at(k10, c) + du.at(k01, c) + du.at(k11, c));
                if (std::isnan(v))
                    reject("energy: NaN gradient at cell (", i, ",", j, ") node ", k00);
                z[c] = v;
            }
            Vec2 xc{g.origin.x + (i + 0.5) * g.h, g.origin.y + (j + 0.5) * g.h};
            terms.push_back(density(F, xc, z.data(), len));
        }
    }
    return pairwise_sum(terms) * g.h * g.h;
}

// ---------------------------------------------------------------------------
// Hypothesis audit
// ---------------------------------------------------------------------------

struct SamplePlan {
    int n_points = 64;      // x (and y) draws
    int n_gradients = 64;   // z (and w) draws
    int n_scales = 16;      // s draws for doubling
    int n = 2;              // domain dimension of the gradient variable
    int m = 1;              // codomain dimension
    std::uint64_t seed = 1;
    Vec2 box_lo{0.0, 0.0};  // x-sampling box
    Vec2 box_hi{1.0, 1.0};

    void validate() const {
        if (n_points <= 0 || n_gradients <= 0 || n_scales <= 0)
            reject("hypothesis_audit: empty sample plan");
    }
};

struct AuditEntry {
    std::string name;
    double measured = 0.0;
    double declared = 0.0;
    bool pass = true;
    bool checked = true;  // false when the hypothesis is not claimed by the integrand
};

struct HypothesisReport {
    std::vector<AuditEntry> entries;
    bool all_passed = true;

    const AuditEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

// Sampled worst-case constants for (H1)-(H6) and the difference bound; a
// probabilistic certificate against the declared constants with 5% slack.
inline HypothesisReport hypothesis_audit(const Integrand& F, const SamplePlan& plan) {
    F.validate();
    plan.validate();
    std::mt19937_64 rng(plan.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int len = plan.n * plan.m;

    auto draw_x = [&]() {
        return Vec2{plan.box_lo.x + (plan.box_hi.x - plan.box_lo.x) * unit(rng),
                    plan.box_lo.y + (plan.box_hi.y - plan.box_lo.y) * unit(rng)};
    };
    auto draw_z = [&](std::vector<double>& z) {
        double mag = std::pow(10.0, -3.0 + 6.0 * unit(rng));  // log-uniform in [1e-3, 1e3]
        double norm = 0.0;
        for (int i = 0; i < len; ++i) {
            z[i] = 2.0 * unit(rng) - 1.0;
            norm += z[i] * z[i];
        }
        norm = std::sqrt(norm);
        for (int i = 0; i < len; ++i) z[i] = norm > 0 ? z[i] / norm * mag : 0.0;
    };

    std::vector<double> z(len), w(len), dz(len), dw(len), zw(len);
    HypothesisReport rep;
    const double slack = 1.05;

    double h1_min = std::numeric_limits<double>::infinity();
    double h2_max = 0.0, h3_max = 0.0, h4_max = 0.0, h5_max = 0.0, diff_max = 0.0;
    for (int s = 0; s < plan.n_gradients; ++s) {
        Vec2 x = draw_x();
        Vec2 y = draw_x();
        draw_z(z);
        draw_z(w);
        double Fz = density(F, x, z.data(), len);
        double Fw = density(F, x, w.data(), len);
        d_density(F, x, w.data(), len, dw.data());
        d_density(F, x, z.data(), len, dz.data());
        double inner = 0.0, d2 = 0.0;
        for (int i = 0; i < len; ++i) {
            inner += dw[i] * (z[i] - w[i]);
            d2 += (z[i] - w[i]) * (z[i] - w[i]);
        }
        if (d2 < 1e-24) continue;
        double quot = (Fz - Fw - inner) / d2;
        double z2 = znorm2(z.data(), len), w2 = znorm2(w.data(), len);
        h1_min = std::min(h1_min,
                          quot / std::pow(F.mu * F.mu + z2 + w2, (F.p - 2.0) / 2.0));
        h2_max = std::max(h2_max, std::abs(Fz) / std::pow(1.0 + z2, F.q / 2.0));
        h3_max = std::max(h3_max, quot / std::pow(1.0 + z2 + w2, (F.q - 2.0) / 2.0));
        double dualw = 1.0 + znorm2(dz.data(), len) + znorm2(dw.data(), len);
        h4_max = std::max(h4_max, quot / std::pow(dualw, (F.q - 2.0) / (2.0 * (F.q - 1.0))));
        double Fyz = density(F, y, z.data(), len);
        double dxy = dist(x, y);
        if (dxy > 1e-12)
            h5_max = std::max(h5_max, std::abs(Fz - Fyz) /
                                          (std::pow(dxy, F.alpha) * std::pow(1.0 + z2, F.q / 2.0)));
        diff_max = std::max(
            diff_max, std::abs(Fz - Fw) / (std::sqrt(d2) *
                                           std::pow(1.0 + std::sqrt(z2) + std::sqrt(w2), F.q - 1.0)));
    }

    rep.entries.push_back({"H1_ellipticity", h1_min, F.nu, h1_min >= F.nu / slack, true});
    rep.entries.push_back({"H2_natural_growth", h2_max, F.Lambda, h2_max <= F.Lambda * slack, true});
    bool has_controlled = F.growth != GrowthClass::natural;
    rep.entries.push_back({"H3_controlled_growth", h3_max, F.Lambda,
                           !has_controlled || h3_max <= F.Lambda * slack, has_controlled});
    bool has_duality = F.growth == GrowthClass::controlled_duality;
    rep.entries.push_back({"H4_controlled_duality", h4_max, F.Lambda,
                           !has_duality || h4_max <= F.Lambda * slack, has_duality});
    bool x_dependent = !F.autonomous;
    rep.entries.push_back({"H5_holder_x", h5_max, F.Lambda,
                           !x_dependent || h5_max <= F.Lambda * slack, x_dependent});

    // doubling: F(x, s z) <= C (1 + F(x, z)) for s in [1, s0)
    double doubling_max = 0.0;
    for (int t = 0; t < plan.n_scales; ++t) {
        Vec2 x = draw_x();
        draw_z(z);
        double sc = 1.0 + (F.s0 - 1.0) * unit(rng) * (1.0 - 1e-9);
        for (int i = 0; i < len; ++i) zw[i] = sc * z[i];
        double ratio = density(F, x, zw.data(), len) / (1.0 + density(F, x, z.data(), len));
        doubling_max = std::max(doubling_max, ratio);
    }
    double doubling_declared = std::max(1.0, F.Lambda) * (1.0 + std::pow(F.s0, F.q));
    rep.entries.push_back({"H6_doubling", doubling_max, doubling_declared,
                           doubling_max <= doubling_declared * slack, true});

    // minimizing-point condition: on each test ball there must be a sampled
    // y-hat with F(y-hat, z) <= F(y, z) for all sampled y and z
    double xcond_worst = 0.0;
    int n_balls = std::max(2, plan.n_points / 16);
    int n_y = std::min(24, plan.n_points);
    int n_zc = std::min(24, plan.n_gradients);
    for (int bidx = 0; bidx < n_balls; ++bidx) {
        Vec2 xc = draw_x();
        std::vector<Vec2> ys(n_y);
        for (int i = 0; i < n_y; ++i) {
            double ang = 2.0 * M_PI * unit(rng);
            double rad = F.eps0 * std::sqrt(unit(rng));
            ys[i] = {xc.x + rad * std::cos(ang), xc.y + rad * std::sin(ang)};
        }
        std::vector<std::vector<double>> zs(n_zc, std::vector<double>(len));
        for (auto& zz : zs) draw_z(zz);
        double best_deficit = std::numeric_limits<double>::infinity();
        for (int cand = 0; cand < n_y; ++cand) {
            double deficit = 0.0;
            for (const auto& zz : zs) {
                double fc = density(F, ys[cand], zz.data(), len);
                double zn = std::pow(1.0 + znorm2(zz.data(), len), F.q / 2.0);
                for (int other = 0; other < n_y; ++other) {
                    double fo = density(F, ys[other], zz.data(), len);
                    deficit = std::max(deficit, (fc - fo) / zn);
                }
            }
            best_deficit = std::min(best_deficit, deficit);
        }
        xcond_worst = std::max(xcond_worst, best_deficit);
    }
    bool claims_xcond = !F.autonomous;
    rep.entries.push_back({"H6_min_point", xcond_worst, 1e-9,
                           !claims_xcond || xcond_worst <= 1e-9, claims_xcond});

    double diff_declared = 4.0 * F.q * std::max(1.0, F.Lambda);
    rep.entries.push_back(
        {"diff_bound", diff_max, diff_declared, diff_max <= diff_declared * slack, true});

    if (F.kind == IntegrandKind::double_phase) {
        double a_min = std::numeric_limits<double>::infinity();
        for (int t = 0; t < plan.n_points; ++t) a_min = std::min(a_min, F.a(draw_x()));
        rep.entries.push_back({"a_nonnegative", a_min, 0.0, a_min >= 0.0, true});
    }

    for (const AuditEntry& e : rep.entries) rep.all_passed = rep.all_passed && e.pass;
    return rep;
}

// ---------------------------------------------------------------------------
// Theorem case classifier
// ---------------------------------------------------------------------------

struct ClassifierFlags {
    bool autonomous = true;
    GrowthClass growth = GrowthClass::natural;
    bool bounded_u = false;
    bool doubling = false;
    bool holder_x = false;
    bool x_condition = false;
    bool is_minimizer = false;
};

enum class CaseConclusion { none, relaxation_equality, min_equality };

struct TheoremCase {
    std::set<int> applicable_cases;
    CaseConclusion conclusion = CaseConclusion::none;
    std::vector<std::pair<std::string, double>> active_constraints;
    int required_N = 1;
};

// Literal evaluation of the eight case hypotheses; np/(n-p) means +infinity
// when p >= n.
inline TheoremCase classify_case(double p, double q, int n, int m, double alpha,
                                 const ClassifierFlags& flags) {
    if (!(p > 1.0) || q < p) reject("classify_case: need 1 < p <= q");
    if (n < 2 || m < 1) reject("classify_case: need n >= 2, m >= 1");
    TheoremCase tc;
    const double inf = std::numeric_limits<double>::infinity();
    double nd = static_cast<double>(n);

    double thr1 = (nd + alpha) * p / nd;
    double thr2 = std::min(p + 1.0, nd * p / (nd - 1.0));
    double thr34 = p + std::max(1.0, p / nd);
    double thr5 = std::min(p + 2.0, p * (1.0 + 2.0 / (nd - 1.0)));
    double thr6 = p >= nd ? inf : nd * p / (nd - p);
    double thr78 = p + std::max(2.0, 2.0 * p / nd);

    tc.active_constraints = {
        {"(n+alpha)p/n", thr1},
        {"p+1", p + 1.0},
        {"np/(n-1)", nd * p / (nd - 1.0)},
        {"p+max(1,p/n)", thr34},
        {"p+2", p + 2.0},
        {"p(1+2/(n-1))", p * (1.0 + 2.0 / (nd - 1.0))},
        {"np/(n-p)", thr6},
        {"p+max(2,2p/n)", thr78},
    };

    bool natural_ok = true;  // (H2)-(H4) are increasingly strong
    bool controlled_ok = flags.growth != GrowthClass::natural;
    bool duality_ok = flags.growth == GrowthClass::controlled_duality;
    bool scalar = m == 1;

    if (q < thr1 && natural_ok && flags.holder_x && flags.x_condition)
        tc.applicable_cases.insert(1);
    if (q < thr2 && flags.autonomous && natural_ok) tc.applicable_cases.insert(2);
    if (q < thr34 && flags.autonomous && natural_ok && flags.bounded_u)
        tc.applicable_cases.insert(3);
    if (q < thr34 && flags.autonomous && natural_ok && scalar) tc.applicable_cases.insert(4);
    if (flags.is_minimizer) {
        if (p >= 2.0 && q < thr5 && flags.autonomous && controlled_ok && flags.doubling)
            tc.applicable_cases.insert(5);
        if (p >= 2.0 && q < thr6 && flags.autonomous && duality_ok) tc.applicable_cases.insert(6);
        if (p > 2.0 && q < thr78 && flags.autonomous && controlled_ok && flags.bounded_u)
            tc.applicable_cases.insert(7);
        if (p >= 2.0 && q < thr78 && flags.autonomous && controlled_ok && scalar && flags.doubling)
            tc.applicable_cases.insert(8);
    }

    bool relax = false, mineq = false;
    for (int c : tc.applicable_cases) {
        relax = relax || c <= 4;
        mineq = mineq || c >= 5;
    }
    tc.conclusion = relax ? CaseConclusion::relaxation_equality
                          : (mineq ? CaseConclusion::min_equality : CaseConclusion::none);

    // N per the smoothing constraints: always N >= 1; A2 decay in L^q wants
    // N (1 - n(1/p - 1/q)) >= 1; the x-dependent route additionally wants
    // N (n + 1 - n q/p) > 1, realized as ceil(2 / (n + 1 - n q/p)).
    double n_req = 1.0;
    double t1 = 1.0 - nd * (1.0 / p - 1.0 / q);
    if (t1 > 0.0) n_req = std::max(n_req, std::ceil(1.0 / t1));
    if (tc.applicable_cases.count(1)) {
        double t2 = nd + 1.0 - nd * q / p;
        if (t2 > 0.0) n_req = std::max(n_req, std::ceil(2.0 / t2));
    }
    tc.required_N = static_cast<int>(n_req);
    return tc;
}

}  // namespace pqlab
