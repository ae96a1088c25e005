#include <catch2/catch_amalgamated.hpp>

#include "pqlab/partition.hpp"

using namespace pqlab;

namespace {

Domain unit_square() {
    Domain d;
    d.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    return d;
}

double partition_sum_at(const PartitionOfUnity& pou, int i, int j) {
    double s = 0.0;
    for (const WindowField& w : pou.psi) s += w.value_at(i, j);
    return s;
}

}  // namespace

TEST_CASE("bump values and derivative bound") {
    Domain d = unit_square();
    auto grid = build_grid(d, 1.0 / 512.0, 0.0);
    Ball ball{{0.5, 0.5}, 0.2};
    double delta = 0.25;
    WindowField phi = bump(*grid, ball, delta);

    // node nearest the center
    int ic = static_cast<int>(std::round((0.5 - grid->origin.x) / grid->h));
    CHECK(phi.value_at(ic, ic) == 1.0);
    // outside the (1+delta) dilation the cutoff vanishes
    int io = static_cast<int>(std::round((0.5 + 1.25 * 0.2 - grid->origin.x) / grid->h)) + 1;
    CHECK(phi.value_at(io, ic) == 0.0);

    for (double v : phi.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // measured sup |D phi| <= 8 / ((delta/2) r) for the polynomial profile
    double max_grad = 0.0;
    for (int j = phi.j0; j < phi.j0 + phi.ny; ++j)
        for (int i = phi.i0; i < phi.i0 + phi.nx; ++i) {
            double dx = (phi.value_at(i + 1, j) - phi.value_at(i - 1, j)) / (2 * grid->h);
            double dy = (phi.value_at(i, j + 1) - phi.value_at(i, j - 1)) / (2 * grid->h);
            max_grad = std::max(max_grad, std::hypot(dx, dy));
        }
    CHECK(max_grad <= 8.0 / ((delta / 2.0) * ball.r));  // = 320
    CHECK(max_grad > 0.0);

    SECTION("smooth_exp profile also stays within the bound") {
        WindowField phie = bump(*grid, ball, delta, BumpProfile::smooth_exp);
        CHECK(phie.value_at(ic, ic) == 1.0);
        CHECK(phie.value_at(io, ic) == 0.0);
    }
    SECTION("shell outside the annulus is rejected") {
        CHECK_THROWS_AS(bump(*grid, ball, delta, BumpProfile::polynomial, 0.1), rejection);
        CHECK_THROWS_AS(bump(*grid, ball, delta, BumpProfile::polynomial, 0.3), rejection);
    }
}

TEST_CASE("single ball partition equals its own cutoff") {
    Domain d = unit_square();
    auto grid = build_grid(d, 0.01, 0.0);
    Covering cov;
    cov.delta = 0.25;
    cov.r_min = 0.1;
    cov.balls = {{{0.5, 0.5}, 0.2}};
    cov.M = 1;
    cov.rebuild_neighbor_index();
    WindowField phi = bump(*grid, cov.balls[0], cov.delta);
    PartitionOfUnity pou = build_partition(cov, grid, {phi});
    for (std::size_t k = 0; k < pou.psi[0].values.size(); ++k)
        CHECK(pou.psi[0].values[k] == Catch::Approx(phi.values[k]).margin(1e-15));
}

TEST_CASE("two identical balls split evenly on their core") {
    Domain d = unit_square();
    auto grid = build_grid(d, 0.01, 0.0);
    Covering cov;
    cov.delta = 0.25;
    cov.r_min = 0.1;
    cov.balls = {{{0.5, 0.5}, 0.2}, {{0.5, 0.5}, 0.2}};
    cov.M = 2;
    cov.rebuild_neighbor_index();
    PartitionOfUnity pou = build_partition(cov, grid);
    int ic = static_cast<int>(std::round((0.5 - grid->origin.x) / grid->h));
    CHECK(pou.psi[0].value_at(ic, ic) == Catch::Approx(0.5));
    CHECK(pou.psi[1].value_at(ic, ic) == Catch::Approx(0.5));
}

TEST_CASE("partition invariants on a real covering") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.05, 0.25);
    auto grid = build_grid(d, 1.0 / 512.0, 0.0);
    PartitionOfUnity pou = build_partition(cov, grid);

    double worst = 0.0;
    for (int j = 0; j < grid->nodes_y(); ++j)
        for (int i = 0; i < grid->nodes_x(); ++i)
            if (pou.covered_mask[grid->idx(i, j)])
                worst = std::max(worst, std::abs(partition_sum_at(pou, i, j) - 1.0));
    CHECK(worst <= 1e-12);

    // psi_i >= 1/M on B_i
    for (std::size_t b = 0; b < cov.balls.size(); ++b) {
        const Ball& ball = cov.balls[b];
        const WindowField& psi = pou.psi[b];
        for (int j = psi.j0; j < psi.j0 + psi.ny; ++j)
            for (int i = psi.i0; i < psi.i0 + psi.nx; ++i) {
                double v = psi.values[psi.widx(i, j)];
                CHECK(v >= 0.0);
                CHECK(v <= 1.0 + 1e-15);
                if (dist(grid->node(i, j), ball.center) < ball.r)
                    CHECK(v >= 1.0 / cov.M - 1e-12);
            }
    }
    CHECK(pou.deriv_bound_c > 0.0);
}

TEST_CASE("missing cutoff coverage is rejected with the node") {
    Domain d = unit_square();
    auto grid = build_grid(d, 0.01, 0.0);
    Covering cov;
    cov.delta = 0.25;
    cov.r_min = 0.1;
    cov.balls = {{{0.5, 0.5}, 0.2}};
    cov.M = 1;
    cov.rebuild_neighbor_index();
    WindowField broken = bump(*grid, cov.balls[0], cov.delta);
    for (double& v : broken.values) v *= 0.5;  // phi no longer 1 on the core
    CHECK_THROWS_MATCHES(build_partition(cov, grid, {broken}), rejection,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("node")));
}

TEST_CASE("deriv_bound_c is stable under r_min refinement") {
    Domain d = unit_square();
    auto grid = build_grid(d, 1.0 / 1024.0, 0.0);
    Covering c1 = build_wb_covering(d, 0.05, 0.25);
    Covering c2 = build_wb_covering(d, 0.025, 0.25);
    PartitionOfUnity p1 = build_partition(c1, grid);
    PartitionOfUnity p2 = build_partition(c2, grid);
    double ratio = p1.deriv_bound_c / p2.deriv_bound_c;
    CHECK(ratio < 1.5);
    CHECK(ratio > 1.0 / 1.5);
}

TEST_CASE("chain bound: |D psi_i| controlled by neighbor cutoff gradients") {
    Domain d = unit_square();
    Covering cov = build_wb_covering(d, 0.05, 0.25);
    auto grid = build_grid(d, 1.0 / 512.0, 0.0);
    std::vector<WindowField> phis(cov.balls.size());
    for (std::size_t b = 0; b < cov.balls.size(); ++b)
        phis[b] = bump(*grid, cov.balls[b], cov.delta);
    PartitionOfUnity pou = build_partition(cov, grid, phis);

    double chain_c = 0.0;
    for (std::size_t b = 0; b < cov.balls.size(); ++b) {
        double psi_grad = detail::window_max_grad(*grid, pou.psi[b]);
        double phi_sum = detail::window_max_grad(*grid, phis[b]);
        for (int j : cov.neighbor_index[b]) phi_sum += detail::window_max_grad(*grid, phis[j]);
        chain_c = std::max(chain_c, psi_grad / phi_sum);
    }
    CHECK(chain_c < 2.0);  // reported constant; order one for this construction
}

TEST_CASE("adapted shell radius selection") {
    Domain d = unit_square();
    auto grid = build_grid(d, 1.0 / 256.0, 0.0);
    Ball ball{{0.5, 0.5}, 0.2};
    double delta = 0.25;
    double r_lo = ball.r, r_hi = (1 + delta / 2) * ball.r;

    SECTION("constant weight: ties break to the smallest candidate") {
        std::vector<double> w(grid->node_count(), 1.0);
        double si = 0.0, mean = 0.0;
        double r = adapted_shell_radius(*grid, ball, w, delta, 3.0, 2.0, 0.5, 32, &si, &mean);
        double first_candidate = r_lo + (r_hi - r_lo) / 33.0;
        CHECK(r == Catch::Approx(first_candidate));
        CHECK(si == Catch::Approx(2 * M_PI * r).epsilon(1e-3));  // shell integral of w=1
        CHECK(si <= mean * (1.0 + 1e-9));
    }
    SECTION("weight concentrated on one shell is avoided") {
        std::vector<double> w(grid->node_count(), 0.0);
        double bad_r = r_lo + 15.0 * (r_hi - r_lo) / 33.0;
        for (int j = 0; j < grid->nodes_y(); ++j)
            for (int i = 0; i < grid->nodes_x(); ++i) {
                double rr = dist(grid->node(i, j), ball.center);
                if (std::abs(rr - bad_r) < 2 * grid->h) w[grid->idx(i, j)] = 100.0;
            }
        double r = adapted_shell_radius(*grid, ball, w, delta, 3.0, 2.0, 0.5);
        CHECK(std::abs(r - bad_r) > (r_hi - r_lo) / 33.0);
    }
    SECTION("monotone radial weight: innermost candidate wins") {
        std::vector<double> w(grid->node_count());
        for (int j = 0; j < grid->nodes_y(); ++j)
            for (int i = 0; i < grid->nodes_x(); ++i)
                w[grid->idx(i, j)] = dist(grid->node(i, j), ball.center);
        double si = 0.0, mean = 0.0;
        double r = adapted_shell_radius(*grid, ball, w, delta, 3.0, 2.0, 0.5, 32, &si, &mean);
        CHECK(r == Catch::Approx(r_lo + (r_hi - r_lo) / 33.0));
        CHECK(si == Catch::Approx(2 * M_PI * r * r).epsilon(1e-3));  // analytic 2 pi r * r
        CHECK(si <= mean);
    }
    SECTION("invalid inputs rejected") {
        std::vector<double> w(grid->node_count(), 1.0);
        CHECK_THROWS_AS(adapted_shell_radius(*grid, ball, w, delta, 2.0, 3.0, 0.5), rejection);
        w[0] = -1.0;
        CHECK_THROWS_AS(adapted_shell_radius(*grid, ball, w, delta, 3.0, 2.0, 0.5), rejection);
        w[0] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(adapted_shell_radius(*grid, ball, w, delta, 3.0, 2.0, 0.5), rejection);
    }
}
