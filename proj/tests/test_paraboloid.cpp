#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "frac/paraboloid.hpp"
#include "frac/rng.hpp"
#include "frac/runner.hpp"

using namespace frac;

namespace {

XZGrid symmetric_grid(int nx, int nz_half, double xr, double zr) {
    XZGrid g;
    g.x.resize(nx);
    for (int i = 0; i < nx; ++i) g.x[i] = -xr + 2.0 * xr * i / (nx - 1);
    g.z.resize(2 * nz_half + 1);
    for (int j = -nz_half; j <= nz_half; ++j)
        g.z[j + nz_half] = zr * static_cast<double>(j) / nz_half;
    return g;
}

// independent brute-force argmin, plain loops
std::tuple<int, int, double> brute_slide(const XZField& U, SParam s, double a, double vx,
                                         double vz) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < U.grid.nx(); ++i)
        for (int j = 0; j < U.grid.nz(); ++j) {
            const double v =
                U.at(i, j) + a * (0.5 * sq(U.grid.x[i] - vx) + delta_h(s, vz, U.grid.z[j]));
            if (v < best) {
                best = v;
                bi = i;
                bj = j;
            }
        }
    return {bi, bj, best};
}

}  // namespace

TEST_CASE("paraboloid evaluation") {
    Paraboloid P{0.5, 1.0, 0.0, 0.0, 0.0};
    CHECK(P.eval(1.0, 1.0) == doctest::Approx(-1.0));
    CHECK(P.eval(0.0, 0.0) == 0.0);  // value at the vertex is the offset
    Paraboloid P2{0.5, 2.0, 0.0, 0.0, 0.0};
    CHECK(P2.eval(1.0, 1.0) == doctest::Approx(-2.0));
    Paraboloid P3{0.5, 1.0, 0.3, -0.2, 5.0};
    CHECK(P3.eval(0.3, -0.2) == 5.0);
}

TEST_CASE("vertex slope") {
    CHECK(Paraboloid{0.5, 2.0, 0.0, 1.0, 0.0}.vertex_slope() == doctest::Approx(2.0));
    CHECK(Paraboloid{0.3, 4.0, 0.0, 0.0, 0.0}.vertex_slope() == 0.0);
    for (double s : {0.25, 0.5, 0.75})
        for (double zv : {-1.5, -0.2, 0.4, 2.0}) {
            Paraboloid P{s, 1.5, 0.0, zv, 0.0};
            CHECK(sgn(P.vertex_slope()) == sgn(P.a * zv));
        }
}

TEST_CASE("slide from below") {
    const SParam s(0.5);
    XZGrid g = symmetric_grid(41, 20, 1.0, 1.0);
    NodeSet search = all_nodes(g);

    SUBCASE("constant function touches at the vertex") {
        XZField U(g);
        U.v.setConstant(5.0);
        TouchResult t = slide_from_below(U, s, 1.0, g.x[13], g.z[27], search);
        CHECK(t.ci == 13);
        CHECK(t.cj == 27);
        CHECK(t.p.offset == doctest::Approx(5.0));
        CHECK(t.gap_min == 0.0);
    }
    SUBCASE("U = delta_Phi(v0, .) touches at v0 with zero offset") {
        const double vx = g.x[20], vz = g.z[20];
        XZField U(g);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.nz(); ++j)
                U.at(i, j) = 0.5 * sq(g.x[i] - vx) + delta_h(s, vz, g.z[j]);
        TouchResult t = slide_from_below(U, s, 2.0, vx, vz, search);
        CHECK(g.x[t.ci] == vx);
        CHECK(g.z[t.cj] == vz);
        CHECK(t.p.offset == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("matches the brute-force oracle on noisy data") {
        for (int trial = 0; trial < 25; ++trial) {
            RngStream rng = sample_stream(17, 2, trial);
            XZField U(g);
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.nz(); ++j) U.at(i, j) = 0.05 * rng.uniform();
            const double vx = rng.uniform(-0.8, 0.8), vz = rng.uniform(-0.8, 0.8);
            const double a = rng.uniform(0.5, 3.0);
            TouchResult t = slide_from_below(U, s, a, vx, vz, search);
            auto [bi, bj, bc] = brute_slide(U, s, a, vx, vz);
            CHECK(t.ci == bi);
            CHECK(t.cj == bj);
            CHECK(t.p.offset == bc);
        }
    }
    SUBCASE("exact ties break to the lexicographically smallest index") {
        XZField U(g);
        U.v.setZero();
        // vertex centered between two symmetric nodes in z
        TouchResult t = slide_from_below(U, s, 1.0, g.x[20], 0.5 * (g.z[19] + g.z[20]), search);
        CHECK(t.ci == 20);
        CHECK(t.cj == 19);
    }
}

TEST_CASE("reopen keeps the contact point and stays below U") {
    const SParam s(0.4);
    XZGrid g = symmetric_grid(41, 20, 1.0, 1.0);
    NodeSet search = all_nodes(g);
    XZField U(g);
    RngStream rng(7);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.nz(); ++j)
            U.at(i, j) = sq(g.x[i]) + sq(g.z[j]) + 0.02 * rng.uniform();

    TouchResult t = slide_from_below(U, s, 0.7, 0.1, -0.2, search);
    SUBCASE("same opening reproduces the touch") {
        TouchResult r = reopen(U, s, t, 0.7, search);
        CHECK(r.ci == t.ci);
        CHECK(r.cj == t.cj);
        CHECK(r.gap_min >= -1e-12);
    }
    SUBCASE("opening times ten, verified node by node") {
        TouchResult r = reopen(U, s, t, 7.0, search);
        CHECK(r.ci == t.ci);
        CHECK(r.cj == t.cj);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.nz(); ++j)
                CHECK(U.at(i, j) - r.p.eval(g.x[i], g.z[j]) >= -1e-10);
        // the touch value is preserved
        CHECK(r.p.eval(r.contact_x, r.contact_z) ==
              doctest::Approx(U.at(t.ci, t.cj)).epsilon(1e-12));
    }
    SUBCASE("constant case at doubled opening still touches at the vertex") {
        XZField C(g);
        C.v.setConstant(2.0);
        TouchResult tc = slide_from_below(C, s, 1.0, g.x[20], g.z[20], search);
        TouchResult rc = reopen(C, s, tc, 2.0, search);
        CHECK(rc.ci == tc.ci);
        CHECK(rc.cj == tc.cj);
    }
}

TEST_CASE("vertex sign and trace-vertex bounds") {
    const SParam s(0.5);
    TouchResult t;
    t.contact_z = 0.5;
    t.p = Paraboloid{0.5, 1.0, 0.0, -0.3, 0.0};
    CHECK_FALSE(vertex_sign_check(t));  // positive contact, negative vertex flagged
    t.p.vertex_z = 0.1;
    CHECK(vertex_sign_check(t));

    TouchResult t0;
    t0.contact_z = 0.0;
    t0.p = Paraboloid{0.5, 2.0, 0.0, 0.0, 0.0};
    CHECK(neumann_vertex_bound_check(t0, s, 0.0));        // f = 0 forces z_v = 0
    t0.p.vertex_z = 0.4;
    CHECK_FALSE(neumann_vertex_bound_check(t0, s, 0.0));  // |h'(z_v)| > 0 = |f^-|/a
    CHECK(neumann_vertex_bound_check(t0, s, -1.0));       // |h'(0.4)| = 0.4 <= 0.5
    CHECK_FALSE(neumann_vertex_bound_check(t0, s, 0.3));  // f > 0: untouchable
}

TEST_CASE("abp experiment on generated supersolutions") {
    const SParam s(0.5);
    SupersolutionSample smp = make_random_supersolution(s, 49, 28, 0.6, 1.0, 2.0, 11);
    const CubeDesc B = cube(s, PointXZ::xz(0.5, 0.0), 0.01);
    AbpReport rep = abp_experiment(smp.U, s, B, 25.0, smp.f_trace, smp.ax, 1.0, 2.0);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.mu_B > 0.0);
    CHECK(rep.mu_A > 0.0);
    CHECK(rep.n_contacts >= 1);
    CHECK(rep.pinch_violations == 0);

    SUBCASE("ratio is invariant under adding a constant to U") {
        XZField shifted = smp.U;
        shifted.v.array() += 3.7;
        AbpReport rep2 = abp_experiment(shifted, s, B, 25.0, smp.f_trace, smp.ax, 1.0, 2.0);
        CHECK(rep2.ratio == doctest::Approx(rep.ratio).epsilon(1e-12));
        CHECK(rep2.contacts == rep.contacts);
    }
    SUBCASE("non-supersolution data is rejected") {
        XZField bump = smp.U;
        bump.at(24, 28) -= 0.5;  // dent violates the interior inequality
        CHECK_THROWS_AS(abp_experiment(bump, s, B, 25.0, smp.f_trace, smp.ax, 1.0, 2.0),
                        numerical_error);
    }
}

TEST_CASE("abp on a symmetric supersolution keeps a symmetric contact set") {
    const SParam s(0.5);
    XZGrid g = symmetric_grid(41, 20, 1.0, 1.0);
    XZField U(g);
    // symmetric strictly convex-in-delta profile: a supersolution of the
    // homogeneous problem with zero Neumann data is e.g. constant minus a cap;
    // use U = 3 - x^2/4 - |z|: interior a uxx + zc uzz = -a/2 <= 0,
    // Neumann -(U(z1)-U(0))/z1 = +1 >= 0
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.nz(); ++j)
            U.at(i, j) = 3.0 - 0.25 * sq(g.x[i]) - std::abs(g.z[j]);
    Eigen::VectorXd f = Eigen::VectorXd::Ones(g.nx());
    Eigen::VectorXd ax = Eigen::VectorXd::Ones(g.nx());
    const CubeDesc B = cube(s, PointXZ::xz(0.0, 0.0), 0.05);
    AbpReport rep = abp_experiment(U, s, B, 2.0, f, ax, 1.0, 1.0);
    CHECK(rep.n_contacts > 0);
    // mirror statement at grid level: for each touching paraboloid recovered
    // from a vertex, the z-mirrored paraboloid touches at the mirrored node
    NodeSet search = all_nodes(g);
    NodeSet vset = nodes_in_cube(g, s, B, true);
    for (int vi = vset.i_lo; vi <= vset.i_hi; ++vi) {
        for (int vj = vset.j_lo; vj <= vset.j_hi; ++vj) {
            if (!vset.contains(g, vi, vj)) continue;
            TouchResult t = slide_from_below(U, s, 2.0, g.x[vi], g.z[vj], search);
            Paraboloid mirror = t.p;
            mirror.vertex_z = -t.p.vertex_z;
            const int jm = g.nz() - 1 - t.cj;
            // mirrored paraboloid matches U at the mirrored contact and stays below
            CHECK(mirror.eval(t.contact_x, g.z[jm]) ==
                  doctest::Approx(U.at(t.ci, jm)).epsilon(1e-12));
            double worst = 0.0;
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.nz(); ++j)
                    worst = std::min(worst, U.at(i, j) - mirror.eval(g.x[i], g.z[j]));
            CHECK(worst >= -1e-12);
        }
    }
}

TEST_CASE("mirrored subsolution variant slides from above") {
    const SParam s(0.5);
    XZGrid g = symmetric_grid(41, 20, 1.0, 1.0);
    XZField U(g);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.nz(); ++j)
            U.at(i, j) = 0.25 * sq(g.x[i]) + std::abs(g.z[j]);  // subsolution
    Eigen::VectorXd f = -Eigen::VectorXd::Ones(g.nx());  // -d_{z+}U = -1 <= f needs f >= -1
    Eigen::VectorXd ax = Eigen::VectorXd::Ones(g.nx());
    const CubeDesc B = cube(s, PointXZ::xz(0.0, 0.0), 0.05);
    AbpOptions opt;
    opt.from_above = true;
    AbpReport rep = abp_experiment(U, s, B, -2.0, f, ax, 1.0, 1.0, opt);
    CHECK(rep.mu_A > 0.0);
    CHECK(rep.ratio > 0.0);
}

TEST_CASE("contact set A_{a,R}") {
    const SParam s(0.5);
    GeometryConstants geo = derived_constants(2.0, 2.2, 1);
    // K2_hat = 11, K3_hat = 53.24; keep R small so the cubes fit
    const double R = 2e-4;
    XZGrid g = symmetric_grid(61, 30, 0.5, 0.5);
    const PointXZ center = PointXZ::xz(0.0, 0.0);

    SUBCASE("a field above the value cap gives the empty set") {
        XZField U(g);
        U.v.setConstant(10.0);
        ContactAaR A = contact_A_aR(U, s, 1.0, R, geo, center);
        CHECK(A.points.empty());
    }
    SUBCASE("a touching paraboloid's own graph is in its contact set") {
        Paraboloid P{0.5, 1.0, 0.0, 0.0, 0.5 * 1.0 * R};
        XZField U(g);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.nz(); ++j) U.at(i, j) = P.eval(g.x[i], g.z[j]);
        ContactAaR A = contact_A_aR(U, s, 1.0, R, geo, center);
        const int i0 = 30, j0 = 30;  // grid origin: U = c = aR/2 <= aR there
        CHECK(A.contains(i0, j0));
    }
    SUBCASE("monotonicity in the opening on random supersolutions") {
        SupersolutionSample smp = make_random_supersolution(s, 61, 30, 0.6, 1.0, 2.0, 23);
        // normalize so some values fall under the cap
        const PointXZ c2 = PointXZ::xz(0.5, 0.0);
        const double R2 = 1e-3;
        XZField W = smp.U;
        W.v.array() -= W.v.minCoeff();
        ContactAaR A1 = contact_A_aR(W, s, 60.0, R2, geo, c2);
        ContactAaR A2 = contact_A_aR(W, s, 120.0, R2, geo, c2);
        for (const auto& p : A1.points) {
            bool found = false;
            for (const auto& q : A2.points) found = found || (p == q);
            CHECK(found);
        }
        CHECK(A2.points.size() >= A1.points.size());
    }
}
