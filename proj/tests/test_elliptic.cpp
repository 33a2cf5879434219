#include <doctest.h>

#include <cmath>

#include "frac/elliptic.hpp"
#include "frac/rng.hpp"

using namespace frac;

namespace {

GridFunction sine_mode(const GridSpec& g, int k) {
    GridFunction u = GridFunction::from_fn(g, [&](double x) {
        return std::sin(k * M_PI * (x - g.lo[0]) / (g.hi[0] - g.lo[0]));
    });
    u.enforce_dirichlet();
    return u;
}

}  // namespace

TEST_CASE("assembled operator is stencil-exact on quadratics") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 65);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    GridFunction u = GridFunction::from_fn(g, [](double x) { return x * (1.0 - x); });
    u.enforce_dirichlet();
    const Eigen::VectorXd Lu = op.apply(u.values);
    for (int i = 1; i < g.n[0] - 1; ++i) CHECK(Lu[i] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(op.m_matrix);
}

TEST_CASE("second difference of a sine has O(h^2) defect") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 129);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    GridFunction u = sine_mode(g, 1);
    const Eigen::VectorXd Lu = op.apply(u.values);
    double worst = 0.0;
    for (int i = 1; i < g.n[0] - 1; ++i)
        worst = std::max(worst, std::abs(Lu[i] - M_PI * M_PI * u.values[i]));
    // pi^2 (pi h)^2 / 12 ~ 5e-4 at this resolution
    CHECK(worst < 1e-3);
    CHECK(worst > 1e-5);
}

TEST_CASE("2-D diagonal coefficients, stencil-exact quadratic") {
    const GridSpec g = GridSpec::box(0.0, 1.0, 17, 0.0, 1.0, 17);
    const Operator op = assemble_L(g, CoeffField::diagonal(g, 2.0, 1.0));
    GridFunction u = GridFunction::from_fn2(g, [](double x, double y) {
        return x * (1.0 - x) + y * (1.0 - y);
    });
    const Eigen::VectorXd Lu = op.apply(u.values);
    for (int i = 1; i < g.n[0] - 1; ++i)
        for (int j = 1; j < g.n[1] - 1; ++j)
            CHECK(Lu[g.idx(i, j)] == doctest::Approx(2.0 * 2.0 + 1.0 * 2.0).epsilon(1e-10));
}

TEST_CASE("ellipticity failure names the node") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 17);
    CoeffField c = CoeffField::constant(g, 1.0);
    c.a11[5] = -0.5;
    CHECK_THROWS_WITH_AS(assemble_L(g, c), doctest::Contains("node 5"), numerical_error);
}

TEST_CASE("heat evolution against the separated-variables solution") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 257);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    GridFunction u0 = sine_mode(g, 1);
    const double t = 0.1;
    GridFunction v = heat_evolve(op, u0, t);
    const double factor = std::exp(-M_PI * M_PI * t);
    double rel = 0.0;
    for (int i = 0; i < g.n[0]; ++i)
        rel = std::max(rel, std::abs(v.values[i] - factor * u0.values[i]));
    CHECK(rel / factor < 1e-3);

    SUBCASE("t = 0 is the identity") {
        GridFunction w = heat_evolve(op, u0, 0.0);
        CHECK((w.values - u0.values).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("positivity and sup-norm contraction on rough data") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 65);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    for (int trial = 0; trial < 20; ++trial) {
        RngStream rng = sample_stream(5, 1, trial);
        GridFunction u0(g);
        for (int i = 1; i < g.n[0] - 1; ++i) u0.values[i] = rng.uniform();
        for (double t : {0.01, 0.1, 1.0}) {
            GridFunction v = heat_evolve(op, u0, t);
            CHECK(v.min() >= -1e-12);
            CHECK(v.sup_norm() <= u0.sup_norm() + 1e-12);
        }
    }
}

TEST_CASE("spectral oracle") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 129);
    const CoeffField c = CoeffField::constant(g, 1.0);
    const Operator op = assemble_L(g, c);
    GridFunction u0 = sine_mode(g, 1);
    u0.values += 0.3 * sine_mode(g, 3).values;

    SUBCASE("matches the stepped path") {
        GridFunction a = heat_evolve(op, u0, 0.05);
        GridFunction b = spectral_semigroup(c, u0, 0.05);
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("single mode decays by the exact factor") {
        GridFunction m = sine_mode(g, 2);
        GridFunction v = spectral_semigroup(c, m, 0.2);
        const double factor = std::exp(-4.0 * M_PI * M_PI * 0.2);
        for (int i = 1; i < g.n[0] - 1; ++i)
            CHECK(v.values[i] == doctest::Approx(factor * m.values[i]).epsilon(1e-10));
    }
    SUBCASE("semigroup composition is exact on the spectral path") {
        GridFunction one = spectral_semigroup(c, u0, 0.3);
        GridFunction two = spectral_semigroup(c, spectral_semigroup(c, u0, 0.1), 0.2);
        CHECK((one.values - two.values).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("rejects variable coefficients") {
        CoeffField bad = c;
        bad.a11[4] = 2.0;
        CHECK_THROWS_AS(spectral_semigroup(bad, u0, 0.1), numerical_error);
    }
}

TEST_CASE("stepped semigroup composition within truncation slack") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 65);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.5));
    GridFunction u0 = sine_mode(g, 1);
    GridFunction one = heat_evolve(op, u0, 0.3);
    GridFunction two = heat_evolve(op, heat_evolve(op, u0, 0.1), 0.2);
    CHECK((one.values - two.values).cwiseAbs().maxCoeff() < 5e-6);
}

TEST_CASE("joint refinement against the spectral oracle, order >= 1.8") {
    std::vector<double> errs;
    for (int n : {17, 33, 65}) {
        const GridSpec g = GridSpec::line(0.0, 1.0, n);
        const CoeffField c = CoeffField::constant(g, 1.0);
        const Operator op = assemble_L(g, c);
        GridFunction u0 = sine_mode(g, 2);
        EvolveOptions opt;
        // keep dt ~ h so the O(dt^2) term participates in the rate
        opt.rel_step = 0.2 / n;
        opt.monotone_cap = false;
        GridFunction a = heat_evolve(op, u0, 0.08, opt);
        GridFunction b = spectral_semigroup(c, u0, 0.08);
        errs.push_back((a.values - b.values).cwiseAbs().maxCoeff());
    }
    const double rate1 = std::log2(errs[0] / errs[1]);
    const double rate2 = std::log2(errs[1] / errs[2]);
    CHECK(rate1 >= 1.8);
    CHECK(rate2 >= 1.8);
}

TEST_CASE("decay estimate recovers the principal eigenvalue") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 129);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    GridFunction probe = sine_mode(g, 1);
    probe.values += 0.2 * sine_mode(g, 2).values;
    SemigroupDecayEstimate d = estimate_decay(op, {probe});
    CHECK(d.eps == doctest::Approx(M_PI * M_PI).epsilon(0.02));
    CHECK(d.M >= 1.0);

    const GridSpec g2 = GridSpec::line(0.0, 2.0, 129);
    const Operator op2 = assemble_L(g2, CoeffField::constant(g2, 1.0));
    GridFunction probe2 = GridFunction::from_fn(g2, [](double x) {
        return std::sin(M_PI * x / 2.0) + 0.2 * std::sin(M_PI * x);
    });
    probe2.enforce_dirichlet();
    SemigroupDecayEstimate d2 = estimate_decay(op2, {probe2});
    CHECK(d2.eps == doctest::Approx(M_PI * M_PI / 4.0).epsilon(0.02));
}

TEST_CASE("heat kernel column diagnostics") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 65);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    HeatKernelDiagnostic diag = heat_kernel_column(op, 32, 0.01);
    CHECK(diag.column.min() >= -1e-12);
    CHECK(diag.mass <= 1.0 + 1e-12);
    CHECK(diag.gauss_c > 0.0);

    // self-adjointness for constant coefficients
    HeatKernelDiagnostic d21 = heat_kernel_column(op, 21, 0.01);
    HeatKernelDiagnostic d43 = heat_kernel_column(op, 43, 0.01);
    CHECK(d21.column.values[43] == doctest::Approx(d43.column.values[21]).epsilon(1e-8));
}

TEST_CASE("HeatSession restarts from geometric checkpoints") {
    const GridSpec g = GridSpec::line(0.0, 1.0, 65);
    const Operator op = assemble_L(g, CoeffField::constant(g, 1.0));
    GridFunction u0 = sine_mode(g, 1);
    HeatSession session(op, u0.values);
    const Eigen::VectorXd at_04 = session.advance_to(0.4);
    const double expect_04 = std::exp(-M_PI * M_PI * 0.4);
    CHECK(at_04.cwiseAbs().maxCoeff() == doctest::Approx(expect_04).epsilon(1e-3));
    const Eigen::VectorXd direct = heat_sample(op, u0.values, {0.2}).back();
    const Eigen::VectorXd back = session.advance_to(0.2);  // rewind via checkpoint
    CHECK((back - direct).cwiseAbs().maxCoeff() < 1e-6);
}
