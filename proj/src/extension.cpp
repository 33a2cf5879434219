#include "frac/extension.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "frac/ma_geometry.hpp"
#include "frac/parallel.hpp"

namespace frac {

bool XZGrid::has_z0() const { return z0_index() >= 0; }

int XZGrid::z0_index() const {
    for (int j = 0; j < nz(); ++j)
        if (z[j] == 0.0) return j;
    return -1;
}

std::vector<double> XZGrid::graded_z(double z_max, int m, double g) {
    std::vector<double> z(m + 1);
    for (int j = 0; j <= m; ++j) z[j] = z_max * std::pow(static_cast<double>(j) / m, g);
    return z;
}

Interval z_cell(const XZGrid& g, int j) {
    const double lo = j == 0 ? g.z.front() : 0.5 * (g.z[j - 1] + g.z[j]);
    const double hi = j == g.nz() - 1 ? g.z.back() : 0.5 * (g.z[j] + g.z[j + 1]);
    return {lo, hi};
}

Interval x_cell(const XZGrid& g, int i) {
    const double lo = i == 0 ? g.x.front() : 0.5 * (g.x[i - 1] + g.x[i]);
    const double hi = i == g.nx() - 1 ? g.x.back() : 0.5 * (g.x[i] + g.x[i + 1]);
    return {lo, hi};
}

double d_s_const(SParam s) {
    return std::pow(s.s, 2.0 * s.s) * gamma_fn(1.0 - s.s) / gamma_fn(1.0 + s.s);
}

double c_s_const(SParam s) {
    return gamma_fn(1.0 - s.s) / (std::pow(4.0, s.s - 0.5) * gamma_fn(s.s));
}

ExtensionGrid ExtensionGrid::graded(const GridSpec& base, SParam s, double z_max, int m_nodes) {
    require(z_max > 0.0 && m_nodes >= 8, "ExtensionGrid: bad z mesh parameters");
    ExtensionGrid g;
    g.base = base;
    g.grading = std::max(2.0, 1.0 / s.s);
    g.z = XZGrid::graded_z(z_max, m_nodes, g.grading);
    return g;
}

double ExtensionGrid::default_zmax(SParam s, const SemigroupDecayEstimate& decay,
                                   double trunc_tol) {
    require(decay.eps > 0.0, "default_zmax: decay estimate required");
    const double y = std::log(std::max(decay.M, 1.0) / trunc_tol) / std::sqrt(decay.eps);
    return std::pow(y / (2.0 * s.s), 2.0 * s.s);
}

double change_of_variables(ChangeDir dir, double value, SParam s) {
    require(value >= 0.0, "change_of_variables: value >= 0");
    if (dir == ChangeDir::y_to_z) return std::pow(value / (2.0 * s.s), 2.0 * s.s);
    return 2.0 * s.s * std::pow(value, 1.0 / (2.0 * s.s));
}

ExtensionField extend_via_quadrature(const FracContext& ctx, const GridFunction& u,
                                     const ExtensionGrid& grid, int panels, int gl_order) {
    require(u.grid.same_as(ctx.op.grid), "extend_via_quadrature: grid mismatch");
    require(u.is_dirichlet(1e-14 * (1.0 + u.sup_norm())),
            "extend_via_quadrature: u must vanish on the boundary");
    const SParam s(ctx.quad.s);

    SemigroupTable table(ctx.op, u.values, ctx.quad.nodes, ctx.decay, ctx.evolve);

    // sigma nodes: e^{-sigma^{1/s}} below 1e-12 past sigma_max
    const double sigma_max = std::pow(-std::log(1e-12), s.s);
    std::vector<double> sn, sw;
    {
        std::vector<double> gx, gw;
        // Gauss-Legendre via the shared routine in fractional.cpp is not
        // exposed; a local Chebyshev-like Newton copy is small enough.
        gx.resize(gl_order);
        gw.resize(gl_order);
        for (int i = 0; i < gl_order; ++i) {
            double xi = std::cos(M_PI * (i + 0.75) / (gl_order + 0.5));
            double p0 = 1.0, p1 = xi, dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = xi;
                for (int k = 2; k <= gl_order; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = gl_order * (xi * p1 - p0) / (xi * xi - 1.0);
                const double dx = p1 / dp;
                xi -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            gx[i] = xi;
            gw[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
        // graded panels toward sigma = 0 where sigma^{1/s} can have a kink
        for (int p = 0; p < panels; ++p) {
            const double a = sigma_max * sq(static_cast<double>(p) / panels);
            const double b = sigma_max * sq(static_cast<double>(p + 1) / panels);
            for (int k = 0; k < gl_order; ++k) {
                sn.push_back(0.5 * (a + b) + 0.5 * (b - a) * gx[k]);
                sw.push_back(0.5 * (b - a) * gw[k]);
            }
        }
    }

    ExtensionField out;
    out.grid = grid;
    const int nx = grid.base.size();
    const int nzc = static_cast<int>(grid.z.size());
    out.U.resize(nx, nzc);
    out.U.col(0) = u.values;  // exact trace row

    const double norm = 1.0 / (s.s * gamma_fn(s.s));
    par::parallel_for(static_cast<std::size_t>(nzc - 1), [&](std::size_t jz) {
        const int j = static_cast<int>(jz) + 1;
        const double z = grid.z[j];
        const double c = s.s * s.s * std::pow(z, 1.0 / s.s);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(nx);
        Eigen::VectorXd state(nx);
        for (std::size_t k = 0; k < sn.size(); ++k) {
            const double sigma = sn[k];
            if (sigma <= 0.0) continue;
            const double t = c / std::pow(sigma, 1.0 / s.s);
            table.eval(t, state);
            acc += (sw[k] * std::exp(-std::pow(sigma, 1.0 / s.s))) * state;
        }
        out.U.col(j) = norm * acc;
    });
    return out;
}

XZField solve_degenerate(const DegenerateProblem& prob) {
    const XZGrid& g = prob.grid;
    const SParam s(prob.s);
    const int nx = g.nx(), nz = g.nz();
    require(static_cast<int>(prob.ax.size()) == nx, "solve_degenerate: ax size mismatch");
    const int N = nx * nz;
    auto id = [&](int i, int j) { return i * nz + j; };
    const double hx = g.dx();
    const int j0 = g.z0_index();

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    trip.reserve(static_cast<std::size_t>(N) * 5);

    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nz; ++j) {
            const int row = id(i, j);
            const bool lateral = (i == 0 || i == nx - 1);
            const bool z_edge = (j == 0 || j == nz - 1);
            if (j == j0 && !lateral) {
                if (prob.bottom == DegenerateProblem::BottomMode::dirichlet) {
                    trip.emplace_back(row, row, 1.0);
                    rhs[row] = prob.bottom_data[i];
                    continue;
                }
                // one-sided Neumann row: (U(x,0) - U(x,z_{j0+1}))/dz = f
                const double dz = g.z[j0 + 1] - g.z[j0];
                trip.emplace_back(row, row, 1.0 / dz);
                trip.emplace_back(row, id(i, j0 + 1), -1.0 / dz);
                rhs[row] = prob.bottom_data[i];
                continue;
            }
            if (lateral || z_edge) {
                trip.emplace_back(row, row, 1.0);
                rhs[row] = prob.boundary ? prob.boundary(g.x[i], g.z[j]) : 0.0;
                continue;
            }
            const double zc = z_coefficient(s, g.z[j]);
            const double dzm = g.z[j] - g.z[j - 1];
            const double dzp = g.z[j + 1] - g.z[j];
            const double cm = 2.0 / (dzm * (dzm + dzp));
            const double cp = 2.0 / (dzp * (dzm + dzp));
            const double a = prob.ax[i];
            // row scaling keeps the pivot magnitudes comparable across the
            // strongly graded mesh
            const double scale = 1.0 / (2.0 * a / (hx * hx) + zc * (cm + cp));
            trip.emplace_back(row, id(i - 1, j), scale * a / (hx * hx));
            trip.emplace_back(row, id(i + 1, j), scale * a / (hx * hx));
            trip.emplace_back(row, id(i, j - 1), scale * zc * cm);
            trip.emplace_back(row, id(i, j + 1), scale * zc * cp);
            trip.emplace_back(row, row, -1.0);
            rhs[row] = prob.source ? -scale * prob.source(g.x[i], g.z[j]) : 0.0;
        }
    }

    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw numerical_error("solve_degenerate: factorization failed");
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw numerical_error("solve_degenerate: solve failed");

    XZField out(g);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nz; ++j) out.at(i, j) = sol[id(i, j)];
    return out;
}

double degenerate_residual(const XZField& U, SParam s, const Eigen::VectorXd& ax, int i, int j) {
    const XZGrid& g = U.grid;
    require(i > 0 && i < g.nx() - 1 && j > 0 && j < g.nz() - 1,
            "degenerate_residual: interior node required");
    require(g.z[j] != 0.0, "degenerate_residual: z = 0 row carries no interior equation");
    const double hx = g.dx();
    const double uxx = (U.at(i + 1, j) - 2.0 * U.at(i, j) + U.at(i - 1, j)) / (hx * hx);
    const double dzm = g.z[j] - g.z[j - 1];
    const double dzp = g.z[j + 1] - g.z[j];
    const double uzz = 2.0 * (U.at(i, j - 1) / (dzm * (dzm + dzp)) - U.at(i, j) / (dzm * dzp) +
                              U.at(i, j + 1) / (dzp * (dzm + dzp)));
    return ax[i] * uxx + z_coefficient(s, g.z[j]) * uzz;
}

ExtensionField extend_via_pde(const CoeffField& coeffs, const GridFunction& u, SParam s,
                              const ExtensionGrid& grid) {
    require(grid.base.dim == 1, "extend_via_pde: 1-D base domains only");
    require(u.grid.same_as(grid.base), "extend_via_pde: grid mismatch");
    require(u.is_dirichlet(1e-14 * (1.0 + u.sup_norm())),
            "extend_via_pde: u must vanish on the lateral boundary");

    DegenerateProblem prob;
    prob.s = s.s;
    prob.grid.x.resize(grid.base.n[0]);
    for (int i = 0; i < grid.base.n[0]; ++i) prob.grid.x[i] = grid.base.coord(0, i);
    prob.grid.z = grid.z;
    prob.ax = coeffs.a11;
    prob.bottom = DegenerateProblem::BottomMode::dirichlet;
    prob.bottom_data = u.values;
    prob.boundary = [](double, double) { return 0.0; };

    XZField sol = solve_degenerate(prob);

    ExtensionField out;
    out.grid = grid;
    out.U = sol.v;
    // flag insufficient truncation height
    const double top = out.level_norm(static_cast<int>(grid.z.size()) - 1);
    if (top > 1e-3 * u.sup_norm())
        throw numerical_error("extend_via_pde: Z_max too small, top row carries mass");
    return out;
}

Eigen::VectorXd neumann_trace(const ExtensionField& field, SParam s) {
    const auto& z = field.grid.z;
    require(z.size() >= 3, "neumann_trace: need at least two off-trace levels");
    const double z1 = z[1], z2 = z[2];
    const double e = 1.0 / s.s - 1.0;
    const double w1 = std::pow(z1, e), w2 = std::pow(z2, e);
    const int nx = static_cast<int>(field.U.rows());
    Eigen::VectorXd trace(nx);
    for (int i = 0; i < nx; ++i) {
        const double d1 = (field.U(i, 1) - field.U(i, 0)) / z1;
        const double d2 = (field.U(i, 2) - field.U(i, 0)) / z2;
        const double b = (d1 * w2 - d2 * w1) / (w2 - w1);
        trace[i] = -b;
    }
    trace[0] = 0.0;
    trace[nx - 1] = 0.0;
    return trace;
}

XZField even_reflection(const ExtensionField& field) {
    const int nx = static_cast<int>(field.U.rows());
    const int m = static_cast<int>(field.grid.z.size());
    require(field.grid.z[0] == 0.0, "even_reflection: z grid must start at 0");
    XZGrid g;
    g.x.resize(nx);
    for (int i = 0; i < nx; ++i) g.x[i] = field.grid.base.coord(0, i);
    g.z.resize(2 * m - 1);
    for (int j = 0; j < m; ++j) {
        g.z[m - 1 + j] = field.grid.z[j];
        g.z[m - 1 - j] = -field.grid.z[j];
    }
    XZField out(g);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < m; ++j) {
            out.at(i, m - 1 + j) = field.U(i, j);
            out.at(i, m - 1 - j) = field.U(i, j);
        }
    return out;
}

RecastReport recast_check(const ExtensionField& field, SParam s, const CoeffField& coeffs) {
    require(field.grid.base.dim == 1, "recast_check: 1-D base");
    RecastReport rep;
    rep.ratio_min = std::numeric_limits<double>::infinity();
    rep.ratio_max = 0.0;
    const int nx = static_cast<int>(field.U.rows());
    const int nz = static_cast<int>(field.grid.z.size());
    XZField U;
    U.grid.x.resize(nx);
    for (int i = 0; i < nx; ++i) U.grid.x[i] = field.grid.base.coord(0, i);
    U.grid.z = field.grid.z;
    U.v = field.U;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nx);
    for (int i = 1; i < nx - 1; ++i) {
        for (int j = 1; j < nz - 1; ++j) {
            if (U.grid.z[j] == 0.0) continue;
            const double r_id = degenerate_residual(U, s, ones, i, j);
            const double r_gen = degenerate_residual(U, s, coeffs.a11, i, j);
            rep.max_residual_identity = std::max(rep.max_residual_identity, std::abs(r_id - r_gen));
            // x-parts: a uxx vs uxx
            const double hx = U.grid.dx();
            const double uxx = (U.at(i + 1, j) - 2.0 * U.at(i, j) + U.at(i - 1, j)) / (hx * hx);
            if (std::abs(uxx) > 1e-12) {
                const double ratio = (coeffs.a11[i] * uxx) / uxx;
                rep.ratio_min = std::min(rep.ratio_min, ratio);
                rep.ratio_max = std::max(rep.ratio_max, ratio);
            }
        }
    }
    if (!std::isfinite(rep.ratio_min)) rep.ratio_min = rep.ratio_max = 1.0;
    return rep;
}

}  // namespace frac
