#include "frac/elliptic.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <iostream>

namespace frac {

Operator assemble_L(const GridSpec& grid, const CoeffField& coeffs) {
    require(grid.same_as(coeffs.grid), "assemble_L: coefficient grid mismatch");
    CoeffField c = coeffs;
    c.certify();  // throws naming the offending node on an ellipticity failure

    Operator op;
    op.grid = grid;
    op.lambda = c.lambda;
    op.Lambda = c.Lambda;

    const int N = grid.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * (grid.dim == 1 ? 3 : 9));

    const double hx = grid.h(0);
    const double hy = grid.dim == 2 ? grid.h(1) : 1.0;
    bool m_matrix = true;
    double max_diag = 1.0;

    for (int i = 0; i < grid.n[0]; ++i) {
        for (int j = 0; j < grid.n[1]; ++j) {
            const int row = grid.idx(i, j);
            if (grid.is_boundary(i, j)) {
                trip.emplace_back(row, row, 1.0);
                continue;
            }
            const double a11 = c.a11[row];
            double diag = 2.0 * a11 / (hx * hx);
            trip.emplace_back(row, grid.idx(i - 1, j), -a11 / (hx * hx));
            trip.emplace_back(row, grid.idx(i + 1, j), -a11 / (hx * hx));
            if (grid.dim == 2) {
                const double a22 = c.a22[row];
                const double a12 = c.a12[row];
                diag += 2.0 * a22 / (hy * hy);
                trip.emplace_back(row, grid.idx(i, j - 1), -a22 / (hy * hy));
                trip.emplace_back(row, grid.idx(i, j + 1), -a22 / (hy * hy));
                if (a12 != 0.0) {
                    // 4-corner cross stencil for -2 a12 d_xy
                    const double w = a12 / (2.0 * hx * hy);
                    trip.emplace_back(row, grid.idx(i + 1, j + 1), -w);
                    trip.emplace_back(row, grid.idx(i - 1, j - 1), -w);
                    trip.emplace_back(row, grid.idx(i + 1, j - 1), w);
                    trip.emplace_back(row, grid.idx(i - 1, j + 1), w);
                    m_matrix = false;
                }
            }
            trip.emplace_back(row, row, diag);
            max_diag = std::max(max_diag, diag);
        }
    }
    op.L.resize(N, N);
    op.L.setFromTriplets(trip.begin(), trip.end());
    op.L.makeCompressed();
    op.m_matrix = m_matrix;
    op.max_diag = max_diag;
    if (!m_matrix)
        std::cerr << "assemble_L: warning: mixed-derivative stencil is not an M-matrix; "
                     "the discrete comparison principle may fail at this resolution\n";
    return op;
}

namespace {

struct LegStepper {
    // One factorization per leg; CN reuses the same LHS as implicit Euler
    // half-steps, so the Rannacher startup shares it.
    Eigen::SparseMatrix<double> A_minus;  // I - dt/2 L  (CN only)
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Scheme scheme;
    double dt;

    LegStepper(const Operator& op, double dt_, Scheme scheme_) : scheme(scheme_), dt(dt_) {
        const int N = op.grid.size();
        Eigen::SparseMatrix<double> I(N, N);
        I.setIdentity();
        if (scheme == Scheme::crank_nicolson) {
            Eigen::SparseMatrix<double> A_plus = I + (0.5 * dt) * op.L;
            A_minus = I - (0.5 * dt) * op.L;
            lu.compute(A_plus);
        } else {
            Eigen::SparseMatrix<double> A_plus = I + dt * op.L;
            lu.compute(A_plus);
        }
        if (lu.info() != Eigen::Success)
            throw numerical_error("heat step: sparse factorization failed");
    }

    void step(Eigen::VectorXd& u) const {
        if (scheme == Scheme::crank_nicolson) {
            const Eigen::VectorXd rhs = A_minus * u;  // materialize before the solve
            u = lu.solve(rhs);
        } else {
            u = lu.solve(u);
        }
        if (lu.info() != Eigen::Success)
            throw numerical_error("heat step: linear solve failed");
    }

    /// Two implicit-Euler half-steps covering one dt (Rannacher smoothing).
    void rannacher_step(const Operator& op, Eigen::VectorXd& u) const {
        const int N = op.grid.size();
        Eigen::SparseMatrix<double> I(N, N);
        I.setIdentity();
        Eigen::SparseMatrix<double> A = I + (0.5 * dt) * op.L;
        Eigen::SparseLU<Eigen::SparseMatrix<double>> half;
        half.compute(A);
        if (half.info() != Eigen::Success)
            throw numerical_error("heat step: startup factorization failed");
        u = half.solve(u);
        u = half.solve(u);
        if (half.info() != Eigen::Success)
            throw numerical_error("heat step: startup solve failed");
    }
};

double allowed_dt(const Operator& op, const EvolveOptions& opt, double t_leg_end) {
    double dt = opt.rel_step * t_leg_end;
    if (opt.monotone_cap && opt.scheme == Scheme::crank_nicolson)
        dt = std::min(dt, opt.cap_fraction * 2.0 / op.max_diag);
    return std::max(dt, 1e-300);
}

}  // namespace

std::vector<Eigen::VectorXd> heat_sample(const Operator& op, const Eigen::VectorXd& u0,
                                         const std::vector<double>& ts,
                                         const EvolveOptions& opt) {
    require(static_cast<int>(u0.size()) == op.grid.size(), "heat_sample: size mismatch");
    for (std::size_t k = 1; k < ts.size(); ++k)
        require(ts[k] >= ts[k - 1], "heat_sample: times must be sorted");

    std::vector<Eigen::VectorXd> out;
    out.reserve(ts.size());
    Eigen::VectorXd state = u0;
    double t = 0.0;
    bool first_step = true;
    for (double target : ts) {
        require(target >= 0.0, "heat_sample: negative time");
        if (target > t) {
            const double dt_max = allowed_dt(op, opt, target);
            const long m = std::max(1L, static_cast<long>(std::ceil((target - t) / dt_max)));
            const double dt = (target - t) / static_cast<double>(m);
            LegStepper leg(op, dt, opt.scheme);
            for (long k = 0; k < m; ++k) {
                if (first_step && opt.scheme == Scheme::crank_nicolson) {
                    leg.rannacher_step(op, state);
                    first_step = false;
                } else {
                    leg.step(state);
                    first_step = false;
                }
            }
            t = target;
        }
        out.push_back(state);
    }
    return out;
}

GridFunction heat_evolve(const Operator& op, const GridFunction& u0, double t,
                         const EvolveOptions& opt) {
    require(t >= 0.0, "heat_evolve: t >= 0");
    require(u0.grid.same_as(op.grid), "heat_evolve: grid mismatch");
    GridFunction out = u0;
    if (t == 0.0) return out;
    out.values = heat_sample(op, u0.values, {t}, opt).back();
    return out;
}

HeatSession::HeatSession(const Operator& op, Eigen::VectorXd u0, EvolveOptions opt)
    : op_(op), u0_(std::move(u0)), opt_(opt), state_(u0_) {}

const Eigen::VectorXd& HeatSession::advance_to(double t) {
    require(t >= 0.0, "HeatSession: t >= 0");
    if (t < t_) {
        // restart from the nearest checkpoint at or below t
        state_ = u0_;
        t_ = 0.0;
        for (const auto& [ct, cs] : checkpoints_) {
            if (ct <= t && ct > t_) {
                t_ = ct;
                state_ = cs;
            }
        }
    }
    if (t > t_) {
        std::vector<double> targets;
        // lay down geometric checkpoints t_k = t_min 2^k on the way
        const double t_min = 1e-4;
        double ck = t_min;
        while (ck <= t_) ck *= 2.0;
        for (; ck < t; ck *= 2.0) targets.push_back(ck);
        targets.push_back(t);

        Eigen::VectorXd state = state_;
        double cur = t_;
        for (double target : targets) {
            const double dt_max = allowed_dt(op_, opt_, target);
            const long m = std::max(1L, static_cast<long>(std::ceil((target - cur) / dt_max)));
            const double dt = (target - cur) / static_cast<double>(m);
            LegStepper leg(op_, dt, opt_.scheme);
            for (long k = 0; k < m; ++k) {
                if (cur == 0.0 && k == 0 && opt_.scheme == Scheme::crank_nicolson)
                    leg.rannacher_step(op_, state);
                else
                    leg.step(state);
            }
            cur = target;
            if (target < t) checkpoints_.emplace_back(target, state);
        }
        state_ = state;
        t_ = t;
    }
    return state_;
}

namespace {

void check_constant_diagonal(const CoeffField& c, double& ax, double& ay) {
    ax = c.a11[0];
    ay = c.grid.dim == 2 ? c.a22[0] : 0.0;
    for (int k = 0; k < c.grid.size(); ++k) {
        const bool ok = c.a11[k] == ax && (c.grid.dim == 1 || (c.a22[k] == ay && c.a12[k] == 0.0));
        if (!ok)
            throw numerical_error("spectral path requires constant diagonal coefficients");
    }
}

// Dirichlet sine coefficients along one axis, direct O(N^2) transform.
void dst_axis(Eigen::VectorXd& v, int n0, int n1, int axis, bool forward) {
    const int n = axis == 0 ? n0 : n1;
    const int m = n - 1;  // modes 1..m-1
    const int other = axis == 0 ? n1 : n0;
    Eigen::VectorXd line(n), out(n);
    for (int o = 0; o < other; ++o) {
        for (int i = 0; i < n; ++i) line[i] = v[axis == 0 ? i * n1 + o : o * n1 + i];
        out.setZero();
        for (int k = 1; k < m; ++k) {
            double acc = 0.0;
            for (int i = 1; i < m; ++i) acc += line[i] * std::sin(M_PI * i * k / m);
            out[k] = forward ? 2.0 / m * acc : acc;
        }
        if (!forward) {
            // inverse: same kernel, coefficients already scaled
            Eigen::VectorXd rec = Eigen::VectorXd::Zero(n);
            for (int i = 1; i < m; ++i) {
                double acc = 0.0;
                for (int k = 1; k < m; ++k) acc += line[k] * std::sin(M_PI * i * k / m);
                rec[i] = acc;
            }
            out = rec;
        }
        for (int i = 0; i < n; ++i) v[axis == 0 ? i * n1 + o : o * n1 + i] = out[i];
    }
}

}  // namespace

GridFunction spectral_semigroup(const CoeffField& coeffs, const GridFunction& u0, double t) {
    require(u0.grid.same_as(coeffs.grid), "spectral_semigroup: grid mismatch");
    double ax = 0, ay = 0;
    check_constant_diagonal(coeffs, ax, ay);
    const GridSpec& g = u0.grid;
    GridFunction out = u0;
    const double lx = g.hi[0] - g.lo[0];
    dst_axis(out.values, g.n[0], g.n[1], 0, true);
    if (g.dim == 2) dst_axis(out.values, g.n[0], g.n[1], 1, true);
    for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
            double lam = ax * sq(M_PI * i / lx);
            if (g.dim == 2) lam += ay * sq(M_PI * j / (g.hi[1] - g.lo[1]));
            out.values[g.idx(i, j)] *= std::exp(-lam * t);
        }
    }
    dst_axis(out.values, g.n[0], g.n[1], 0, false);
    if (g.dim == 2) dst_axis(out.values, g.n[0], g.n[1], 1, false);
    out.enforce_dirichlet();
    return out;
}

SemigroupDecayEstimate estimate_decay(const Operator& op,
                                      const std::vector<GridFunction>& probes,
                                      const EvolveOptions& opt) {
    require(!probes.empty(), "estimate_decay: empty probe set");
    SemigroupDecayEstimate est;
    double eps_min = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::pair<double, double>>> curves;  // (t, log norm ratio)
    for (const auto& u : probes) {
        const double n0 = u.sup_norm();
        require(n0 > 0.0, "estimate_decay: zero probe");
        // incremental geometric sampling with early stop once the probe has
        // decayed through ten decades
        std::vector<std::pair<double, double>> curve;
        Eigen::VectorXd state = u.values;
        double t = 0.0, t_next = 0.05;
        for (int k = 0; k < 60 && t_next < 200.0; ++k) {
            state = heat_sample(op, state, {t_next - t}, opt).back();
            t = t_next;
            t_next *= 1.3;
            const double nn = state.cwiseAbs().maxCoeff();
            if (nn <= 1e-10 * n0) break;
            curve.emplace_back(t, std::log(nn / n0));
        }
        require(curve.size() >= 4, "estimate_decay: probe decayed too fast to fit");
        // fit on the latter half, where the principal mode dominates
        const std::size_t lo = curve.size() / 2;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(curve.size() - lo);
        for (std::size_t k = lo; k < curve.size(); ++k) {
            sx += curve[k].first;
            sy += curve[k].second;
            sxx += curve[k].first * curve[k].first;
            sxy += curve[k].first * curve[k].second;
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        if (-slope > 0.0) eps_min = std::min(eps_min, -slope);
        curves.push_back(std::move(curve));
    }
    require(std::isfinite(eps_min) && eps_min > 0.0, "estimate_decay: no decay detected");
    est.eps = eps_min;
    double M = 1.0;
    for (const auto& curve : curves)
        for (const auto& [t, logr] : curve) M = std::max(M, std::exp(logr + est.eps * t));
    est.M = M;
    return est;
}

HeatKernelDiagnostic heat_kernel_column(const Operator& op, int x_index, double t,
                                        const EvolveOptions& opt) {
    require(t > 0.0, "heat_kernel_column: t > 0");
    require(op.grid.dim == 1, "heat_kernel_column: 1-D diagnostic");
    const GridSpec& g = op.grid;
    require(x_index > 0 && x_index < g.n[0] - 1, "heat_kernel_column: interior index required");
    GridFunction delta(g);
    delta.values[x_index] = 1.0 / g.h(0);  // unit discrete mass
    HeatKernelDiagnostic diag;
    diag.column = heat_evolve(op, delta, t, opt);
    diag.mass = diag.column.values.sum() * g.h(0);

    // envelope fit: log H = log C - c |x-y|^2 / t on the bulk of the column
    const double hmax = diag.column.sup_norm();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 1; i < g.n[0] - 1; ++i) {
        const double v = diag.column.values[i];
        if (v < 1e-6 * hmax) continue;
        const double d2 = sq(g.coord(0, i) - g.coord(0, x_index)) / t;
        sx += d2;
        sy += std::log(v);
        sxx += d2 * d2;
        sxy += d2 * std::log(v);
        ++m;
    }
    if (m >= 3) {
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        const double icept = (sy - slope * sx) / m;
        diag.gauss_c = -slope;
        diag.gauss_C = std::exp(icept);
    }
    return diag;
}

}  // namespace frac
