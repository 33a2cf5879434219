#pragma once

#include <functional>

#include "frac/fractional.hpp"
#include "frac/xzfield.hpp"

namespace frac {

// ---------------------------------------------------------------------------
// The degenerate extension problem
//   a^{ij}(x) d_ij U + z^{2-1/s} d_zz U = 0,  U(x,0) = u(x),
// solved two independent ways, and the Neumann trace -d_{z+}U(x,0) that
// recovers d_s L^s u.
// ---------------------------------------------------------------------------

/// d_s = s^{2s} Gamma(1-s) / Gamma(1+s); equals 1 at s = 1/2.
double d_s_const(SParam s);

/// c_s = Gamma(1-s) / (4^{s-1/2} Gamma(s)).
double c_s_const(SParam s);

struct ExtensionGrid {
    GridSpec base;          // PDE path supports 1-D bases
    std::vector<double> z;  // 0 = z_0 < ... < z_M = Z_max, graded
    double grading = 2.0;

    /// z_j = Z_max (j/M)^g with g = max(2, 1/s): uniform in the y-variable
    /// of the Bessel form of the problem.
    static ExtensionGrid graded(const GridSpec& base, SParam s, double z_max, int m_nodes);

    /// Z_max so that the decay envelope e^{-sqrt(eps) y(z)} drops below
    /// trunc_tol.
    static double default_zmax(SParam s, const SemigroupDecayEstimate& decay,
                               double trunc_tol = 1e-5);
};

struct ExtensionField {
    ExtensionGrid grid;
    Eigen::MatrixXd U;  // base.size() x z-count

    Eigen::VectorXd trace0() const { return U.col(0); }
    double sup_norm() const { return U.cwiseAbs().maxCoeff(); }
    /// max over x of |U(x, z_j)|
    double level_norm(int j) const { return U.col(j).cwiseAbs().maxCoeff(); }
};

/// Quadrature of the closed-form representation: per z level,
///   U(x,z) = 1/(s Gamma(s)) int_0^inf e^{-sigma^{1/s}} v(c(z)/sigma^{1/s}) dsigma,
/// c(z) = s^2 z^{1/s}, with v the semigroup orbit of u. The z = 0 row is set
/// to u exactly.
ExtensionField extend_via_quadrature(const FracContext& ctx, const GridFunction& u,
                                     const ExtensionGrid& grid, int panels = 32,
                                     int gl_order = 8);

/// Direct sparse solve of the degenerate PDE with Dirichlet data u at z = 0,
/// zero lateral and top data. 1-D base only.
ExtensionField extend_via_pde(const CoeffField& coeffs, const GridFunction& u, SParam s,
                              const ExtensionGrid& grid);

/// One-sided difference -(U(x,z1) - U(x,0))/z1 with one Richardson step using
/// z2. The correction exponent 1/s - 1 is the one the degenerate equation
/// dictates for the first non-linear term of U in z.
Eigen::VectorXd neumann_trace(const ExtensionField& field, SParam s);

enum class ChangeDir { y_to_z, z_to_y };

/// z = (y/(2s))^{2s} and its inverse.
double change_of_variables(ChangeDir dir, double value, SParam s);

/// Even reflection U(x,|z|) onto a symmetric z grid.
XZField even_reflection(const ExtensionField& field);

struct RecastReport {
    double max_residual_identity = 0.0;  // |traced form - extension form|, a = I
    double ratio_min = 0.0;              // x-part ratios for general coefficients
    double ratio_max = 0.0;
};

RecastReport recast_check(const ExtensionField& field, SParam s, const CoeffField& coeffs);

// --- degenerate solver on a general (x,z) box (shared with the experiments) --

struct DegenerateProblem {
    XZGrid grid;
    double s = 0.5;
    Eigen::VectorXd ax;  // a(x) per x node
    enum class BottomMode { dirichlet, neumann };
    BottomMode bottom = BottomMode::dirichlet;   // only used when z.front() == 0
    Eigen::VectorXd bottom_data;                 // u(x) or f(x) per x node
    std::function<double(double, double)> boundary;  // Dirichlet on the other edges
    std::function<double(double, double)> source;    // a u_xx + zc u_zz = -source
};

XZField solve_degenerate(const DegenerateProblem& prob);

/// Stencil residual of the interior equation at (i,j); z_j != 0.
double degenerate_residual(const XZField& U, SParam s, const Eigen::VectorXd& ax, int i, int j);

}  // namespace frac
