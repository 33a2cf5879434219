#pragma once

#include <optional>
#include <vector>

#include "frac/elliptic.hpp"

namespace frac {

// ---------------------------------------------------------------------------
// L^s and L^{-s} by quadrature of the semigroup formulas
//   L^s u    = 1/Gamma(-s) int_0^inf (e^{-tL}u - u) t^{-1-s} dt
//   L^{-s} f = 1/Gamma(s)  int_0^inf  e^{-tL}f      t^{s-1}  dt
// ---------------------------------------------------------------------------

/// Gamma on (-1,0) u (0,2); sign of Gamma(-s) < 0 is what multiplies the
/// forward integral.
double gamma_fn(double x);

struct QuadOptions {
    double t_min = 1e-4;     // below: second-order series in tL
    double t_max = 0.0;      // 0 = automatic from decay + scalar self-test floor
    int panels = 40;         // log-t Gauss-Legendre panels between t_min and t_max
    int gl_order = 8;
    double quad_tol = 1e-6;
    double selftest_tol = 1e-4;
};

/// Nodes and weights of the split rule. The middle part integrates against
/// t^{-1-s} dt (forward) or t^{s-1} dt (inverse); the near field is the
/// two-term expansion of e^{-tL}-1 on (0,t_min]; the forward tail carries the
/// exact integral of the -u term past t_max.
struct BalakrishnanQuad {
    double s = 0.5;
    double t_min = 0.0, t_max = 0.0;
    std::vector<double> nodes;
    std::vector<double> w_fwd;   // weights including t^{-1-s}
    std::vector<double> w_inv;   // weights including t^{s-1}
    // forward near field: integral ~ -c1 (Lu) + c2 (L^2 u); tail: -u * tail_u
    double c1 = 0.0, c2 = 0.0, tail_u = 0.0;
    // inverse near field: d0 f - d1 (Lf) + d2 (L^2 f)
    double d0 = 0.0, d1 = 0.0, d2 = 0.0;

    /// Applies the forward rule to the scalar semigroup e^{-t lam}; exact
    /// value is Gamma(-s) lam^s.
    double scalar_forward(double lam) const;
    double scalar_inverse(double lam) const;

    /// Max relative defect over lam in {1,10,100} against the closed forms.
    double selftest_defect() const;
};

BalakrishnanQuad make_quadrature(SParam s, const QuadOptions& opt = {},
                                 std::optional<SemigroupDecayEstimate> decay = std::nullopt);

/// Sampled semigroup orbit of one grid function, plus the pieces needed to
/// evaluate e^{-tL}u at arbitrary t: series below t_min, cubic interpolation
/// in log t on the sampled range, exponential-envelope decay past t_max.
class SemigroupTable {
  public:
    SemigroupTable(const Operator& op, const Eigen::VectorXd& u,
                   const std::vector<double>& ts, SemigroupDecayEstimate decay,
                   const EvolveOptions& eopt);

    void eval(double t, Eigen::VectorXd& out) const;
    const std::vector<double>& times() const { return ts_; }
    const std::vector<Eigen::VectorXd>& states() const { return states_; }
    const Eigen::VectorXd& u() const { return u_; }
    const Eigen::VectorXd& Lu() const { return Lu_; }
    const Eigen::VectorXd& LLu() const { return LLu_; }

  private:
    std::vector<double> ts_;  // log-spaced ascending
    std::vector<Eigen::VectorXd> states_;
    Eigen::VectorXd u_, Lu_, LLu_;
    SemigroupDecayEstimate decay_;
    double log_lo_ = 0.0, dlog_ = 0.0;
};

struct FracContext {
    const Operator& op;
    BalakrishnanQuad quad;
    SemigroupDecayEstimate decay;
    EvolveOptions evolve;
};

/// Builds quadrature + decay estimate for an assembled operator. The decay is
/// measured on a default probe unless supplied.
FracContext make_context(const Operator& op, SParam s, const QuadOptions& qopt = {},
                         const EvolveOptions& eopt = {});

/// L^s u. Requires u in the discrete C_0 space; throws if the scalar
/// quadrature self-test fails at construction.
GridFunction apply_Ls(const FracContext& ctx, const GridFunction& u);

/// L^{-s} f.
GridFunction apply_L_minus_s(const FracContext& ctx, const GridFunction& f);

struct PoissonResult {
    GridFunction u;
    double residual_rel = 0.0;  // ||L^s u - f||_inf / ||f||_inf
    bool flagged = false;
};

PoissonResult solve_poisson(const FracContext& ctx, const GridFunction& f,
                            double residual_bound = 0.05);

/// Oracle path: multiplies sine coefficients by (a |k pi / l|^2)^s. Constant
/// diagonal coefficients on a box only.
GridFunction spectral_Ls(const CoeffField& coeffs, const GridFunction& u, SParam s);

/// Explicit dense assembly of the discrete L^s kernel (small grids): returns
/// the matrix whose action matches apply_Ls. Diagnostic for the sign
/// structure of the nonlocal kernel.
Eigen::MatrixXd assemble_Ls_matrix(const FracContext& ctx);

}  // namespace frac
