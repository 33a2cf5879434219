#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "frac/grid.hpp"

namespace frac {

// ---------------------------------------------------------------------------
// Discrete L = -a^{ij}(x) d_ij on the grid, Dirichlet boundary, and the heat
// semigroup e^{-tL} it generates.
// ---------------------------------------------------------------------------

/// Assembled operator. Interior rows carry the (negated) central
/// second-difference stencil, cross terms the 4-corner stencil; boundary rows
/// are identity. `m_matrix` records whether off-diagonal signs keep the
/// discrete comparison principle (mixed coefficients can break it).
struct Operator {
    GridSpec grid;
    Eigen::SparseMatrix<double> L;
    bool m_matrix = true;
    double max_diag = 0.0;  // largest L_ii, sets the monotone time-step cap
    double lambda = 1.0;
    double Lambda = 1.0;

    Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return L * u; }
};

Operator assemble_L(const GridSpec& grid, const CoeffField& coeffs);

enum class Scheme {
    crank_nicolson,  // Rannacher startup + CN, step capped at the monotone threshold
    implicit_euler,
};

struct EvolveOptions {
    Scheme scheme = Scheme::crank_nicolson;
    double rel_step = 4e-3;       // accuracy-driven dt = rel_step * t
    double cap_fraction = 0.9;    // fraction of the monotone cap 2/max_diag
    bool monotone_cap = true;     // keep steps below the cap (exact maximum principle)
};

/// Evolves u0 through the sorted times `ts` in one sweep and returns the state
/// at each of them. This is the workhorse behind every semigroup quadrature:
/// the t nodes span several decades and a single pass visits them all.
std::vector<Eigen::VectorXd> heat_sample(const Operator& op, const Eigen::VectorXd& u0,
                                         const std::vector<double>& ts,
                                         const EvolveOptions& opt = {});

/// e^{-tL} u0. Repeated queries on the same data should prefer HeatSession.
GridFunction heat_evolve(const Operator& op, const GridFunction& u0, double t,
                         const EvolveOptions& opt = {});

/// Session with geometric checkpoints t_k = t_min 2^k: advancing to a time
/// before the current one restarts from the nearest checkpoint instead of
/// re-evolving from zero.
class HeatSession {
  public:
    HeatSession(const Operator& op, Eigen::VectorXd u0, EvolveOptions opt = {});
    const Eigen::VectorXd& advance_to(double t);
    double time() const { return t_; }

  private:
    const Operator& op_;
    Eigen::VectorXd u0_;
    EvolveOptions opt_;
    Eigen::VectorXd state_;
    double t_ = 0.0;
    std::vector<std::pair<double, Eigen::VectorXd>> checkpoints_;
};

/// Exact sine-series evolution; constant diagonal coefficients on a box only.
GridFunction spectral_semigroup(const CoeffField& coeffs, const GridFunction& u0, double t);

struct SemigroupDecayEstimate {
    double M = 1.0;
    double eps = 0.0;
};

/// Least-squares fit of log ||e^{-tL}u||_inf over a t-grid, across a probe
/// set; M is inflated so the bound holds on every sample.
SemigroupDecayEstimate estimate_decay(const Operator& op,
                                      const std::vector<GridFunction>& probes,
                                      const EvolveOptions& opt = {});

struct HeatKernelDiagnostic {
    GridFunction column;
    double mass = 0.0;        // integral of the column (<= 1 for Dirichlet loss)
    double gauss_C = 0.0;     // fitted envelope C exp(-c |x-y|^2 / t)
    double gauss_c = 0.0;
};

HeatKernelDiagnostic heat_kernel_column(const Operator& op, int x_index, double t,
                                        const EvolveOptions& opt = {});

}  // namespace frac
