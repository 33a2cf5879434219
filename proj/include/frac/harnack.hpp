#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "frac/extension.hpp"
#include "frac/paraboloid.hpp"

namespace frac {

// ---------------------------------------------------------------------------
// Barriers on partial rings, the detachment / localization / covering
// experiments, and the empirical Harnack and Hoelder measurements.
// ---------------------------------------------------------------------------

/// Q(z) = (h'(z)-h'(z0))^2 / (delta_h(z0,z) h''(z)), z, z0 > 0, s <= 1/2.
/// Continuous through z0 with value 2; >= 1 on (0,inf).
double quotient_Q(SParam s, double z0, double z);

struct BarrierSpec {
    int case_id = 1;  // 1: z0>0, s<=1/2; 2: z0>=0, s>1/2; 3: z0=0, s<=1/2; 4: reflected
    double s = 0.5;
    double x0 = 0.0;
    double z0 = 0.0;  // case 4 takes z0 <= 0
    double r = 1.0;
    double gamma = 0.25;
};

/// Sampled table of the auxiliary convex corrector h_eps solving
/// h_eps'' = 2(n Lambda + 1) psi_eps h'' with h_eps(zR) = 0 and
/// h_eps'(zL) = eps mu_h(S_2r(z0)). Piecewise exact off the cutoff strip.
struct HepsTable {
    std::vector<double> z, val, prime;
    double band_lo = 0.0, band_hi = 0.0;  // psi transition strip
    double kappa = 0.0, eps = 0.0;

    double eval(double zq) const;
    double eval_prime(double zq) const;
    double max_abs() const;
};

/// Closed-form barrier phi = scale (D^{-alpha} - base), D = delta_Phi - corr(z),
/// with analytic first and second derivatives.
struct Barrier {
    BarrierSpec spec;
    double a = 1.0;
    double lambda = 1.0, Lambda = 1.0;
    int n = 1;
    double alpha = 0.0, scale = 0.0, base = 0.0;
    double Dmax = 0.0, corr_cap = 0.0;
    double eps = 0.0, eps0 = 0.0;     // case 2/3 auxiliaries
    double realized_C = 0.0;          // phi <= C a r on the inner boundary
    bool mirrored = false;            // case 4: evaluate through z -> -z
    HepsTable heps;                   // case 2
    double g_slope = 0.0, g_offset = 0.0;  // case 3

    double corr(double z) const;
    double corr_prime(double z) const;
    double corr_second(double z) const;
    double D(double x, double z) const;
    double eval(double x, double z) const;
    double dz(double x, double z) const;
    /// a11 phi_xx + |z|^{2-1/s} phi_zz at an interior point (z != 0 side).
    double lhs(double a11, double x, double z) const;
};

struct BarrierBuildResult {
    Barrier barrier;
    XZField phi;                 // sampled on the ring bounding box
    std::vector<char> ring_mask; // per node of phi.grid
};

/// Builds the case-dispatch barrier; throws naming the violated inequality if
/// the exponent/eps calibration cannot be satisfied.
BarrierBuildResult barrier_build(const BarrierSpec& spec, double a, double lambda,
                                 double Lambda, int nodes_x = 96, int nodes_z = 96);

struct BarrierVerifyReport {
    double min_lhs_excess = 0.0;    // min over ring nodes of lhs - a(nLambda+1)
    double min_inner_phi = 0.0;     // over [S_r \ S_{gamma r}]^pm
    double max_outer_phi = 0.0;     // over sampled boundary of S_2r
    double inner_bound_C = 0.0;     // max phi/(a r) on the sampled boundary of S_{gamma r}
    double min_neumann = 0.0;       // d_{z+} phi (x,0) where the ring meets the trace
    bool has_trace_nodes = false;
    int checked_nodes = 0;
    bool pass(double slack = 0.0) const {
        const bool neum = !has_trace_nodes || min_neumann > 0.0;
        return min_lhs_excess > slack && min_inner_phi > 0.0 && max_outer_phi <= 0.0 && neum;
    }
};

/// Exhaustive node checks of the barrier conclusions: differential inequality
/// with the actual coefficient samples, sign pattern, inner-boundary bound.
BarrierVerifyReport barrier_verify(const BarrierBuildResult& built,
                                   const std::function<double(double)>& a11_of_x);

struct DetachmentResult {
    double x2 = 0.0, z2 = 0.0;
    double gap = 0.0;        // U - P at (x2,z2)
    double gap_over_ar = 0.0;
    bool minimizer_on_outer = false;  // flags a resolution problem
};

/// Runs the comparison argument of the detachment estimate numerically:
/// minimizes (U - P) - phi over the partial ring and reports the touch gap on
/// the inner boundary side.
DetachmentResult detachment_experiment(const XZField& U, SParam s, const Paraboloid& P,
                                       int contact_i, int contact_j, const PointXZ& center,
                                       double r, double gamma,
                                       const std::function<double(double)>& a11_of_x,
                                       double lambda, double Lambda);

struct LocalizationResult {
    double ratio = 0.0;       // mu(A_{Ca,R} cap Q_{eta r}) / mu(Q_r)
    double mu_intersection = 0.0;
    double mu_Qr = 0.0;
    int n_small = 0, n_large = 0;
};

LocalizationResult localization_experiment(const XZField& U, SParam s, double a, double R,
                                           double C_enlarge, const GeometryConstants& geo,
                                           const PointXZ& center, const PointXZ& q_center,
                                           double r);

struct CoveringReport {
    std::vector<double> complement_measure;  // mu(Q_{R/K0} \ D_k)
    double fitted_rate = 0.0;                // geometric decay per step
    double c_observed = 0.0;
    bool rate_ok = false;
};

/// D(k) returns mu_Phi(D_k intersected with a given cube); sets must be
/// nested increasing.
CoveringReport covering_iteration(
    const std::function<double(int, const CubeDesc&)>& measure_Dk_in, int k_max, SParam s,
    const PointXZ& center, double R, const GeometryConstants& geo);

/// W_eps = aR U / (2 K0 U(center) + ||f|| R / mu_h(S_{K3 R}(z_center)) + eps);
/// the f term drops when the section misses {z=0}.
XZField normalize_W_eps(const XZField& U, SParam s, const Eigen::VectorXd& f_trace, double a,
                        double R, const GeometryConstants& geo, double eps, int center_i,
                        int center_j);

struct AbsorbResult {
    XZField V;
    Eigen::VectorXd g;
};

/// V = U - ||f|| |z| + ||f|| |S_{K1 R}(0)| >= U >= 0 and g = f + ||f|| >= 0.
AbsorbResult absorb_neumann_rhs(const XZField& U, SParam s, const Eigen::VectorXd& f_trace,
                                double K1_hat, double R);

// --- constants ledger --------------------------------------------------------

struct HarnackConstants {
    int n = 1;
    double K = 0, theta = 0, K_d = 0;
    double K0 = 0, eta = 0, K2_hat = 0, K3_hat = 0;
    double beta = 0;        // 1/(3 K0)
    double kappa2 = 0, kappa1 = 0, kappa0 = 0;
    double K1_hat = 0, K0_hat = 0;
    double kappa = 0, K_hat = 0;  // kappa = sqrt(kappa0), K_hat = sqrt(2 K0_hat)
    double C_enlarge = 0;   // opening growth per covering step
    double c_cover = 0;
    double c0 = 0;          // rho_k = c0 (1-c)^{k/(n+1)}
    int k0 = 0;

    double rho_k(int k) const;
    static double gamma_osc(double C_H) { return (C_H - 1.0) / (C_H + 1.0); }
    double mu_exponent(double C_H, double s) const;
    double alpha1(double C_H, double s) const;
    double alpha0(double C_H, double s) const { return 2.0 * alpha1(C_H, s); }
};

HarnackConstants harnack_constants(const GeometryConstants& geo, double K_d, double c_cover,
                                   double C_enlarge);

// --- experiments --------------------------------------------------------------

struct HarnackTrialConfig {
    double s = 0.5;
    int trials = 100;
    std::uint64_t seed = 1;
    double lambda = 1.0, Lambda = 2.0;
    int nx = 65;
    int nz = 40;           // extension mode z levels (half grid)
    double kappa0_eff = 0.25;  // desk-scale section ratio for the measurement
    double K0_hat_eff = 4.0;
    double R = 0.05;
};

struct HarnackTrial {
    std::uint64_t trial = 0;
    double C_H = 0.0;
    double sup = 0.0, inf = 0.0, rhs_term = 0.0;
    bool admissible = true;
};

struct HarnackSummary {
    std::vector<HarnackTrial> trials;
    double max_CH = 0.0;
    double p95_CH = 0.0;
    double alpha_fit = 0.0;  // oscillation-ladder exponent of the first trial
    int admissible = 0;
};

/// Core measurement on any symmetric field: sup/inf over the section
/// S_{kappa0 R}(center) against inf + ||f|| R^s.
HarnackTrial harnack_measure_extension(const XZField& U, SParam s, const PointXZ& center,
                                       double R, double kappa0_eff, double K0_hat_eff,
                                       const Eigen::VectorXd& f_trace);

HarnackSummary harnack_extension_experiment(const HarnackTrialConfig& cfg);

HarnackTrial harnack_measure_ls(const GridFunction& u, SParam s, double x_center, double R,
                                double kappa_eff, double K_hat_eff, double f_norm_ball);

HarnackSummary harnack_ls_experiment(const HarnackTrialConfig& cfg);

struct HolderFit {
    double alpha_fit = 0.0;
    double C_fit = 0.0;
    std::vector<double> radii, osc;
};

/// Oscillation ladder omega(r) = M(r) - m(r) over nested sections of an
/// extension field, log-log least squares; the exponent is clamped to (0,1].
HolderFit holder_fit(const XZField& U, SParam s, const PointXZ& center,
                     std::span<const double> radii);

/// Same ladder over Euclidean balls for a base-domain function.
HolderFit holder_fit_base(const GridFunction& u, double x_center, std::span<const double> radii);

}  // namespace frac
