#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "frac/common.hpp"

namespace frac {

// ---------------------------------------------------------------------------
// The convex potential  Phi(x,z) = |x|^2/2 + s^2/(1-s) |z|^{1/s}  and the
// quasi-metric geometry it generates: distances delta, measures mu, sections,
// cubes, and the structural constants of that geometry.
// ---------------------------------------------------------------------------

/// h(z) = s^2/(1-s) |z|^{1/s}
double h_eval(SParam s, double z);

/// h'(z) = s/(1-s) |z|^{1/s-2} z, odd, continuous, strictly increasing.
double h_prime(SParam s, double z);

/// h''(z) = |z|^{1/s-2}. Throws at z = 0 when the exponent is negative
/// (s > 1/2, the singular regime).
double h_second(SParam s, double z);

/// Inverse of h'; bijection of the real line.
double h_prime_inv(SParam s, double w);

/// |z|^{2-1/s} = 1/h''(z), the degenerate/singular coefficient.
double z_coefficient(SParam s, double z);

/// q_s = ((1-s)/s^2)^s, so the 1-D section of h about 0 is (-q_s R^s, q_s R^s).
double q_s_const(SParam s);

enum class Potential { phi, h, Phi };

struct PointXZ {
    std::vector<double> x;
    double z = 0.0;

    PointXZ() = default;
    PointXZ(std::vector<double> x_, double z_) : x(std::move(x_)), z(z_) {}
    static PointXZ xz(double x_, double z_) { return PointXZ({x_}, z_); }
    int dim_x() const { return static_cast<int>(x.size()); }
};

/// delta_phi(x0,x) = |x - x0|^2 / 2
double delta_phi(std::span<const double> x0, std::span<const double> x1);

/// delta_h(z0,z) = h(z) - h(z0) - h'(z0)(z - z0)
double delta_h(SParam s, double z0, double z1);

/// delta_Phi = delta_phi + delta_h (separable)
double delta_Phi(SParam s, const PointXZ& p0, const PointXZ& p1);

/// Dispatch on the potential; for phi the points' x parts are used, for h the
/// z parts.
double delta(SParam s, Potential pot, const PointXZ& p0, const PointXZ& p1);

/// mu_h((a,b)) = h'(b) - h'(a), the closed-form Monge-Ampere measure of h.
double mu_h_interval(SParam s, double a, double b);

/// mu_Phi of an axis box: Lebesgue x-volume times mu_h of the z interval.
double mu_Phi_box(SParam s, std::span<const Interval> xbox, Interval zint);

/// Exact Euclidean radius of the phi-section: sqrt(2R).
double section_phi_radius(double R);

/// 1-D section of h about z0: the open interval (zL, zR) with
/// delta_h(z0, zL) = delta_h(z0, zR) = R, found by bracketed bisection.
Interval section_h(SParam s, double z0, double R, double tol_rel = 1e-12);

struct BoundingBox {
    std::vector<Interval> x;
    Interval z;
};

/// Tight bounding box of a section. For phi it is exact per coordinate, for
/// Phi it is the tensor product of the 1-D bounds (which contains S_R and is
/// contained in S_{(n+1)R}).
BoundingBox section_box(SParam s, Potential pot, const PointXZ& center, double R);

bool section_contains(SParam s, Potential pot, const PointXZ& center, double R,
                      const PointXZ& p);

struct CubeDesc {
    PointXZ center;
    double R = 0.0;
    std::vector<Interval> x_iv;  // per-coordinate 1-D sections
    Interval z_iv;

    bool contains_open(const PointXZ& p) const;
    bool contains_closed(const PointXZ& p) const;
};

/// Monge-Ampere cube: product of the 1-D sections per coordinate.
CubeDesc cube(SParam s, const PointXZ& center, double R);

bool cube_contains(const CubeDesc& q, const PointXZ& p);

/// mu_Phi of a section, by adaptive Simpson in the measure variable w = h'(z)
/// (the x slice is an exact ball volume). abs_tol is on the result.
double mu_Phi_section(SParam s, const PointXZ& center, double R, double abs_tol = 1e-9);

double mu_h_section(SParam s, double z0, double R);

/// Lebesgue measure of a section of Phi (same slice integral with plain dz).
double lebesgue_section(SParam s, const PointXZ& center, double R, double abs_tol = 1e-9);

// --- structural constants ---------------------------------------------------

struct GeometryConstants {
    int n = 1;            // x dimension
    double theta = 0.0;   // engulfing
    double K = 0.0;       // quasi-triangle
    double K_d = 0.0;     // doubling
    double q_s = 0.0;
    double K0 = 0.0;      // covering dilation, 2K^2 + 2K
    double eta = 0.0;     // localization shrink, 1/(K^2 (2 K K0 + 1))
    double K2_hat = 0.0;  // (2n+3) K
    double K3_hat = 0.0;  // theta^2 K2_hat
    double C0 = 0.0;      // section inclusion
    double p = 0.0;
};

/// Fills the derived constants from (K, theta); pure function.
GeometryConstants derived_constants(double K, double theta, int n);

// --- empirical constant estimators -------------------------------------------

struct SampleRegion {
    double x_half = 1.0;   // sample x coords in [-x_half, x_half]
    double z_half = 1.0;   // sample z in [-z_half, z_half]
    double r_lo = 1e-3;    // radius sweep, log-uniform
    double r_hi = 10.0;
};

struct EstimateResult {
    double value = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    // witnessing configuration: flattened point coordinates of the maximizer
    std::vector<double> witness;
};

/// Largest observed quasi-triangle ratio
///   delta(p1,p2) / (min(delta(p1,p3),delta(p3,p1)) + min(delta(p2,p3),delta(p3,p2)))
/// over N sampled triples (random plus structured near-degenerate families).
EstimateResult estimate_quasi_K(SParam s, int n, Potential pot, const SampleRegion& region,
                                std::size_t N, std::uint64_t seed);

/// Smallest theta making the engulfing property hold on N sampled
/// (center, R, x1 in S, y in S) configurations: max of delta(x1,y)/R.
EstimateResult estimate_engulfing_theta(SParam s, int n, Potential pot,
                                        const SampleRegion& region, std::size_t N,
                                        std::uint64_t seed);

struct ReverseDoublingResult {
    bool pass = false;
    double lhs = 0.0;       // mu(S_{r2})
    double rhs_unit = 0.0;  // (r2/r1)^{n+1} mu(S_{r1})
    double measured_Kd = 0.0;
};

/// Checks mu_Phi(S_{r2}) <= K_d (r2/r1)^{n+1} mu_Phi(S_{r1}).
ReverseDoublingResult reverse_doubling_check(SParam s, const PointXZ& center, double r1,
                                             double r2, double Kd_candidate);

/// Verifies S_{C0 (r2-r1)^p t}(x1,z1) subset S_{r2 t}(x0,z0) for sampled
/// boundary points of the inner section, for every (x1,z1) in `inner_centers`
/// (which must lie in S_{r1 t}(x0,z0)).
bool guti_inclusion_check(SParam s, double r1, double r2, double t, const PointXZ& outer_center,
                          std::span<const PointXZ> inner_centers, double C0, double p,
                          std::size_t boundary_samples, std::uint64_t seed);

/// delta(x0,x1) < delta(x0,x2) and delta(x1,x2) < delta(x0,x2) for scalars
/// x0 < x1 < x2 (1-D potentials only).
bool ordering_check(SParam s, Potential pot, double x0, double x1, double x2);

/// Vitali-type cover: returns a subfamily of cubes covering all input points
/// whose K0-shrunk cubes are pairwise disjoint (exact interval tests).
std::vector<CubeDesc> cube_cover(SParam s, std::span<const PointXZ> points,
                                 std::span<const double> radii, double K0);

// adaptive Simpson, used by the measure integrals; exposed for reuse
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 40);

}  // namespace frac
