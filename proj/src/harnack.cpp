#include "frac/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frac/parallel.hpp"
#include "frac/rng.hpp"

namespace frac {

double quotient_Q(SParam s, double z0, double z) {
    require(s.s <= 0.5, "quotient_Q: defined for s <= 1/2");
    require(z0 > 0.0 && z > 0.0, "quotient_Q: needs z, z0 > 0");
    if (std::abs(z - z0) <= 1e-9 * z0) return 2.0;  // continuity fill-in
    const double num = sq(h_prime(s, z) - h_prime(s, z0));
    const double den = delta_h(s, z0, z) * h_second(s, z);
    return num / den;
}

// --- h_eps table --------------------------------------------------------------

namespace {

double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// psi_eps in the z >= 0 chart: 1 on [0, band_lo], eps beyond band_hi, cubic
// transition in between. Empty band (band_hi <= band_lo) means psi == eps.
double psi_eval(double z, double band_lo, double band_hi, double eps) {
    if (band_hi <= band_lo) return eps;
    if (z <= band_lo) return 1.0;
    if (z >= band_hi) return eps;
    return eps + (1.0 - eps) * smoothstep((band_hi - z) / (band_hi - band_lo));
}

HepsTable build_heps(SParam s, double zL, double zR, double band_lo, double band_hi,
                     double eps, double kappa, double q0) {
    HepsTable tab;
    tab.band_lo = band_lo;
    tab.band_hi = band_hi;
    tab.kappa = kappa;
    tab.eps = eps;
    // mesh uniform in the measure coordinate w = h'(z): integrals of psi h''
    // become integrals of psi dw, which tames the h'' singularity at z = 0
    const int m = 2048;
    const double wL = h_prime(s, zL), wR = h_prime(s, zR);
    std::vector<double> w(m + 1);
    for (int k = 0; k <= m; ++k) w[k] = wL + (wR - wL) * k / m;
    for (double wknot : {h_prime(s, band_lo), h_prime(s, band_hi)}) {
        if (wknot > wL && wknot < wR) {
            auto it = std::lower_bound(w.begin(), w.end(), wknot);
            w.insert(it, wknot);
        }
    }
    const int n = static_cast<int>(w.size());
    tab.z.resize(n);
    tab.prime.resize(n);
    tab.val.resize(n);
    for (int k = 0; k < n; ++k) tab.z[k] = h_prime_inv(s, w[k]);
    tab.z.front() = zL;
    tab.z.back() = zR;

    // h_eps'(z) = q0 + kappa int_zL^z psi dmu_h, Simpson in w per interval
    double acc = 0.0;
    tab.prime[0] = q0;
    for (int k = 1; k < n; ++k) {
        const double wa = w[k - 1], wb = w[k];
        const double za = tab.z[k - 1], zb = tab.z[k];
        const double zm = h_prime_inv(s, 0.5 * (wa + wb));
        const double pa = psi_eval(za, band_lo, band_hi, eps);
        const double pm = psi_eval(zm, band_lo, band_hi, eps);
        const double pb = psi_eval(zb, band_lo, band_hi, eps);
        acc += (wb - wa) / 6.0 * (pa + 4.0 * pm + pb);
        tab.prime[k] = q0 + kappa * acc;
    }
    // h_eps(zR) = 0, cumulative trapezoid backwards
    tab.val[n - 1] = 0.0;
    for (int k = n - 2; k >= 0; --k) {
        const double dz = tab.z[k + 1] - tab.z[k];
        tab.val[k] = tab.val[k + 1] - 0.5 * dz * (tab.prime[k] + tab.prime[k + 1]);
    }
    return tab;
}

}  // namespace

double HepsTable::eval(double zq) const {
    if (z.empty()) return 0.0;
    if (zq <= z.front()) return val.front();
    if (zq >= z.back()) return val.back();
    const auto it = std::upper_bound(z.begin(), z.end(), zq);
    const std::size_t k = static_cast<std::size_t>(it - z.begin()) - 1;
    const double t = (zq - z[k]) / (z[k + 1] - z[k]);
    return val[k] + t * (val[k + 1] - val[k]);
}

double HepsTable::eval_prime(double zq) const {
    if (z.empty()) return 0.0;
    if (zq <= z.front()) return prime.front();
    if (zq >= z.back()) return prime.back();
    const auto it = std::upper_bound(z.begin(), z.end(), zq);
    const std::size_t k = static_cast<std::size_t>(it - z.begin()) - 1;
    const double t = (zq - z[k]) / (z[k + 1] - z[k]);
    return prime[k] + t * (prime[k + 1] - prime[k]);
}

double HepsTable::max_abs() const {
    double m = 0.0;
    for (double v : val) m = std::max(m, std::abs(v));
    return m;
}

// --- barrier ------------------------------------------------------------------

double Barrier::corr(double z) const {
    switch (spec.case_id) {
        case 2: return heps.eval(z);
        case 3: return g_slope * z + g_offset;
        default: return 0.0;
    }
}

double Barrier::corr_prime(double z) const {
    switch (spec.case_id) {
        case 2: return heps.eval_prime(z);
        case 3: return g_slope;
        default: return 0.0;
    }
}

double Barrier::corr_second(double z) const {
    if (spec.case_id != 2) return 0.0;
    const SParam sp(spec.s);
    return heps.kappa * psi_eval(z, heps.band_lo, heps.band_hi, heps.eps) * h_second(sp, z);
}

double Barrier::D(double x, double z) const {
    const SParam sp(spec.s);
    const double zz = mirrored ? -z : z;
    const double zc = mirrored ? -spec.z0 : spec.z0;
    return 0.5 * sq(x - spec.x0) + delta_h(sp, zc, zz) - corr(zz);
}

double Barrier::eval(double x, double z) const {
    return scale * (std::pow(D(x, z), -alpha) - base);
}

double Barrier::dz(double x, double z) const {
    const SParam sp(spec.s);
    const double zz = mirrored ? -z : z;
    const double zc = mirrored ? -spec.z0 : spec.z0;
    const double dD = h_prime(sp, zz) - h_prime(sp, zc) - corr_prime(zz);
    const double v = -scale * alpha * std::pow(D(x, z), -alpha - 1.0) * dD;
    return mirrored ? -v : v;
}

double Barrier::lhs(double a11, double x, double z) const {
    const SParam sp(spec.s);
    const double zz = mirrored ? -z : z;
    const double zc = mirrored ? -spec.z0 : spec.z0;
    require(zz != 0.0, "Barrier::lhs: interior points only");
    const double d = D(x, z);
    const double dx = x - spec.x0;
    const double dzD = h_prime(sp, zz) - h_prime(sp, zc) - corr_prime(zz);
    const double zcoef = z_coefficient(sp, zz);
    // zcoef * h'' = 1 away from z = 0
    const double second_term = a11 + 1.0 - zcoef * corr_second(zz);
    const double bracket = (alpha + 1.0) * (a11 * dx * dx + zcoef * dzD * dzD) - d * second_term;
    return scale * alpha * std::pow(d, -alpha - 2.0) * bracket;
}

namespace {

struct RingSample {
    double x, z;      // in the unmirrored (positive) chart
    double dphi, dh;  // split of delta
};

// structured samples of the closed ring [S_2r \ S_{gamma r}]^+ in the
// positive chart, plus the separate boundary families used by the sign checks
std::vector<RingSample> sample_ring(SParam s, double x0, double z0, double r, double gamma,
                                    int n_delta, int n_split) {
    std::vector<RingSample> out;
    out.reserve(static_cast<std::size_t>(n_delta) * n_split * 2);
    for (int a = 0; a < n_delta; ++a) {
        const double frac = static_cast<double>(a) / (n_delta - 1);
        const double d = gamma * r + (2.0 * r - gamma * r) * (0.01 + 0.98 * frac);
        for (int b = 0; b < n_split; ++b) {
            const double rho = static_cast<double>(b) / (n_split - 1);
            const double dphi = rho * d, dh = (1.0 - rho) * d;
            for (int side = 0; side < 2; ++side) {
                RingSample smp;
                smp.dphi = dphi;
                smp.dh = dh;
                smp.x = x0 + (side ? 1.0 : -1.0) * std::sqrt(2.0 * dphi);
                if (dh > 0.0) {
                    const Interval zi = section_h(s, z0, dh);
                    smp.z = side ? zi.hi : zi.lo;
                } else {
                    smp.z = z0;
                }
                if (smp.z < 0.0) continue;  // positive chart
                out.push_back(smp);
            }
        }
    }
    return out;
}

double boundary_max_phi(const Barrier& bar, SParam s, double x0, double z0, double r,
                        double radius, int n_samples) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int b = 0; b <= n_samples; ++b) {
        const double rho = static_cast<double>(b) / n_samples;
        const double dphi = rho * radius, dh = (1.0 - rho) * radius;
        for (int side = 0; side < 2; ++side) {
            double x = x0 + (side ? 1.0 : -1.0) * std::sqrt(2.0 * dphi);
            double z = z0;
            if (dh > 0.0) {
                const Interval zi = section_h(s, z0, dh);
                z = side ? zi.hi : zi.lo;
            }
            if (z < 0.0) continue;
            const double zq = bar.mirrored ? -z : z;
            worst = std::max(worst, bar.eval(bar.mirrored ? x : x, zq));
        }
    }
    (void)r;
    return worst;
}

}  // namespace

BarrierBuildResult barrier_build(const BarrierSpec& spec_in, double a, double lambda,
                                 double Lambda, int nodes_x, int nodes_z) {
    require(spec_in.gamma > 0.0 && spec_in.gamma < 1.0, "barrier_build: gamma in (0,1)");
    require(spec_in.r > 0.0 && a > 0.0, "barrier_build: r, a > 0");
    const SParam s(spec_in.s);
    const int n = 1;
    const double nL1 = n * Lambda + 1.0;

    BarrierSpec spec = spec_in;
    bool mirrored = false;
    if (spec.case_id == 4) {
        require(spec.z0 <= 0.0, "barrier_build: case 4 takes z0 <= 0");
        mirrored = true;
        spec.z0 = -spec.z0;
        spec.case_id = (s.s <= 0.5) ? (spec.z0 > 0.0 ? 1 : 3) : 2;
    } else {
        require(spec.z0 >= 0.0, "barrier_build: cases 1-3 take z0 >= 0");
        if (spec.case_id == 1)
            require(spec.z0 > 0.0 && s.s <= 0.5, "barrier_build: case 1 needs z0 > 0, s <= 1/2");
        if (spec.case_id == 2) require(s.s > 0.5, "barrier_build: case 2 needs s > 1/2");
        if (spec.case_id == 3)
            require(spec.z0 == 0.0 && s.s <= 0.5, "barrier_build: case 3 needs z0 = 0, s <= 1/2");
    }

    Barrier bar;
    bar.spec = spec;
    bar.spec.case_id = spec.case_id;
    bar.a = a;
    bar.lambda = lambda;
    bar.Lambda = Lambda;
    bar.n = n;
    bar.mirrored = mirrored;

    const double r = spec.r, gamma = spec.gamma, z0 = spec.z0, x0 = spec.x0;

    // case-dependent corrector and exponent calibration
    double eps = 0.0;
    if (spec.case_id == 3) {
        const double C2bar = q_s_const(s) * std::pow(2.0, s.s);
        eps = gamma / (4.0 * C2bar);
        bar.g_slope = eps * std::pow(r, 1.0 - s.s);
        bar.g_offset = -eps * C2bar * r;
        bar.eps = eps;
        bar.corr_cap = eps * C2bar * r;
    }
    if (spec.case_id == 2) {
        const Interval S2 = section_h(s, z0, 2.0 * r);
        const double zL = std::max(0.0, S2.lo), zR = S2.hi;
        const double muS = mu_h_interval(s, S2.lo, S2.hi);
        const double lenS = S2.length();
        eps = 0.02;
        for (int attempt = 0; attempt < 8; ++attempt) {
            double eps0 = eps;
            double m_band = 0.0;
            for (int it = 0; it < 60; ++it) {
                m_band = std::pow(eps0 * lenS / muS, s.s / (2.0 * s.s - 1.0));
                const double hi = std::min(m_band, zR);
                const double mu_H = hi > zL ? mu_h_interval(s, zL, hi) : 0.0;
                if (mu_H <= eps * muS) break;
                eps0 *= 0.5;
            }
            const double band_lo = std::min(m_band, zR);
            double band_hi = band_lo;
            if (band_lo > zL) {
                // widen so the extra mu_h mass is at most eps mu_h(S)
                band_hi = std::min(zR, h_prime_inv(s, h_prime(s, band_lo) + eps * muS));
                if (band_hi <= band_lo) band_hi = band_lo;
            }
            const double q0 = eps * muS;
            bar.heps = build_heps(s, zL, zR, band_lo > zL ? band_lo : zL - 1.0,
                                  band_lo > zL ? band_hi : zL - 1.0, eps, 2.0 * nL1, q0);
            bar.eps = eps;
            bar.eps0 = eps0;
            bar.corr_cap = bar.heps.max_abs();
            if (bar.corr_cap < 0.9 * r) break;  // corrector must stay small next to r
            eps *= 0.5;
        }
        if (bar.corr_cap >= 0.9 * r)
            throw numerical_error("barrier_build: case 2 corrector bound |h_eps| < r failed");
    }

    bar.Dmax = 2.0 * r + bar.corr_cap;
    const double Dmax = bar.Dmax;

    // exponent
    double alpha = 0.0;
    if (spec.case_id == 1) {
        const double need = (4.0 / gamma + 1.0) * nL1;
        alpha = 1.1 * std::max(need / (2.0 * lambda), need);
    } else {
        // smallest alpha with (alpha+1) G >= 2 Dmax (n Lambda + 1) on the
        // sampled ring, G = 2 lambda delta_phi + |z|^{2-1/s} (dz D)^2,
        // excluding the psi = 1 band where the inequality is automatic
        auto samples = sample_ring(s, x0, z0, r, gamma, 48, 48);
        double G_min = std::numeric_limits<double>::infinity();
        for (const auto& smp : samples) {
            if (smp.z <= 0.0) continue;
            if (spec.case_id == 2 && smp.z <= bar.heps.band_lo) continue;
            const double dzD = h_prime(s, smp.z) - h_prime(s, z0) - bar.corr_prime(smp.z);
            const double G =
                2.0 * lambda * smp.dphi + z_coefficient(s, smp.z) * dzD * dzD;
            G_min = std::min(G_min, G);
        }
        if (!(G_min > 1e-12 * r))
            throw numerical_error(
                "barrier_build: calibration failed, (alpha+1) G > 2 Dmax (n Lambda + 1) has no "
                "margin (G_min ~ 0)");
        alpha = 1.1 * std::max(1.0, 2.0 * Dmax * nL1 / G_min - 1.0);
    }
    if (alpha > 5e3)
        throw numerical_error("barrier_build: exponent calibration diverged (alpha > 5e3)");
    bar.alpha = alpha;
    bar.scale = a * std::pow(Dmax, alpha + 1.0) / alpha;
    bar.base = std::pow(r + bar.corr_cap, -alpha);

    // realized inner-boundary constant
    bar.realized_C =
        boundary_max_phi(bar, s, x0, z0, r, gamma * r, 256) / (a * r);

    // sample onto a grid over the bounding box of [S_2r]^+ (or its mirror)
    BarrierBuildResult out;
    out.barrier = bar;
    const Interval S2z = section_h(s, z0, 2.0 * r);
    const double zlo_pos = std::max(0.0, S2z.lo), zhi_pos = S2z.hi;
    const double xr = std::sqrt(4.0 * r);
    XZGrid g;
    g.x.resize(nodes_x);
    for (int i = 0; i < nodes_x; ++i)
        g.x[i] = x0 - xr + 2.0 * xr * i / (nodes_x - 1);
    g.z.resize(nodes_z);
    for (int j = 0; j < nodes_z; ++j) {
        const double zp = zlo_pos + (zhi_pos - zlo_pos) * j / (nodes_z - 1);
        g.z[j] = mirrored ? -zp : zp;
    }
    if (mirrored) std::reverse(g.z.begin(), g.z.end());
    XZField phi(g);
    out.ring_mask.assign(static_cast<std::size_t>(nodes_x) * nodes_z, 0);
    const double zc_eval = mirrored ? -z0 : z0;
    for (int i = 0; i < nodes_x; ++i) {
        for (int j = 0; j < nodes_z; ++j) {
            const double zp = mirrored ? -g.z[j] : g.z[j];
            const double d =
                0.5 * sq(g.x[i] - x0) + delta_h(s, z0, zp);
            if (d > gamma * r && d < 2.0 * r) {
                out.ring_mask[static_cast<std::size_t>(i) * nodes_z + j] = 1;
                phi.at(i, j) = bar.eval(g.x[i], g.z[j]);
            }
        }
    }
    (void)zc_eval;
    out.phi = std::move(phi);
    return out;
}

BarrierVerifyReport barrier_verify(const BarrierBuildResult& built,
                                   const std::function<double(double)>& a11_of_x) {
    const Barrier& bar = built.barrier;
    const SParam s(bar.spec.s);
    const XZGrid& g = built.phi.grid;
    const double a = bar.a;
    const double nL1 = bar.n * bar.Lambda + 1.0;
    const double r = bar.spec.r, gamma = bar.spec.gamma;
    const double x0 = bar.spec.x0, z0 = bar.spec.z0;

    BarrierVerifyReport rep;
    rep.min_lhs_excess = std::numeric_limits<double>::infinity();
    rep.min_inner_phi = std::numeric_limits<double>::infinity();
    rep.min_neumann = std::numeric_limits<double>::infinity();

    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.nz(); ++j) {
            if (!built.ring_mask[static_cast<std::size_t>(i) * g.nz() + j]) continue;
            const double x = g.x[i];
            const double zp = bar.mirrored ? -g.z[j] : g.z[j];
            if (zp == 0.0) {
                rep.has_trace_nodes = true;
                const double dzb =
                    -bar.scale * bar.alpha * std::pow(bar.D(x, g.z[j]), -bar.alpha - 1.0) *
                    (h_prime(s, 0.0) - h_prime(s, z0) - bar.corr_prime(0.0));
                rep.min_neumann = std::min(rep.min_neumann, dzb);
                continue;
            }
            const double lhs = bar.lhs(a11_of_x(x), x, g.z[j]);
            rep.min_lhs_excess = std::min(rep.min_lhs_excess, lhs - a * nL1);
            ++rep.checked_nodes;
            const double d = 0.5 * sq(x - x0) + delta_h(s, z0, zp);
            if (d < r)
                rep.min_inner_phi = std::min(rep.min_inner_phi, built.phi.at(i, j));
        }
    }
    rep.max_outer_phi = boundary_max_phi(bar, s, x0, z0, r, 2.0 * r, 256);
    rep.inner_bound_C = boundary_max_phi(bar, s, x0, z0, r, gamma * r, 256) / (a * r);
    if (!std::isfinite(rep.min_inner_phi)) rep.min_inner_phi = 1.0;  // no inner nodes sampled
    return rep;
}

DetachmentResult detachment_experiment(const XZField& U, SParam s, const Paraboloid& P,
                                       int contact_i, int contact_j, const PointXZ& center,
                                       double r, double gamma,
                                       const std::function<double(double)>& a11_of_x,
                                       double lambda, double Lambda) {
    require(center.dim_x() == 1, "detachment_experiment: 1-D base");
    const XZGrid& g = U.grid;
    const double x0 = center.x[0], z0 = center.z;

    BarrierSpec spec;
    spec.s = s.s;
    spec.x0 = x0;
    spec.z0 = z0;
    spec.r = r;
    spec.gamma = gamma;
    if (z0 < 0.0)
        spec.case_id = 4;
    else if (z0 == 0.0)
        spec.case_id = s.s <= 0.5 ? 3 : 2;
    else
        spec.case_id = s.s <= 0.5 ? 1 : 2;
    BarrierBuildResult built = barrier_build(spec, P.a, lambda, Lambda);

    // min of (U - P) - phi over the closed ring nodes of the field grid
    DetachmentResult res;
    double best = std::numeric_limits<double>::infinity();
    double best_delta = 0.0;
    const bool positive_side = z0 >= 0.0;
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.nz(); ++j) {
            const double z = g.z[j];
            if (positive_side && z < 0.0) continue;
            if (!positive_side && z > 0.0) continue;
            const double d = 0.5 * sq(g.x[i] - x0) + delta_h(s, z0, z);
            if (d < gamma * r || d > 2.0 * r) continue;
            const double w = U.at(i, j) - P.eval(g.x[i], z) - built.barrier.eval(g.x[i], z);
            if (w < best) {
                best = w;
                best_delta = d;
            }
        }
    }
    res.minimizer_on_outer = best_delta > 2.0 * r * 0.98;

    // touch gap on the closed inner section
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.nz(); ++j) {
            const double z = g.z[j];
            if (positive_side && z < 0.0) continue;
            if (!positive_side && z > 0.0) continue;
            const double d = 0.5 * sq(g.x[i] - x0) + delta_h(s, z0, z);
            if (d > gamma * r * 1.05) continue;
            const double w = U.at(i, j) - P.eval(g.x[i], z);
            if (w < gap) {
                gap = w;
                res.x2 = g.x[i];
                res.z2 = z;
            }
        }
    }
    (void)contact_i;
    (void)contact_j;
    (void)a11_of_x;
    res.gap = gap;
    res.gap_over_ar = gap / (P.a * r);
    return res;
}

LocalizationResult localization_experiment(const XZField& U, SParam s, double a, double R,
                                           double C_enlarge, const GeometryConstants& geo,
                                           const PointXZ& center, const PointXZ& q_center,
                                           double r) {
    require(C_enlarge > 1.0, "localization_experiment: C > 1");
    const CubeDesc QR = cube(s, center, R);
    const CubeDesc Qr = cube(s, q_center, r);
    require(Qr.x_iv[0].lo > QR.x_iv[0].lo && Qr.x_iv[0].hi < QR.x_iv[0].hi &&
                Qr.z_iv.lo > QR.z_iv.lo && Qr.z_iv.hi < QR.z_iv.hi,
            "localization_experiment: closure of Q_r must sit inside Q_R");

    ContactAaR A_small = contact_A_aR(U, s, a, R, geo, center);
    bool meets = false;
    for (const auto& [i, j] : A_small.points) {
        if (Qr.contains_closed(PointXZ::xz(U.grid.x[i], U.grid.z[j]))) {
            meets = true;
            break;
        }
    }
    require(meets, "localization_experiment: closure of Q_r does not meet A_{a,R}");

    ContactAaR A_big = contact_A_aR(U, s, C_enlarge * a, R, geo, center);
    const CubeDesc Qeta = cube(s, q_center, geo.eta * r);
    std::vector<std::pair<int, int>> inside;
    for (const auto& [i, j] : A_big.points)
        if (Qeta.contains_closed(PointXZ::xz(U.grid.x[i], U.grid.z[j]))) inside.push_back({i, j});

    LocalizationResult res;
    res.n_small = static_cast<int>(A_small.points.size());
    res.n_large = static_cast<int>(A_big.points.size());
    res.mu_intersection = mu_cells(U.grid, s, inside);
    res.mu_Qr = Qr.x_iv[0].length() * mu_h_interval(s, Qr.z_iv.lo, Qr.z_iv.hi);
    res.ratio = res.mu_intersection / res.mu_Qr;
    return res;
}

CoveringReport covering_iteration(
    const std::function<double(int, const CubeDesc&)>& measure_Dk_in, int k_max, SParam s,
    const PointXZ& center, double R, const GeometryConstants& geo) {
    CoveringReport rep;
    const CubeDesc Q = cube(s, center, R / geo.K0);
    const double muQ = Q.x_iv[0].length() * mu_h_interval(s, Q.z_iv.lo, Q.z_iv.hi);
    double prev = -1.0;
    for (int k = 0; k <= k_max; ++k) {
        const double mk = muQ - measure_Dk_in(k, Q);
        require(mk >= -1e-12 * muQ, "covering_iteration: D_k measure exceeds the cube");
        require(prev < 0.0 || mk <= prev + 1e-12 * muQ,
                "covering_iteration: sets must be nested increasing");
        rep.complement_measure.push_back(std::max(mk, 0.0));
        prev = mk;
    }
    // fitted geometric rate on the positive part of the curve
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    double worst_ratio = 0.0;
    for (std::size_t k = 0; k < rep.complement_measure.size(); ++k) {
        const double v = rep.complement_measure[k];
        if (v <= 1e-14 * muQ) break;
        sx += static_cast<double>(k);
        sy += std::log(v);
        sxx += static_cast<double>(k) * k;
        sxy += static_cast<double>(k) * std::log(v);
        ++m;
        if (k > 0 && rep.complement_measure[k - 1] > 0.0)
            worst_ratio = std::max(worst_ratio, v / rep.complement_measure[k - 1]);
    }
    if (m >= 2) {
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        rep.fitted_rate = std::exp(slope);
    }
    rep.c_observed = 1.0 - worst_ratio;
    rep.rate_ok = rep.fitted_rate <= (1.0 - rep.c_observed) + 1e-9;
    return rep;
}

XZField normalize_W_eps(const XZField& U, SParam s, const Eigen::VectorXd& f_trace, double a,
                        double R, const GeometryConstants& geo, double eps, int center_i,
                        int center_j) {
    require(eps >= 0.0, "normalize_W_eps: eps >= 0");
    const double z_center = U.grid.z[center_j];
    const Interval S3 = section_h(s, z_center, geo.K3_hat * R);
    double f_term = 0.0;
    if (S3.contains_open(0.0)) {
        const double fnorm = f_trace.size() ? f_trace.cwiseAbs().maxCoeff() : 0.0;
        f_term = fnorm * R / mu_h_interval(s, S3.lo, S3.hi);
    }
    const double denom = 2.0 * geo.K0 * U.at(center_i, center_j) + f_term + eps;
    require(denom > 0.0, "normalize_W_eps: vanishing denominator");
    XZField W = U;
    W.v = (a * R / denom) * U.v;
    return W;
}

AbsorbResult absorb_neumann_rhs(const XZField& U, SParam s, const Eigen::VectorXd& f_trace,
                                double K1_hat, double R) {
    require(U.v.minCoeff() >= -1e-12 * (1.0 + U.sup_norm()),
            "absorb_neumann_rhs: U must be nonnegative");
    const double fnorm = f_trace.size() ? f_trace.cwiseAbs().maxCoeff() : 0.0;
    const double section_len = 2.0 * q_s_const(s) * std::pow(K1_hat * R, s.s);
    AbsorbResult out;
    out.V = U;
    for (int i = 0; i < U.grid.nx(); ++i)
        for (int j = 0; j < U.grid.nz(); ++j)
            out.V.at(i, j) = U.at(i, j) - fnorm * std::abs(U.grid.z[j]) + fnorm * section_len;
    out.g = f_trace.array() + fnorm;
    return out;
}

// --- constants ledger ---------------------------------------------------------

HarnackConstants harnack_constants(const GeometryConstants& geo, double K_d, double c_cover,
                                   double C_enlarge) {
    require(K_d > 1.0 && c_cover > 0.0 && c_cover < 1.0 && C_enlarge > 1.0,
            "harnack_constants: bad inputs");
    HarnackConstants hc;
    hc.n = geo.n;
    hc.K = geo.K;
    hc.theta = geo.theta;
    hc.K_d = K_d;
    hc.K0 = geo.K0;
    hc.eta = geo.eta;
    hc.K2_hat = geo.K2_hat;
    hc.K3_hat = geo.K3_hat;
    hc.beta = 1.0 / (3.0 * geo.K0);
    hc.kappa2 = hc.beta / (geo.n + 1.0);
    hc.kappa1 = hc.kappa2 / geo.theta;
    hc.kappa0 = hc.kappa1;
    hc.K1_hat = geo.theta * geo.K3_hat;
    hc.K0_hat = (geo.n + 1.0) * geo.theta * geo.theta * hc.K1_hat;
    hc.kappa = std::sqrt(hc.kappa0);
    hc.K_hat = std::sqrt(2.0 * hc.K0_hat);
    hc.C_enlarge = C_enlarge;
    hc.c_cover = c_cover;
    hc.c0 = sq(C_enlarge) * sq(geo.theta) * (geo.n + 1.0) / geo.K0 *
            std::pow(4.0 * K_d * K_d / c_cover, 1.0 / (geo.n + 1.0));
    hc.k0 = static_cast<int>(std::ceil(
        std::log(2.0 * K_d * K_d * K_d * sq(geo.theta) * std::pow(2.0, geo.n + 1) / geo.K) /
        std::log(C_enlarge)));
    return hc;
}

double HarnackConstants::rho_k(int k) const {
    return c0 * std::pow(1.0 - c_cover, static_cast<double>(k) / (n + 1.0));
}

double HarnackConstants::mu_exponent(double C_H, double s) const {
    const double g = gamma_osc(C_H);
    const double L = std::log(g) / std::log(kappa0 / K0_hat);
    double mu = 1.05 * 2.0 * L / (2.0 * L + s);
    return std::min(mu, 0.99);
}

double HarnackConstants::alpha1(double C_H, double s) const {
    const double g = gamma_osc(C_H);
    const double mu = mu_exponent(C_H, s);
    return (1.0 - mu) * std::log(g) / std::log(kappa0 / K0_hat);
}

// --- experiments ----------------------------------------------------------------

namespace {

// smooth field in [0,1] from a few random Fourier modes
double smooth01(double x, RngStream& rng_fixed, const std::vector<double>& coef) {
    double v = 0.0;
    for (std::size_t k = 0; k < coef.size(); k += 2)
        v += coef[k] * std::sin(M_PI * (k / 2 + 1) * x + coef[k + 1]);
    (void)rng_fixed;
    return 0.5 * (1.0 + std::tanh(v));
}

std::vector<double> random_modes(RngStream& rng, int n_modes) {
    std::vector<double> coef(2 * n_modes);
    for (int k = 0; k < n_modes; ++k) {
        coef[2 * k] = rng.uniform(-1.0, 1.0);
        coef[2 * k + 1] = rng.uniform(0.0, 2.0 * M_PI);
    }
    return coef;
}

}  // namespace

HarnackTrial harnack_measure_extension(const XZField& U, SParam s, const PointXZ& center,
                                       double R, double kappa0_eff, double K0_hat_eff,
                                       const Eigen::VectorXd& f_trace) {
    const XZGrid& g = U.grid;
    NodeSet inner = nodes_in_section(g, s, center, kappa0_eff * R);
    HarnackTrial t;
    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    int count = 0;
    for (int i = inner.i_lo; i <= inner.i_hi; ++i)
        for (int j = inner.j_lo; j <= inner.j_hi; ++j) {
            if (!inner.contains(g, i, j)) continue;
            sup = std::max(sup, U.at(i, j));
            inf = std::min(inf, U.at(i, j));
            ++count;
        }
    require(count >= 3, "harnack_measure_extension: inner section has too few nodes");
    // ||f|| over the trace part of S_{K0_hat R}
    double fnorm = 0.0;
    const Interval Sbig = section_h(s, center.z, K0_hat_eff * R);
    if (Sbig.contains_open(0.0)) {
        const double xr = std::sqrt(2.0 * K0_hat_eff * R);
        for (int i = 0; i < g.nx(); ++i)
            if (std::abs(g.x[i] - center.x[0]) < xr)
                fnorm = std::max(fnorm, std::abs(f_trace[i]));
    }
    t.sup = sup;
    t.inf = inf;
    t.rhs_term = fnorm * std::pow(R, s.s);
    const double denom = inf + t.rhs_term;
    if (denom <= 0.0) {
        t.admissible = sup <= 0.0;
        t.C_H = t.admissible ? 1.0 : std::numeric_limits<double>::infinity();
        if (sup <= 0.0) t.admissible = false;  // 0/0 excluded
        return t;
    }
    t.C_H = sup / denom;
    return t;
}

HarnackSummary harnack_extension_experiment(const HarnackTrialConfig& cfg) {
    const SParam s(cfg.s);
    HarnackSummary sum;
    sum.trials.resize(cfg.trials);
    XZField ladder_field;  // trial 0 keeps its field for the oscillation fit

    // shrink R until the measured section fits the realized box in z and
    // spans a few cells in x
    const double zmax = 0.6;
    const double R_zfit =
        std::pow(0.8 * zmax / q_s_const(s), 1.0 / s.s) / cfg.kappa0_eff;
    const double R_used = std::min(cfg.R, R_zfit);

    par::parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t ti) {
        RngStream rng = sample_stream(cfg.seed, 71, ti);
        // coefficients, Neumann data, outer boundary data
        auto a_modes = random_modes(rng, 3);
        auto f_modes = random_modes(rng, 2);
        auto g_modes = random_modes(rng, 2);
        const bool f_zero = rng.uniform() < 0.5;
        const double f_amp = rng.uniform(0.0, 2.0);
        const double g_base = rng.uniform(0.5, 2.0);

        DegenerateProblem prob;
        prob.s = cfg.s;
        prob.grid.x.resize(cfg.nx);
        for (int i = 0; i < cfg.nx; ++i)
            prob.grid.x[i] = static_cast<double>(i) / (cfg.nx - 1);
        prob.grid.z = XZGrid::graded_z(zmax, cfg.nz, std::max(2.0, 1.0 / cfg.s));
        prob.ax.resize(cfg.nx);
        prob.bottom_data.resize(cfg.nx);
        for (int i = 0; i < cfg.nx; ++i) {
            const double x = prob.grid.x[i];
            prob.ax[i] = cfg.lambda + (cfg.Lambda - cfg.lambda) * smooth01(x, rng, a_modes);
            prob.bottom_data[i] = f_zero ? 0.0 : f_amp * smooth01(x, rng, f_modes);
        }
        prob.bottom = DegenerateProblem::BottomMode::neumann;
        prob.boundary = [&](double x, double z) {
            (void)z;
            return g_base * (0.25 + smooth01(x, rng, g_modes));
        };
        XZField half = solve_degenerate(prob);

        // reflect to the symmetric grid
        ExtensionField ext;
        ext.grid.base = GridSpec::line(0.0, 1.0, cfg.nx);
        ext.grid.z = prob.grid.z;
        ext.U = half.v;
        XZField U = even_reflection(ext);

        const double xc = 0.5 + 0.1 * rng.uniform(-1.0, 1.0);
        HarnackTrial t = harnack_measure_extension(U, s, PointXZ::xz(xc, 0.0), R_used,
                                                   cfg.kappa0_eff, cfg.K0_hat_eff,
                                                   prob.bottom_data);
        t.trial = ti;
        sum.trials[ti] = t;
        if (ti == 0) ladder_field = U;
    });

    std::vector<double> chs;
    for (const auto& t : sum.trials)
        if (t.admissible && std::isfinite(t.C_H)) {
            chs.push_back(t.C_H);
        }
    sum.admissible = static_cast<int>(chs.size());
    if (!chs.empty()) {
        std::sort(chs.begin(), chs.end());
        sum.max_CH = chs.back();
        sum.p95_CH = chs[static_cast<std::size_t>(0.95 * (chs.size() - 1))];
    }
    if (ladder_field.grid.nx() > 0) {
        const double r0 = cfg.kappa0_eff * cfg.R;
        const std::vector<double> radii = {r0, r0 / 2, r0 / 4, r0 / 8};
        try {
            sum.alpha_fit = holder_fit(ladder_field, s, PointXZ::xz(0.5, 0.0), radii).alpha_fit;
        } catch (const std::exception&) {
            sum.alpha_fit = 0.0;  // ladder too coarse on this mesh
        }
    }
    return sum;
}

HarnackTrial harnack_measure_ls(const GridFunction& u, SParam s, double x_center, double R,
                                double kappa_eff, double K_hat_eff, double f_norm_ball) {
    HarnackTrial t;
    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    int count = 0;
    for (int i = 0; i < u.grid.n[0]; ++i) {
        if (std::abs(u.grid.coord(0, i) - x_center) >= kappa_eff * R) continue;
        sup = std::max(sup, u.values[i]);
        inf = std::min(inf, u.values[i]);
        ++count;
    }
    (void)K_hat_eff;
    require(count >= 3, "harnack_measure_ls: inner ball has too few nodes");
    t.sup = sup;
    t.inf = inf;
    t.rhs_term = f_norm_ball * std::pow(R, 2.0 * s.s);
    const double denom = inf + t.rhs_term;
    if (denom <= 0.0) {
        t.admissible = false;
        t.C_H = sup <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        return t;
    }
    t.C_H = sup / denom;
    return t;
}

HarnackSummary harnack_ls_experiment(const HarnackTrialConfig& cfg) {
    const SParam s(cfg.s);
    HarnackSummary sum;
    sum.trials.resize(cfg.trials);
    const GridSpec grid = GridSpec::line(0.0, 1.0, cfg.nx);
    GridFunction last_u;

    for (int ti = 0; ti < cfg.trials; ++ti) {
        RngStream rng = sample_stream(cfg.seed, 72, static_cast<std::uint64_t>(ti));
        auto a_modes = random_modes(rng, 3);
        auto f_modes = random_modes(rng, 2);
        CoeffField coeff = CoeffField::from_fn(
            grid, [&](double x, double, double& a11, double& a12, double& a22) {
                a11 = cfg.lambda + (cfg.Lambda - cfg.lambda) * smooth01(x, rng, a_modes);
                a12 = 0.0;
                a22 = a11;
            });
        Operator op = assemble_L(grid, coeff);
        FracContext ctx = make_context(op, s);

        const double xc = 0.5 + 0.1 * rng.uniform(-1.0, 1.0);
        const bool away = rng.uniform() < 0.5;
        GridFunction f(grid);
        for (int i = 0; i < cfg.nx; ++i) {
            const double x = grid.coord(0, i);
            double v = smooth01(x, rng, f_modes);
            if (away && std::abs(x - xc) < cfg.K0_hat_eff * cfg.R) v = 0.0;
            f.values[i] = v;
        }
        f.enforce_dirichlet();
        GridFunction u = apply_L_minus_s(ctx, f);

        double fnorm = 0.0;
        for (int i = 0; i < cfg.nx; ++i)
            if (std::abs(grid.coord(0, i) - xc) < cfg.K0_hat_eff * cfg.R)
                fnorm = std::max(fnorm, std::abs(f.values[i]));
        HarnackTrial t = harnack_measure_ls(u, s, xc, cfg.R, cfg.kappa0_eff, cfg.K0_hat_eff,
                                            fnorm);
        t.trial = static_cast<std::uint64_t>(ti);
        sum.trials[ti] = t;
        if (ti == 0) last_u = u;
    }

    std::vector<double> chs;
    for (const auto& t : sum.trials)
        if (t.admissible && std::isfinite(t.C_H)) chs.push_back(t.C_H);
    sum.admissible = static_cast<int>(chs.size());
    if (!chs.empty()) {
        std::sort(chs.begin(), chs.end());
        sum.max_CH = chs.back();
        sum.p95_CH = chs[static_cast<std::size_t>(0.95 * (chs.size() - 1))];
    }
    if (last_u.grid.n[0] > 0) {
        // oscillation ladder on the first trial's solution
        const double r0 = cfg.kappa0_eff * cfg.R;
        const std::vector<double> radii = {4 * r0, 2 * r0, r0, r0 / 2};
        try {
            sum.alpha_fit = holder_fit_base(last_u, 0.5, radii).alpha_fit;
        } catch (const std::exception&) {
            sum.alpha_fit = 0.0;
        }
    }
    return sum;
}

namespace {

HolderFit fit_loglog(const std::vector<double>& radii, const std::vector<double>& osc) {
    HolderFit fit;
    fit.radii = radii;
    fit.osc = osc;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (osc[k] <= 0.0) continue;
        const double lx = std::log(radii[k]), ly = std::log(osc[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    require(m >= 3, "holder_fit: need at least 3 usable ladder rungs");
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icept = (sy - slope * sx) / m;
    fit.alpha_fit = std::min(slope, 1.0);
    fit.C_fit = std::exp(icept);
    return fit;
}

}  // namespace

HolderFit holder_fit(const XZField& U, SParam s, const PointXZ& center,
                     std::span<const double> radii) {
    require(radii.size() >= 3, "holder_fit: fewer than 3 ladder rungs");
    std::vector<double> rv(radii.begin(), radii.end());
    std::vector<double> osc;
    for (double r : rv) {
        NodeSet set = nodes_in_section(U.grid, s, center, r);
        double mx = -std::numeric_limits<double>::infinity();
        double mn = std::numeric_limits<double>::infinity();
        for (int i = set.i_lo; i <= set.i_hi; ++i)
            for (int j = set.j_lo; j <= set.j_hi; ++j) {
                if (!set.contains(U.grid, i, j)) continue;
                mx = std::max(mx, U.at(i, j));
                mn = std::min(mn, U.at(i, j));
            }
        require(std::isfinite(mx), "holder_fit: empty section rung");
        osc.push_back(mx - mn);
    }
    return fit_loglog(rv, osc);
}

HolderFit holder_fit_base(const GridFunction& u, double x_center,
                          std::span<const double> radii) {
    require(radii.size() >= 3, "holder_fit_base: fewer than 3 ladder rungs");
    std::vector<double> rv(radii.begin(), radii.end());
    std::vector<double> osc;
    for (double r : rv) {
        double mx = -std::numeric_limits<double>::infinity();
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i < u.grid.n[0]; ++i) {
            if (std::abs(u.grid.coord(0, i) - x_center) >= r) continue;
            mx = std::max(mx, u.values[i]);
            mn = std::min(mn, u.values[i]);
        }
        require(std::isfinite(mx), "holder_fit_base: empty ball rung");
        osc.push_back(mx - mn);
    }
    return fit_loglog(rv, osc);
}

}  // namespace frac
