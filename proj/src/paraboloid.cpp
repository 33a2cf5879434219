#include "frac/paraboloid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "frac/parallel.hpp"

namespace frac {

double Paraboloid::eval(double x, double z) const {
    const SParam sp(s);
    return -a * (0.5 * sq(x - vertex_x) + delta_h(sp, vertex_z, z)) + offset;
}

double Paraboloid::vertex_slope() const { return a * h_prime(SParam(s), vertex_z); }

bool NodeSet::contains(const XZGrid& g, int i, int j) const {
    if (i < i_lo || i > i_hi || j < j_lo || j > j_hi) return false;
    switch (kind) {
        case Kind::all: return true;
        case Kind::cube: {
            const PointXZ p = PointXZ::xz(g.x[i], g.z[j]);
            return closed ? qd.contains_closed(p) : qd.contains_open(p);
        }
        case Kind::section: {
            const PointXZ p = PointXZ::xz(g.x[i], g.z[j]);
            return delta_Phi(SParam(s), center, p) < R;
        }
    }
    return false;
}

namespace {

int lower_index(const std::vector<double>& v, double value) {
    // first index with v[i] >= value
    return static_cast<int>(std::lower_bound(v.begin(), v.end(), value) - v.begin());
}

int upper_index(const std::vector<double>& v, double value) {
    // last index with v[i] <= value
    return static_cast<int>(std::upper_bound(v.begin(), v.end(), value) - v.begin()) - 1;
}

void clip_ranges(NodeSet& set, const XZGrid& g, const std::vector<Interval>& xiv,
                 const Interval& ziv) {
    set.i_lo = std::max(0, lower_index(g.x, xiv[0].lo));
    set.i_hi = std::min(g.nx() - 1, upper_index(g.x, xiv[0].hi));
    set.j_lo = std::max(0, lower_index(g.z, ziv.lo));
    set.j_hi = std::min(g.nz() - 1, upper_index(g.z, ziv.hi));
}

}  // namespace

NodeSet all_nodes(const XZGrid& g) {
    NodeSet set;
    set.kind = NodeSet::Kind::all;
    set.i_lo = 0;
    set.i_hi = g.nx() - 1;
    set.j_lo = 0;
    set.j_hi = g.nz() - 1;
    return set;
}

NodeSet nodes_in_cube(const XZGrid& g, SParam s, const CubeDesc& q, bool closed) {
    require(q.x_iv.size() == 1, "nodes_in_cube: 1-D base engine");
    NodeSet set;
    set.kind = NodeSet::Kind::cube;
    set.s = s.s;
    set.qd = q;
    set.closed = closed;
    clip_ranges(set, g, q.x_iv, q.z_iv);
    return set;
}

NodeSet nodes_in_section(const XZGrid& g, SParam s, const PointXZ& center, double R) {
    require(center.dim_x() == 1, "nodes_in_section: 1-D base engine");
    NodeSet set;
    set.kind = NodeSet::Kind::section;
    set.s = s.s;
    set.center = center;
    set.R = R;
    const BoundingBox bb = section_box(s, Potential::Phi, center, R);
    clip_ranges(set, g, bb.x, bb.z);
    return set;
}

namespace {

struct ScanResult {
    double value;
    int i, j;
};

// deterministic extreme scan of U + a delta over the search set
ScanResult contact_scan(const XZField& U, SParam s, double a, double vx, double vz,
                        const NodeSet& search, bool maximize) {
    const XZGrid& g = U.grid;
    const int ni = search.i_hi - search.i_lo + 1;
    const int nj = search.j_hi - search.j_lo + 1;
    require(ni > 0 && nj > 0, "contact scan: empty search set");
    const std::size_t total = static_cast<std::size_t>(ni) * nj;
    const double sign = maximize ? -1.0 : 1.0;
    auto key = [&](std::size_t k) {
        const int i = search.i_lo + static_cast<int>(k) / nj;
        const int j = search.j_lo + static_cast<int>(k) % nj;
        if (!search.contains(g, i, j)) return std::numeric_limits<double>::infinity();
        const double d = 0.5 * sq(g.x[i] - vx) + delta_h(s, vz, g.z[j]);
        return sign * (U.at(i, j) + a * d);
    };
    par::MinResult r = par::det_min(total, key);
    if (!std::isfinite(r.value))
        throw numerical_error("contact scan: search set contains no grid nodes");
    ScanResult out;
    out.value = sign * r.value;
    out.i = search.i_lo + static_cast<int>(r.index) / nj;
    out.j = search.j_lo + static_cast<int>(r.index) % nj;
    return out;
}

}  // namespace

TouchResult slide_from_below(const XZField& U, SParam s, double a, double vx, double vz,
                             const NodeSet& search) {
    require(a > 0.0, "slide_from_below: opening a > 0");
    ScanResult r = contact_scan(U, s, a, vx, vz, search, false);
    TouchResult t;
    t.p = Paraboloid{s.s, a, vx, vz, r.value};
    t.ci = r.i;
    t.cj = r.j;
    t.contact_x = U.grid.x[r.i];
    t.contact_z = U.grid.z[r.j];
    t.gap_min = 0.0;
    return t;
}

TouchResult slide_from_above(const XZField& U, SParam s, double a, double vx, double vz,
                             const NodeSet& search) {
    require(a < 0.0, "slide_from_above: opening a < 0");
    ScanResult r = contact_scan(U, s, a, vx, vz, search, true);
    TouchResult t;
    t.p = Paraboloid{s.s, a, vx, vz, r.value};
    t.ci = r.i;
    t.cj = r.j;
    t.contact_x = U.grid.x[r.i];
    t.contact_z = U.grid.z[r.j];
    t.gap_min = 0.0;
    return t;
}

TouchResult reopen(const XZField& U, SParam s, const TouchResult& t, double a_tilde,
                   const NodeSet& search, double tol_touch) {
    require(a_tilde >= t.p.a && t.p.a > 0.0, "reopen: need a_tilde >= a > 0");
    const double ratio = t.p.a / a_tilde;
    const double xv = t.contact_x + ratio * (t.p.vertex_x - t.contact_x);
    const double wz =
        h_prime(s, t.contact_z) + ratio * (h_prime(s, t.p.vertex_z) - h_prime(s, t.contact_z));
    const double zv = h_prime_inv(s, wz);

    TouchResult out;
    out.ci = t.ci;
    out.cj = t.cj;
    out.contact_x = t.contact_x;
    out.contact_z = t.contact_z;
    const double u_contact = U.at(t.ci, t.cj);
    const double c =
        u_contact + a_tilde * (0.5 * sq(xv - t.contact_x) + delta_h(s, zv, t.contact_z));
    out.p = Paraboloid{s.s, a_tilde, xv, zv, c};

    // verify P <= U on the search set
    const XZGrid& g = U.grid;
    double worst = 0.0;
    for (int i = search.i_lo; i <= search.i_hi; ++i)
        for (int j = search.j_lo; j <= search.j_hi; ++j) {
            if (!search.contains(g, i, j)) continue;
            worst = std::min(worst, U.at(i, j) - out.p.eval(g.x[i], g.z[j]));
        }
    out.gap_min = worst;
    if (worst < -tol_touch * (1.0 + U.sup_norm()))
        throw numerical_error("reopen: reopened paraboloid exceeds U (grid inconsistency)");
    return out;
}

bool vertex_sign_check(const TouchResult& t) {
    if (t.contact_z > 0.0) return t.p.vertex_z >= 0.0;
    if (t.contact_z < 0.0) return t.p.vertex_z <= 0.0;
    return true;
}

bool neumann_vertex_bound_check(const TouchResult& t, SParam s, double f_at_contact,
                                double tol) {
    if (t.contact_z != 0.0) return true;
    if (f_at_contact > tol) return false;  // such nodes cannot be touched
    const double fm = std::min(0.0, f_at_contact);
    return std::abs(h_prime(s, t.p.vertex_z)) <= std::abs(fm) / t.p.a + tol;
}

double supersolution_excess(const XZField& U, SParam s, const Eigen::VectorXd& ax,
                            const Eigen::VectorXd& f_trace) {
    const XZGrid& g = U.grid;
    const double hx = g.dx();
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < g.nx() - 1; ++i) {
        for (int j = 1; j < g.nz() - 1; ++j) {
            if (g.z[j] == 0.0) {
                // one-sided Neumann: -(U(x,z1)-U(x,0))/z1 >= f
                const double dz = g.z[j + 1] - g.z[j];
                const double neum = -(U.at(i, j + 1) - U.at(i, j)) / dz;
                worst = std::max(worst, f_trace[i] - neum);
                continue;
            }
            const double uxx = (U.at(i + 1, j) - 2.0 * U.at(i, j) + U.at(i - 1, j)) / (hx * hx);
            const double dzm = g.z[j] - g.z[j - 1];
            const double dzp = g.z[j + 1] - g.z[j];
            const double uzz =
                2.0 * (U.at(i, j - 1) / (dzm * (dzm + dzp)) - U.at(i, j) / (dzm * dzp) +
                       U.at(i, j + 1) / (dzp * (dzm + dzp)));
            worst = std::max(worst, ax[i] * uxx + z_coefficient(s, g.z[j]) * uzz);
        }
    }
    return worst;
}

namespace {

double band_halfwidth(SParam s, double f_norm, double a) {
    return h_prime_inv(s, f_norm / std::abs(a));
}

bool pinch_ok(const XZField& U, SParam s, int i, int j, double a, double C) {
    const XZGrid& g = U.grid;
    if (i <= 0 || i >= g.nx() - 1 || j <= 0 || j >= g.nz() - 1) return true;
    if (g.z[j] == 0.0) return true;
    const double hx = g.dx();
    const double dzm = g.z[j] - g.z[j - 1];
    const double dzp = g.z[j + 1] - g.z[j];
    if (std::abs(dzp - dzm) > 1e-9 * (dzp + dzm)) return true;  // need a locally even stencil
    const double uxx = (U.at(i + 1, j) - 2.0 * U.at(i, j) + U.at(i - 1, j)) / (hx * hx);
    const double uzz = (U.at(i, j + 1) - 2.0 * U.at(i, j) + U.at(i, j - 1)) / (dzm * dzp);
    const double uxz = (U.at(i + 1, j + 1) - U.at(i - 1, j + 1) - U.at(i + 1, j - 1) +
                        U.at(i - 1, j - 1)) /
                       (2.0 * hx * (dzm + dzp));
    const double hzz = h_second(s, g.z[j]);
    // -a D2Phi <= D2U <= C a D2Phi as 2x2 quadratic forms
    auto psd = [](double m11, double m12, double m22) {
        const double tol = 1e-9 * (1.0 + std::abs(m11) + std::abs(m22));
        return m11 >= -tol && m22 >= -tol && m11 * m22 - m12 * m12 >= -tol * (1.0 + std::abs(m12));
    };
    const bool lower = psd(uxx + a, uxz, uzz + a * hzz);
    const bool upper = psd(C * a - uxx, -uxz, C * a * hzz - uzz);
    return lower && upper;
}

}  // namespace

AbpReport abp_experiment(const XZField& U, SParam s, const CubeDesc& B, double a,
                         const Eigen::VectorXd& f_trace, const Eigen::VectorXd& ax,
                         double lambda, double Lambda, const AbpOptions& opt) {
    require(B.x_iv.size() == 1, "abp_experiment: 1-D base engine");
    require(a != 0.0, "abp_experiment: opening must be nonzero");
    const bool below = !opt.from_above;
    require((below && a > 0.0) || (!below && a < 0.0),
            "abp_experiment: opening sign inconsistent with slide direction");
    const XZGrid& g = U.grid;

    // supersolution / subsolution pre-check
    double excess;
    if (below) {
        excess = supersolution_excess(U, s, ax, f_trace);
    } else {
        XZField neg = U;
        neg.v = -U.v;
        excess = supersolution_excess(neg, s, ax, -f_trace);
    }
    double tol = opt.supersol_tol;
    if (tol < 0.0) tol = 1e-7 * (1.0 + U.sup_norm());
    if (excess > tol)
        throw numerical_error("abp_experiment: PDE inequality check failed, excess " +
                              std::to_string(excess));

    AbpReport rep;
    // exact measure of B and of the vertex band from the trace data
    rep.mu_B = B.x_iv[0].length() * mu_h_interval(s, B.z_iv.lo, B.z_iv.hi);
    require(rep.mu_B > 0.0, "abp_experiment: vertex set has zero measure");
    double f_side_norm = 0.0;
    for (int i = 0; i < f_trace.size(); ++i)
        f_side_norm =
            std::max(f_side_norm, below ? std::max(0.0, -f_trace[i]) : std::max(0.0, f_trace[i]));
    const double w = band_halfwidth(s, f_side_norm, a);
    const double blo = std::max(B.z_iv.lo, -w);
    const double bhi = std::min(B.z_iv.hi, w);
    const double mu_band =
        bhi > blo ? B.x_iv[0].length() * mu_h_interval(s, blo, bhi) : 0.0;
    rep.eps0 = 1.0 - mu_band / rep.mu_B;
    rep.hypothesis_ok = rep.eps0 > 0.0;

    // vertex-driven sliding over B's grid nodes
    NodeSet vset = nodes_in_cube(g, s, B, /*closed=*/true);
    NodeSet search = all_nodes(g);
    std::set<std::pair<int, int>> contact_set;
    std::vector<std::pair<int, int>> vlist;
    for (int i = vset.i_lo; i <= vset.i_hi; ++i)
        for (int j = vset.j_lo; j <= vset.j_hi; ++j)
            if (vset.contains(g, i, j)) vlist.push_back({i, j});
    rep.n_vertices = static_cast<int>(vlist.size());
    require(rep.n_vertices > 0, "abp_experiment: vertex set contains no grid nodes");

    std::vector<std::pair<int, int>> contacts(vlist.size());
    par::parallel_for(vlist.size(), [&](std::size_t k) {
        const auto [vi, vj] = vlist[k];
        TouchResult t = below ? slide_from_below(U, s, a, g.x[vi], g.z[vj], search)
                              : slide_from_above(U, s, a, g.x[vi], g.z[vj], search);
        contacts[k] = {t.ci, t.cj};
    });
    const double C =
        opt.pinch_C > 0.0 ? opt.pinch_C : 2.0 * (1.0 * Lambda + 1.0) / (lambda + 1.0);
    for (auto [ci, cj] : contacts) {
        if (ci == 0 || ci == g.nx() - 1 || cj == 0 || cj == g.nz() - 1)
            throw numerical_error("abp_experiment: contact set escapes the cube");
        if (contact_set.insert({ci, cj}).second) {
            rep.contacts.push_back({ci, cj});
            if (g.z[cj] != 0.0) {
                ++rep.pinch_checked;
                if (!pinch_ok(U, s, ci, cj, std::abs(a), C)) ++rep.pinch_violations;
            }
        }
    }
    rep.n_contacts = static_cast<int>(rep.contacts.size());
    rep.mu_A = mu_cells(g, s, rep.contacts);
    rep.ratio = rep.mu_A / rep.mu_B;
    return rep;
}

double mu_cells(const XZGrid& g, SParam s, const std::vector<std::pair<int, int>>& nodes) {
    double acc = 0.0;
    for (auto [i, j] : nodes) {
        const Interval xc = x_cell(g, i);
        const Interval zc = z_cell(g, j);
        acc += xc.length() * mu_h_interval(s, zc.lo, zc.hi);
    }
    return acc;
}

bool ContactAaR::contains(int i, int j) const {
    for (const auto& [pi, pj] : points)
        if (pi == i && pj == j) return true;
    return false;
}

ContactAaR contact_A_aR(const XZField& U, SParam s, double a, double R,
                        const GeometryConstants& geo, const PointXZ& center,
                        double tol_touch) {
    require(a > 0.0 && R > 0.0, "contact_A_aR: a, R > 0");
    const XZGrid& g = U.grid;
    const CubeDesc q2 = cube(s, center, geo.K2_hat * R);
    const CubeDesc q3 = cube(s, center, geo.K3_hat * R);
    require(q3.x_iv[0].lo >= g.x.front() && q3.x_iv[0].hi <= g.x.back() &&
                q3.z_iv.lo >= g.z.front() && q3.z_iv.hi <= g.z.back(),
            "contact_A_aR: Q_{K3 R} must sit inside the grid");

    // vertex set case split
    ContactAaR out;
    out.a = a;
    out.R = R;
    const bool meets_trace = q2.z_iv.lo <= 0.0 && q2.z_iv.hi >= 0.0;
    if (center.z == 0.0 || !meets_trace) {
        out.B_v = q2;
    } else {
        out.B_v = cube(s, PointXZ{center.x, 0.0}, geo.theta * geo.K2_hat * R);
    }

    NodeSet cand = nodes_in_cube(g, s, q2);
    NodeSet search = nodes_in_cube(g, s, q3);
    const int nj = cand.j_hi - cand.j_lo + 1;
    const std::size_t total = cand.bbox_count();
    std::vector<char> member(total, 0);
    std::vector<Paraboloid> wit(total);

    const double tol = tol_touch * (1.0 + U.sup_norm());
    par::parallel_for(total, [&](std::size_t k) {
        const int i = cand.i_lo + static_cast<int>(k) / nj;
        const int j = cand.j_lo + static_cast<int>(k) % nj;
        if (!cand.contains(g, i, j)) return;
        if (i <= 0 || i >= g.nx() - 1 || j <= 0 || j >= g.nz() - 1) return;
        if (U.at(i, j) > a * R) return;
        // tangent vertex from the discrete gradient
        const double hx = g.dx();
        const double mx = (U.at(i + 1, j) - U.at(i - 1, j)) / (2.0 * hx);
        double mz;
        if (g.z[j] == 0.0) {
            mz = 0.0;  // symmetric trace row
        } else {
            const double dzm = g.z[j] - g.z[j - 1];
            const double dzp = g.z[j + 1] - g.z[j];
            // 3-point first derivative on a nonuniform mesh
            mz = (-dzp / (dzm * (dzm + dzp))) * U.at(i, j - 1) +
                 ((dzp - dzm) / (dzm * dzp)) * U.at(i, j) +
                 (dzm / (dzp * (dzm + dzp))) * U.at(i, j + 1);
        }
        const double xv = g.x[i] + mx / a;
        const double zv = h_prime_inv(s, h_prime(s, g.z[j]) + mz / a);
        if (!out.B_v.contains_closed(PointXZ::xz(xv, zv))) return;
        Paraboloid p;
        p.s = s.s;
        p.a = a;
        p.vertex_x = xv;
        p.vertex_z = zv;
        p.offset = U.at(i, j) + a * (0.5 * sq(xv - g.x[i]) + delta_h(s, zv, g.z[j]));
        // verify P <= U over Q_{K3 R}
        for (int si = search.i_lo; si <= search.i_hi; ++si) {
            for (int sj = search.j_lo; sj <= search.j_hi; ++sj) {
                if (!search.contains(g, si, sj)) continue;
                if (U.at(si, sj) - p.eval(g.x[si], g.z[sj]) < -tol) return;
            }
        }
        member[k] = 1;
        wit[k] = p;
    });
    for (std::size_t k = 0; k < total; ++k) {
        if (!member[k]) continue;
        const int i = cand.i_lo + static_cast<int>(k) / nj;
        const int j = cand.j_lo + static_cast<int>(k) % nj;
        out.points.push_back({i, j});
        out.witnesses.push_back(wit[k]);
    }
    return out;
}

}  // namespace frac
