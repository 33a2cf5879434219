#pragma once

#include <utility>
#include <vector>

#include "frac/ma_geometry.hpp"
#include "frac/xzfield.hpp"

namespace frac {

// ---------------------------------------------------------------------------
// Monge-Ampere paraboloids P(x,z) = -a delta_Phi(vertex,(x,z)) + c slid
// against grid functions on (x,z) grids (1-D base). Contact sets and the
// ABP-type measure comparison live here.
// ---------------------------------------------------------------------------

struct Paraboloid {
    double s = 0.5;
    double a = 1.0;  // a > 0 slides from below, a < 0 from above
    double vertex_x = 0.0;
    double vertex_z = 0.0;
    double offset = 0.0;

    double eval(double x, double z) const;
    /// d_z P(x,0) = a h'(z_v), independent of x.
    double vertex_slope() const;
};

struct TouchResult {
    Paraboloid p;
    int ci = -1, cj = -1;        // contact node
    double contact_x = 0.0, contact_z = 0.0;
    double gap_min = 0.0;        // min (U - P) over the search set; 0 by construction
};

/// Node subset of an XZGrid: everything, a cube, or a section.
struct NodeSet {
    enum class Kind { all, cube, section };
    Kind kind = Kind::all;
    int i_lo = 0, i_hi = -1, j_lo = 0, j_hi = -1;  // inclusive bounding ranges
    double s = 0.5;
    CubeDesc qd;          // cube kind
    PointXZ center;       // section kind
    double R = 0.0;
    bool closed = false;  // closed membership for cubes

    bool contains(const XZGrid& g, int i, int j) const;
    std::size_t bbox_count() const {
        return static_cast<std::size_t>(std::max(0, i_hi - i_lo + 1)) *
               static_cast<std::size_t>(std::max(0, j_hi - j_lo + 1));
    }
};

NodeSet all_nodes(const XZGrid& g);
NodeSet nodes_in_cube(const XZGrid& g, SParam s, const CubeDesc& q, bool closed = false);
NodeSet nodes_in_section(const XZGrid& g, SParam s, const PointXZ& center, double R);

/// Exact argmin of U + a delta_Phi(vertex, .) over the search nodes; the
/// offset is that minimum, ties go to the lexicographically smallest index.
TouchResult slide_from_below(const XZField& U, SParam s, double a, double vertex_x,
                             double vertex_z, const NodeSet& search);

/// Mirror image for openings a < 0 lowered from above (argmax).
TouchResult slide_from_above(const XZField& U, SParam s, double a, double vertex_x,
                             double vertex_z, const NodeSet& search);

/// Opening increase keeping the contact point: the explicit construction with
/// vertex pulled toward the contact along gradient coordinates. Verifies
/// P <= U on the search set.
TouchResult reopen(const XZField& U, SParam s, const TouchResult& t, double a_tilde,
                   const NodeSet& search, double tol_touch = 1e-9);

/// Contact at z0 != 0 must have a vertex on the same side of {z=0}.
bool vertex_sign_check(const TouchResult& t);

/// At a z = 0 contact, |h'(z_v)| <= |f^-(x_0)|/a; contacts where f > 0 are
/// inadmissible.
bool neumann_vertex_bound_check(const TouchResult& t, SParam s, double f_at_contact,
                                double tol = 1e-9);

struct AbpOptions {
    double supersol_tol = -1.0;  // < 0: derive from a truncation estimate
    double pinch_C = 0.0;        // 0: 2 (n Lambda + 1)/(lambda + 1)
    double tol_touch = 1e-9;
    bool from_above = false;     // subsolution variant, openings a < 0
};

struct AbpReport {
    double mu_A = 0.0;
    double mu_B = 0.0;
    double ratio = 0.0;
    double eps0 = 0.0;  // measured slack in the vertex-band hypothesis
    bool hypothesis_ok = false;
    int n_vertices = 0;
    int n_contacts = 0;
    int pinch_violations = 0;
    int pinch_checked = 0;
    std::vector<std::pair<int, int>> contacts;
};

/// Slides one paraboloid per grid vertex in B, aggregates contact cells into
/// mu_Phi(A) and compares with mu_Phi(B). U must pass the discrete
/// supersolution (resp. subsolution) check; contacts on the domain boundary
/// abort.
AbpReport abp_experiment(const XZField& U, SParam s, const CubeDesc& B, double a,
                         const Eigen::VectorXd& f_trace, const Eigen::VectorXd& ax,
                         double lambda, double Lambda, const AbpOptions& opt = {});

/// Discrete supersolution check: interior stencil residual <= tol and
/// one-sided Neumann >= f - tol on the z = 0 row. Returns the worst excess.
double supersolution_excess(const XZField& U, SParam s, const Eigen::VectorXd& ax,
                            const Eigen::VectorXd& f_trace);

struct ContactAaR {
    double a = 0.0, R = 0.0;
    CubeDesc B_v;
    std::vector<std::pair<int, int>> points;
    std::vector<Paraboloid> witnesses;

    bool contains(int i, int j) const;
};

/// All grid nodes of Q_{K2_hat R} where U <= aR and the tangent paraboloid of
/// opening a with vertex in B_v stays below U on Q_{K3_hat R}. B_v follows
/// the case split on whether Q_{K2_hat R} meets {z = 0} and whether the
/// center sits on it.
ContactAaR contact_A_aR(const XZField& U, SParam s, double a, double R,
                        const GeometryConstants& geo, const PointXZ& center,
                        double tol_touch = 1e-9);

/// mu_Phi of the union of grid cells centered at the given nodes.
double mu_cells(const XZGrid& g, SParam s, const std::vector<std::pair<int, int>>& nodes);

}  // namespace frac
