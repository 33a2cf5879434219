#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "frac/common.hpp"

namespace frac {

/// Uniform tensor grid over a 1-D interval or 2-D box, nodes including the
/// boundary. Dirichlet problems keep grid functions in the discrete C_0 space
/// (zero on the boundary mask).
struct GridSpec {
    int dim = 1;
    double lo[2] = {0.0, 0.0};
    double hi[2] = {1.0, 1.0};
    int n[2] = {0, 1};  // node counts per axis (n[1] == 1 in 1-D)

    static GridSpec line(double a, double b, int nodes);
    static GridSpec box(double ax, double bx, int nx, double ay, double by, int ny);

    double h(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
    double coord(int axis, int i) const { return lo[axis] + i * h(axis); }
    int size() const { return n[0] * n[1]; }
    int idx(int i, int j = 0) const { return i * n[1] + j; }
    bool is_boundary(int i, int j = 0) const {
        if (i == 0 || i == n[0] - 1) return true;
        return dim == 2 && (j == 0 || j == n[1] - 1);
    }
    int interior_count() const;
    bool same_as(const GridSpec& o) const;
};

struct GridFunction {
    GridSpec grid;
    Eigen::VectorXd values;

    GridFunction() = default;
    explicit GridFunction(const GridSpec& g) : grid(g), values(Eigen::VectorXd::Zero(g.size())) {}

    double& at(int i, int j = 0) { return values[grid.idx(i, j)]; }
    double at(int i, int j = 0) const { return values[grid.idx(i, j)]; }
    double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
    double min() const { return values.minCoeff(); }

    /// Zero out the boundary mask.
    void enforce_dirichlet();
    bool is_dirichlet(double tol = 0.0) const;

    static GridFunction from_fn(const GridSpec& g, const std::function<double(double)>& f);
    static GridFunction from_fn2(const GridSpec& g,
                                 const std::function<double(double, double)>& f);
};

/// Sampled symmetric coefficient matrix a^{ij}(x) with certified ellipticity
/// bounds. In 1-D only a11 is used.
struct CoeffField {
    GridSpec grid;
    Eigen::VectorXd a11, a12, a22;
    double lambda = 1.0;
    double Lambda = 1.0;

    static CoeffField constant(const GridSpec& g, double a);
    static CoeffField diagonal(const GridSpec& g, double ax, double ay);
    static CoeffField from_fn(const GridSpec& g,
                              const std::function<void(double, double, double&, double&, double&)>& f);

    /// Recomputes (lambda, Lambda) from per-node eigenvalues; throws naming the
    /// offending node if a field is not symmetric positive definite.
    void certify();
};

// CSV I/O. Grid functions: "i[,j],value". Coefficients: "i[,j],a11[,a12,a22]".
void write_grid_function_csv(const GridFunction& u, const std::string& path);
GridFunction read_grid_function_csv(const GridSpec& g, const std::string& path);
void write_coeff_csv(const CoeffField& c, const std::string& path);
CoeffField read_coeff_csv(const GridSpec& g, const std::string& path);

}  // namespace frac
