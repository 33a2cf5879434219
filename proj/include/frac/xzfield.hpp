#pragma once

#include <Eigen/Dense>
#include <vector>

#include "frac/common.hpp"

namespace frac {

/// Tensor grid in (x,z): uniform x nodes, arbitrary strictly increasing z
/// nodes (graded toward z = 0, or symmetric about it).
struct XZGrid {
    std::vector<double> x;
    std::vector<double> z;

    int nx() const { return static_cast<int>(x.size()); }
    int nz() const { return static_cast<int>(z.size()); }
    double dx() const { return x[1] - x[0]; }
    bool has_z0() const;
    int z0_index() const;  // -1 if z = 0 is not a node

    static std::vector<double> graded_z(double z_max, int m, double g);
};

struct XZField {
    XZGrid grid;
    Eigen::MatrixXd v;  // nx x nz

    XZField() = default;
    explicit XZField(const XZGrid& g)
        : grid(g), v(Eigen::MatrixXd::Zero(g.nx(), g.nz())) {}

    double at(int i, int j) const { return v(i, j); }
    double& at(int i, int j) { return v(i, j); }
    double sup_norm() const { return v.cwiseAbs().maxCoeff(); }
};

/// Half z-gap cell around node j, clipped to the grid extent.
Interval z_cell(const XZGrid& g, int j);
Interval x_cell(const XZGrid& g, int i);

}  // namespace frac
