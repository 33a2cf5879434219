#pragma once

#include "frac/harnack.hpp"
#include "frac/report.hpp"

namespace frac {

/// One random supersolution of the degenerate problem on a symmetric (x,z)
/// box: a  u_xx + |z|^{2-1/s} u_zz = -q <= 0 with Neumann data f >= 0 on the
/// trace and positive outer boundary data.
struct SupersolutionSample {
    XZField U;
    Eigen::VectorXd f_trace;
    Eigen::VectorXd ax;
    double lambda = 1.0, Lambda = 1.0;
};

SupersolutionSample make_random_supersolution(SParam s, int nx, int nz_half, double z_max,
                                              double lambda, double Lambda,
                                              std::uint64_t seed);

/// Executes one subcommand and returns the report; file outputs are written
/// under cfg.out. This is the whole CLI behind a library call.
ExperimentReport run(const RunConfig& cfg);

}  // namespace frac
