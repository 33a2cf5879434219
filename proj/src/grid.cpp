#include "frac/grid.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace frac {

GridSpec GridSpec::line(double a, double b, int nodes) {
    require(b > a, "GridSpec::line: need b > a");
    require(nodes >= 10, "GridSpec::line: need >= 8 interior nodes");
    GridSpec g;
    g.dim = 1;
    g.lo[0] = a;
    g.hi[0] = b;
    g.n[0] = nodes;
    g.n[1] = 1;
    return g;
}

GridSpec GridSpec::box(double ax, double bx, int nx, double ay, double by, int ny) {
    require(bx > ax && by > ay, "GridSpec::box: degenerate box");
    require(nx >= 10 && ny >= 10, "GridSpec::box: need >= 8 interior nodes per axis");
    GridSpec g;
    g.dim = 2;
    g.lo[0] = ax;
    g.hi[0] = bx;
    g.n[0] = nx;
    g.lo[1] = ay;
    g.hi[1] = by;
    g.n[1] = ny;
    return g;
}

int GridSpec::interior_count() const {
    return dim == 1 ? n[0] - 2 : (n[0] - 2) * (n[1] - 2);
}

bool GridSpec::same_as(const GridSpec& o) const {
    return dim == o.dim && n[0] == o.n[0] && n[1] == o.n[1] && lo[0] == o.lo[0] &&
           hi[0] == o.hi[0] && lo[1] == o.lo[1] && hi[1] == o.hi[1];
}

void GridFunction::enforce_dirichlet() {
    for (int i = 0; i < grid.n[0]; ++i)
        for (int j = 0; j < grid.n[1]; ++j)
            if (grid.is_boundary(i, j)) values[grid.idx(i, j)] = 0.0;
}

bool GridFunction::is_dirichlet(double tol) const {
    for (int i = 0; i < grid.n[0]; ++i)
        for (int j = 0; j < grid.n[1]; ++j)
            if (grid.is_boundary(i, j) && std::abs(values[grid.idx(i, j)]) > tol) return false;
    return true;
}

GridFunction GridFunction::from_fn(const GridSpec& g, const std::function<double(double)>& f) {
    require(g.dim == 1, "from_fn: 1-D grid expected");
    GridFunction u(g);
    for (int i = 0; i < g.n[0]; ++i) u.values[i] = f(g.coord(0, i));
    return u;
}

GridFunction GridFunction::from_fn2(const GridSpec& g,
                                    const std::function<double(double, double)>& f) {
    require(g.dim == 2, "from_fn2: 2-D grid expected");
    GridFunction u(g);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) u.values[g.idx(i, j)] = f(g.coord(0, i), g.coord(1, j));
    return u;
}

CoeffField CoeffField::constant(const GridSpec& g, double a) {
    return diagonal(g, a, a);
}

CoeffField CoeffField::diagonal(const GridSpec& g, double ax, double ay) {
    CoeffField c;
    c.grid = g;
    c.a11 = Eigen::VectorXd::Constant(g.size(), ax);
    c.a12 = Eigen::VectorXd::Zero(g.size());
    c.a22 = Eigen::VectorXd::Constant(g.size(), ay);
    c.certify();
    return c;
}

CoeffField CoeffField::from_fn(
    const GridSpec& g,
    const std::function<void(double, double, double&, double&, double&)>& f) {
    CoeffField c;
    c.grid = g;
    c.a11.resize(g.size());
    c.a12.resize(g.size());
    c.a22.resize(g.size());
    for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
            double v11 = 0, v12 = 0, v22 = 0;
            f(g.coord(0, i), g.dim == 2 ? g.coord(1, j) : 0.0, v11, v12, v22);
            const int k = g.idx(i, j);
            c.a11[k] = v11;
            c.a12[k] = v12;
            c.a22[k] = v22;
        }
    }
    c.certify();
    return c;
}

void CoeffField::certify() {
    double lam = std::numeric_limits<double>::infinity();
    double Lam = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
        double e_min, e_max;
        if (grid.dim == 1) {
            e_min = e_max = a11[k];
        } else {
            const double tr = a11[k] + a22[k];
            const double det = a11[k] * a22[k] - a12[k] * a12[k];
            const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
            e_min = 0.5 * tr - disc;
            e_max = 0.5 * tr + disc;
        }
        if (!(e_min > 0.0))
            throw numerical_error("CoeffField: ellipticity failure at node " + std::to_string(k));
        lam = std::min(lam, e_min);
        Lam = std::max(Lam, e_max);
    }
    lambda = lam;
    Lambda = Lam;
}

void write_grid_function_csv(const GridFunction& u, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot open " + path);
    out.precision(17);
    if (u.grid.dim == 1) {
        out << "i,value\n";
        for (int i = 0; i < u.grid.n[0]; ++i) out << i << "," << u.values[i] << "\n";
    } else {
        out << "i,j,value\n";
        for (int i = 0; i < u.grid.n[0]; ++i)
            for (int j = 0; j < u.grid.n[1]; ++j)
                out << i << "," << j << "," << u.at(i, j) << "\n";
    }
}

namespace {

std::vector<double> parse_csv_row(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

}  // namespace

GridFunction read_grid_function_csv(const GridSpec& g, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path);
    GridFunction u(g);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = parse_csv_row(line);
        if (g.dim == 1) {
            require(row.size() == 2, "grid csv: expected i,value");
            u.values[static_cast<int>(row[0])] = row[1];
        } else {
            require(row.size() == 3, "grid csv: expected i,j,value");
            u.at(static_cast<int>(row[0]), static_cast<int>(row[1])) = row[2];
        }
    }
    return u;
}

void write_coeff_csv(const CoeffField& c, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot open " + path);
    out.precision(17);
    if (c.grid.dim == 1) {
        out << "i,a11\n";
        for (int i = 0; i < c.grid.n[0]; ++i) out << i << "," << c.a11[i] << "\n";
    } else {
        out << "i,j,a11,a12,a22\n";
        for (int i = 0; i < c.grid.n[0]; ++i)
            for (int j = 0; j < c.grid.n[1]; ++j) {
                const int k = c.grid.idx(i, j);
                out << i << "," << j << "," << c.a11[k] << "," << c.a12[k] << "," << c.a22[k]
                    << "\n";
            }
    }
}

CoeffField read_coeff_csv(const GridSpec& g, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path);
    CoeffField c;
    c.grid = g;
    c.a11 = Eigen::VectorXd::Zero(g.size());
    c.a12 = Eigen::VectorXd::Zero(g.size());
    c.a22 = Eigen::VectorXd::Zero(g.size());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = parse_csv_row(line);
        if (g.dim == 1) {
            require(row.size() == 2, "coeff csv: expected i,a11");
            c.a11[static_cast<int>(row[0])] = row[1];
        } else {
            require(row.size() == 5, "coeff csv: expected i,j,a11,a12,a22");
            const int k = g.idx(static_cast<int>(row[0]), static_cast<int>(row[1]));
            c.a11[k] = row[2];
            c.a12[k] = row[3];
            c.a22[k] = row[4];
        }
    }
    c.certify();
    return c;
}

}  // namespace frac
