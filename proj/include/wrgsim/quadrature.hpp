#pragma once
#include <array>
#include <functional>

namespace wrgsim {

struct QuadOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-13;
  int max_depth = 48;
};

struct QuadResult {
  double value = 0;
  double error = 0;
  long evaluations = 0;
  bool converged = true;
};

// 8-point Gauss-Legendre on [-1,1]
const std::array<double, 8>& gl8_nodes();
const std::array<double, 8>& gl8_weights();

// Fixed m-point Gauss-Legendre (m <= 8 supported via tables for 1..8).
double gauss_fixed(const std::function<double(double)>& f, double a, double b, int m);

// Adaptive bisection with an 8-point rule per panel. Nodes never touch the
// endpoints, so integrable endpoint singularities are fine.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opt = {});

// Iterated adaptive integral over [ax,bx] x [ay,by].
QuadResult integrate2d(const std::function<double(double, double)>& f, double ax, double bx,
                       double ay, double by, const QuadOptions& opt = {});

// m x m tensor Gauss average of f over the cell.
double cell_average(const std::function<double(double, double)>& f, double ax, double bx,
                    double ay, double by, int m);

}  // namespace wrgsim
