#pragma once

#include <array>
#include <vector>

#include "collar/grid.hpp"
#include "collar/jets.hpp"

namespace collar {

using Jet4 = JetN<4>; // variables: 0 = t, 1..3 = x^1..x^3

// Closed-form scalar: constant + sum of products of cosines, one factor per
// coordinate. Cheap to evaluate pointwise, and exact derivatives of any order
// come from the jet form.
struct TrigMode {
    double amp = 0.0;
    std::array<double, 4> freq{};   // 0 entries make the factor constant
    std::array<double, 4> phase{};
};

struct AnalyticScalar {
    double constant = 0.0;
    std::vector<TrigMode> modes;

    double value(double t, double x1, double x2, double x3) const;
    Jet4 jet(const std::array<Jet4, 4>& y) const;
    int active_mask() const; // bit v set if the field depends on coordinate v
};

struct AnalyticMetric {
    std::array<AnalyticScalar, 6> g; // component order 11,12,13,22,23,33
    AnalyticScalar phi;
    int active_mask() const;
};

struct AnalyticSym {
    std::array<AnalyticScalar, 6> comp;
};

// All continuum quantities of the reduced system at one spacetime point,
// derived from exact jets of (g, phi) with k = -phi^{-1} dt g / 2 and
// v = phi^{-1} dt k. Serves as the independent oracle for the grid operators
// and as the manufactured-solution source generator.
struct ContinuumPoint {
    double g[6], gi[6];
    double phi, dtphi, grad_phi[3];
    double gamma[3][3][3], dtgamma[3][3][3];
    double ric[6], rscal;
    double hess_phi[6], lap_phi;
    double k[6], v[6], dtv[6];
    double trk, trv, k2;
    double lap_k[6];
    double wave_rhs[6]; // lower-order terms of the wave equation for k
    double mms_Sv[6], mms_Sphi;
    double st_ric[6], st_r00, st_gi[3]; // curvature of -phi^2 dt^2 + g
};

ContinuumPoint continuum_point(const AnalyticMetric& m, double t, double x1, double x2, double x3);

AnalyticMetric flat_metric();
// Manufactured solutions: smooth non-flat metrics with phi = 1 on both faces.
// depth is |x3_min|.
AnalyticMetric mms_metric_x3(double eps, double depth);
AnalyticMetric mms_metric_x1x3(double eps, double depth);
// Seeded smooth fields with full (t, x) variation, amplitude eps.
AnalyticMetric random_metric(unsigned seed, double eps);
AnalyticSym random_sym(unsigned seed, double eps);

// Sampling on the grid, filling every ghost layer from the closed form.
void sample_metric(const AnalyticMetric& m, double t, SymTensorField& g);
void sample_sym(const AnalyticSym& s, double t, SymTensorField& out);
void sample_scalar(const AnalyticScalar& s, double t, ScalarField& out);
// g, k, v, phi of the exact solution attached to the metric family.
void sample_solution(const AnalyticMetric& m, double t, SymTensorField& g, SymTensorField& k,
                     SymTensorField& v, ScalarField& phi);
// Defects of the exact solution under the discrete-side equations.
void sample_mms_sources(const AnalyticMetric& m, double t, SymTensorField& Sv, ScalarField& Sphi);

} // namespace collar
