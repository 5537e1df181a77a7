#pragma once

#include <array>
#include <optional>

#include "collar/boundary.hpp"
#include "collar/evolution.hpp"
#include "collar/geometry.hpp"
#include "collar/grid.hpp"
#include "collar/lapse.hpp"

namespace collar {

// Vacuum constraint residuals of a slice.
ScalarField hamiltonian(const SymTensorField& g, const SymTensorField& k,
                        const GeometryData& geo);
std::array<ScalarField, 3> momentum(const SymTensorField& k, const GeometryData& geo);

// Spacetime curvature reconstructed from the slice data and the evolution
// variables: Rij from the second variation, R00 from the trace evolution and
// the lapse term, Gi from the contracted Codazzi identity.
struct SpacetimeCurvature {
    SymTensorField Rij;
    ScalarField R00; // frame component against the unit time normal
    std::array<ScalarField, 3> Gi;
    explicit SpacetimeCurvature(const Grid& g) : Rij(g), R00(g), Gi{ScalarField(g), ScalarField(g), ScalarField(g)} {}
};
SpacetimeCurvature spacetime_ricci(const State& s, const GeometryData& geo);

struct EinsteinTensor {
    SymTensorField Gij;
    ScalarField R;   // 4d scalar curvature, equals -trace of G
    std::array<ScalarField, 3> Gtilde;
    explicit EinsteinTensor(const Grid& g) : Gij(g), R(g), Gtilde{ScalarField(g), ScalarField(g), ScalarField(g)} {}
};
EinsteinTensor einstein_tensor(const SpacetimeCurvature& rc, const State& s,
                               const GeometryData& geo);

// Quadratic boundary-adapted energy of the wave variables, r in {0, 1}.
// The r = 1 form needs the previous accepted slice. Time derivatives of frame
// scalars are represented through v, spatial ones through coordinate
// derivatives; both faces' frame blocks carry the coefficient 4 on k_NA.
double energy_k(const State& s, const GeometryData& geo, int r,
                const State* prev = nullptr, double dt = 0.0);

// energy_k plus Sobolev norms of the metric deviation from g0, of phi - 1,
// and of the lapse velocity.
double energy_total(const State& s, const GeometryData& geo, int r,
                    const SymTensorField& g0, const ScalarField& dtphi,
                    const State* prev = nullptr, double dt = 0.0);

// Sobolev norm sum_{r1+r2<=r} int (N^{r2} d^{r1} u)^2 vol_g, N the unit
// normal of the x3 level sets. u must be valid two layers into the ghosts.
double hnorm2(const ScalarField& u, const GeometryData& geo, const SymTensorField& g, int r);

// Residual of the traced wave identity
//   e0^2 trk - Lap trk = e0[(trk)^2] + 4 phi^{-1} (grad phi . G)
// with e0^2 trk assembled from the traced discrete wave operator. phi and its
// time derivative are produced by the elliptic solves unless solve_phi is
// false (then s.phi and dtphi = 0 are used as given).
double trace_identity_check(const State& s, const EllipticConfig& cfg, bool solve_phi = true);

// Residual norm of the propagation identity for the Einstein tensor over a
// centered window of three prepared slices (sm, s0, sp at t0 -/+ dt).
double propagation_check(const State& sm, const State& s0, const State& sp);

// L2 norm with the metric volume element, interior including the faces.
double l2_norm(const ScalarField& f, const SymTensorField& g);
double l2_norm(const SymTensorField& f, const SymTensorField& g);

struct ConvergenceRate {
    double rate01 = 0.0; // between the coarse and middle errors
    double rate12 = 0.0;
    bool monotone = false;
};
ConvergenceRate convergence_rate(double e0, double e1, double e2);

struct DiagnosticsRecord {
    double t = 0.0;
    double ham_l2 = 0.0;
    double mom_l2[3] = {0.0, 0.0, 0.0};
    double trk_l2 = 0.0, trk_max = 0.0;
    double ricci_ij_l2 = 0.0, ricci_00_l2 = 0.0, gi_l2 = 0.0;
    double einstein_l2 = 0.0, gtilde_l2 = 0.0;
    double energy_k = 0.0, energy_total = 0.0, c_bd = 0.0;
    double bc_knn_max = 0.0, bc_kna_max = 0.0, bc_kcc_max = 0.0;
};

DiagnosticsRecord compute_diagnostics(const State& s, const GeometryData& geo,
                                      const BoundaryData& bd, const SymTensorField& g0,
                                      const ScalarField& dtphi, int r,
                                      const State* prev = nullptr, double dt = 0.0);

} // namespace collar
