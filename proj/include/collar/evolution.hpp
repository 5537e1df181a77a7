#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "collar/analytic.hpp"
#include "collar/boundary.hpp"
#include "collar/geometry.hpp"
#include "collar/grid.hpp"
#include "collar/lapse.hpp"

namespace collar {

struct State {
    double t = 0.0;
    SymTensorField g, k, v;
    ScalarField phi;
    explicit State(const Grid& grid) : g(grid), k(grid), v(grid), phi(grid) {}
};

// Everything derived from g that the spatial operators need, valid one layer
// into the ghosts.
struct GeometryData {
    SymTensorField ginv;
    ChristoffelField gamma;
    NormalFrame frame;
    explicit GeometryData(const Grid& grid) : ginv(grid), gamma(grid), frame(grid) {}
};

// Fill g's ghost layers by extrapolation and rebuild the derived quantities.
void build_geometry(SymTensorField& g, GeometryData& geo);

// Initial time derivative of k consistent with the second variation of the
// metric on constraint-satisfying data:
//   v = phi^{-1} dt k = -phi^{-1} Hess phi + Ric + k trk - 2 k.k.
// Needs g ghosts, k ghosts (boundary-filled), phi with ghosts.
SymTensorField initial_kdot(const State& s, const GeometryData& geo);

// Largest stable step from the coordinate wave speeds phi * sqrt(g^{aa}).
double cfl_dt(const State& s, const GeometryData& geo, double cfl);

struct RhsOut {
    SymTensorField dg, dk, dv;
    explicit RhsOut(const Grid& grid) : dg(grid), dk(grid), dv(grid) {}
};

// Time derivatives of the first-order reduced system at a prepared state:
//   dt g = -2 phi k,  dt k = phi v,
//   dt v = phi (Lap k + lower-order wave terms + Sv).
// Needs g ghosts, geo, k with boundary-filled ghosts, phi and dtphi with
// ghosts. Output is valid on the interior including the faces.
void eval_rhs(const State& s, const GeometryData& geo, const ScalarField& dtphi,
              RhsOut& out, const SymTensorField* Sv = nullptr);

struct EvolveConfig {
    double cfl = 0.25;
    double dt = 0.0; // fixed step when positive, otherwise adaptive via cfl
    double t_end = 1.0;
    int max_steps = 1000000;
    EllipticConfig elliptic;
};

// Manufactured-solution forcing: faces and ghosts of all evolved fields track
// the closed-form solution while the interior is evolved with defect sources.
struct MmsForcing {
    AnalyticMetric metric;
};

// Classical RK4 on (g, k, v) with the lapse re-solved at every stage. The
// lapse time derivative entering the wave terms is taken from a quadratic fit
// through the accepted-step lapse history; the first step bootstraps it with
// an Euler predictor.
class Evolver {
public:
    Evolver(const Grid& grid, EvolveConfig cfg, BoundaryData bd,
            std::shared_ptr<const MmsForcing> mms = nullptr);

    // Fill ghosts, impose the boundary conditions, solve the initial lapse,
    // and (optionally) set v from the consistency condition.
    void initialize(State& s, bool compute_kdot = true);

    double step(State& s); // returns the step actually taken
    void run(State& s, const std::function<void(const State&, int)>& cb = nullptr);

    const EllipticStats& last_lapse() const { return lapse_stats_; }
    // Lapse derivative used for the next step (diagnostic access).
    ScalarField dtphi_at(double t) const;

private:
    void prepare(State& s, bool resolve_lapse = true);
    void push_history(const State& s);

    const Grid* grid_;
    EvolveConfig cfg_;
    BoundaryData bd_;
    std::shared_ptr<const MmsForcing> mms_;
    GeometryData geo_;
    EllipticStats lapse_stats_;
    std::vector<double> hist_t_;
    std::vector<ScalarField> hist_phi_;
    bool initialized_ = false;
};

struct PicardResult {
    State state;
    int iterations = 0;
    double delta = 0.0; // last sweep-to-sweep change of k at t_end
    std::vector<double> deltas; // one entry per sweep
    bool converged = false;
};

// Frozen-coefficient sweep iteration for the same time-discrete system: each
// sweep integrates the wave pair (k, v) with the metric, lapse, and lapse
// history frozen from the previous sweep, then updates g by the matching RK4
// quadrature of -2 phi k. A fixed point of the sweep map solves the same
// discrete equations as Evolver with a fixed step. Requires cfg.dt > 0.
PicardResult picard_solve(const State& init, EvolveConfig cfg, const BoundaryData& bd,
                          double tol = 1e-12, int max_sweeps = 60);

} // namespace collar
