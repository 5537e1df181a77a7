#include <cmath>
#include <memory>

#include <doctest.h>

#include "collar/analytic.hpp"
#include "collar/diagnostics.hpp"
#include "collar/evolution.hpp"
#include "collar/geometry.hpp"
#include "collar/grid.hpp"

using namespace collar;

namespace {

GridSpec spec_n(int n1, int n2, int n3) {
    GridSpec s;
    s.n1 = n1;
    s.n2 = n2;
    s.n3 = n3;
    s.x3_min = -1.0;
    return s;
}

State sampled_state(const Grid& grid, const AnalyticMetric& m, double t) {
    State s(grid);
    s.t = t;
    sample_solution(m, t, s.g, s.k, s.v, s.phi);
    return s;
}

GeometryData geometry_of(State& s) {
    GeometryData geo(s.g.grid());
    SymTensorField gc = s.g;
    build_geometry(gc, geo);
    return geo;
}

} // namespace

TEST_CASE("constraints vanish on flat data and match the pure-trace oracle") {
    Grid grid(spec_n(8, 8, 10));
    State s = sampled_state(grid, flat_metric(), 0.0);
    GeometryData geo = geometry_of(s);
    ScalarField ham = hamiltonian(s.g, s.k, geo);
    CHECK(ham.max_abs_interior() < 1e-13);
    auto mom = momentum(s.k, geo);
    for (int j = 0; j < 3; ++j) CHECK(mom[j].max_abs_interior() < 1e-13);

    // k = c g on flat g: R=0, (trk)^2 = 9c^2, |k|^2 = 3c^2, residual 6c^2
    const double c = 0.4;
    SymTensorField kc = s.g;
    kc *= c;
    ScalarField ham2 = hamiltonian(s.g, kc, geo);
    for (int i3 = 0; i3 < grid.n3(); ++i3)
        CHECK(ham2(2, 3, i3) == doctest::Approx(6.0 * c * c).epsilon(1e-11));
    auto mom2 = momentum(kc, geo);
    for (int j = 0; j < 3; ++j) CHECK(mom2[j].max_abs_interior() < 1e-12);
}

TEST_CASE("reconstructed spacetime curvature matches the independent 4d oracle") {
    AnalyticMetric m = random_metric(13, 0.1);
    const double t = 0.2;
    auto err = [&](int n) {
        Grid grid(spec_n(n, n, n));
        State s = sampled_state(grid, m, t);
        GeometryData geo = geometry_of(s);
        SpacetimeCurvature rc = spacetime_ricci(s, geo);
        double e = 0.0;
        for (int i3 = 0; i3 < grid.n3(); ++i3)
            for (int i2 = 0; i2 < grid.n2(); ++i2)
                for (int i1 = 0; i1 < grid.n1(); ++i1) {
                    ContinuumPoint p = continuum_point(m, t, grid.x1(i1), grid.x2(i2),
                                                       grid.x3(i3));
                    for (int c = 0; c < 6; ++c)
                        e = std::max(e, std::abs(rc.Rij[c](i1, i2, i3) - p.st_ric[c]));
                    e = std::max(e, std::abs(rc.R00(i1, i2, i3) - p.st_r00));
                    for (int j = 0; j < 3; ++j)
                        e = std::max(e, std::abs(rc.Gi[j](i1, i2, i3) - p.st_gi[j]));
                }
        return e;
    };
    double e0 = err(10), e1 = err(20);
    CHECK(std::log2(e0 / e1) > 1.6);
}

TEST_CASE("einstein tensor algebra on a pure-trace curvature") {
    Grid grid(spec_n(6, 6, 8));
    State s = sampled_state(grid, flat_metric(), 0.0);
    GeometryData geo = geometry_of(s);
    const double lam = 0.7;
    SpacetimeCurvature rc(grid);
    for (int c = 0; c < 6; ++c) {
        rc.Rij[c] = s.g[c];
        rc.Rij[c] *= lam;
    }
    rc.R00.fill(0.0);
    for (int j = 0; j < 3; ++j) rc.Gi[j].fill(0.0);
    EinsteinTensor et = einstein_tensor(rc, s, geo);
    // R4 = 3 lam, G_ij = lam g_ij - 3/2 lam g_ij = -1/2 lam g_ij
    for (int i3 = 0; i3 < grid.n3(); ++i3) {
        CHECK(et.R(2, 2, i3) == doctest::Approx(3.0 * lam).epsilon(1e-12));
        CHECK(et.Gij(0, 0, 2, 2, i3) == doctest::Approx(-0.5 * lam).epsilon(1e-12));
        CHECK(std::abs(et.Gij(0, 1, 2, 2, i3)) < 1e-13);
    }
}

TEST_CASE("gtilde reduces to the momentum reconstruction when trk vanishes") {
    Grid grid(spec_n(8, 8, 10));
    State s = sampled_state(grid, flat_metric(), 0.0);
    // traceless k
    for (int i3 = -2; i3 <= grid.n3() + 1; ++i3)
        for (int i2 = 0; i2 < grid.n2(); ++i2)
            for (int i1 = 0; i1 < grid.n1(); ++i1) {
                double a = 0.1 * std::sin(grid.x1(i1)) * std::cos(grid.x2(i2));
                s.k(0, 0, i1, i2, i3) = a;
                s.k(1, 1, i1, i2, i3) = -a;
                s.k(0, 1, i1, i2, i3) = 0.05 * std::cos(grid.x1(i1));
            }
    GeometryData geo = geometry_of(s);
    SpacetimeCurvature rc = spacetime_ricci(s, geo);
    EinsteinTensor et = einstein_tensor(rc, s, geo);
    for (int j = 0; j < 3; ++j) {
        ScalarField d = et.Gtilde[j];
        d -= rc.Gi[j];
        CHECK(d.max_abs_interior() < 1e-11);
    }
}

TEST_CASE("zero-order energy matches the constant-profile quadrature") {
    Grid grid(spec_n(8, 8, 12));
    State s = sampled_state(grid, flat_metric(), 0.0);
    const double w = 0.3;
    for (int i3 = -2; i3 <= grid.n3() + 1; ++i3)
        for (int i2 = 0; i2 < grid.n2(); ++i2)
            for (int i1 = 0; i1 < grid.n1(); ++i1) s.v(2, 2, i1, i2, i3) = w;
    GeometryData geo = geometry_of(s);
    double e = energy_k(s, geo, 0);
    // only the e0 k_NN block contributes: w^2 times the collar volume
    CHECK(e == doctest::Approx(w * w * 4.0 * M_PI * M_PI).epsilon(1e-12));
}

TEST_CASE("energies are quadratic in the perturbation amplitude") {
    Grid grid(spec_n(8, 8, 10));
    AnalyticMetric m = random_metric(37, 0.1);
    State s = sampled_state(grid, flat_metric(), 0.0);
    State noise = sampled_state(grid, m, 0.1);
    for (int c = 0; c < 6; ++c) {
        s.k[c] = noise.k[c];
        s.v[c] = noise.v[c];
    }
    GeometryData geo = geometry_of(s);
    double e1 = energy_k(s, geo, 0);
    s.k *= 2.0;
    s.v *= 2.0;
    double e4 = energy_k(s, geo, 0);
    CHECK(e4 == doctest::Approx(4.0 * e1).epsilon(1e-12));
    CHECK(e1 > 0.0);
}

TEST_CASE("total energy adds nonnegative deviation norms") {
    Grid grid(spec_n(6, 6, 10));
    AnalyticMetric m = random_metric(41, 0.05);
    State s = sampled_state(grid, m, 0.1);
    GeometryData geo = geometry_of(s);
    SymTensorField g0(grid);
    sample_metric(flat_metric(), 0.0, g0);
    ScalarField dtphi(grid);
    dtphi.fill(0.0);
    double ek = energy_k(s, geo, 0);
    double et = energy_total(s, geo, 0, g0, dtphi);
    CHECK(et >= ek);
    SymTensorField self = s.g;
    double et_self = energy_total(s, geo, 0, self, dtphi);
    CHECK(et_self >= ek);
    CHECK(et_self <= et);
}

TEST_CASE("sobolev norm of a constant is its square times the volume") {
    Grid grid(spec_n(8, 8, 10));
    State s = sampled_state(grid, flat_metric(), 0.0);
    GeometryData geo = geometry_of(s);
    ScalarField u(grid);
    u.fill(3.0);
    for (int r = 0; r <= 3; ++r)
        CHECK(hnorm2(u, geo, s.g, r) == doctest::Approx(9.0 * 4.0 * M_PI * M_PI).epsilon(1e-12));
}

TEST_CASE("trace identity holds at second order and detects a wrong lapse") {
    AnalyticMetric m = random_metric(47, 0.08);
    EllipticConfig cfg;
    cfg.rel_tol = 1e-12;
    auto resid = [&](int n) {
        Grid grid(spec_n(n, n, n));
        State s = sampled_state(grid, m, 0.1);
        return trace_identity_check(s, cfg);
    };
    double r0 = resid(10), r1 = resid(20);
    CHECK(std::log2(r0 / r1) > 1.5);

    // a lapse far from solving the elliptic equation leaves an O(1) residual,
    // visible once the discretization error is below it
    Grid grid(spec_n(40, 40, 40));
    State s = sampled_state(grid, m, 0.1);
    State bad = s;
    for (int i3 = -2; i3 <= grid.n3() + 1; ++i3)
        for (int i2 = 0; i2 < grid.n2(); ++i2)
            for (int i1 = 0; i1 < grid.n1(); ++i1)
                bad.phi(i1, i2, i3) = 1.0 + 0.4 * std::cos(M_PI * grid.x3(i3));
    double honest = trace_identity_check(s, cfg);
    double broken = trace_identity_check(bad, cfg, false);
    CHECK(broken > 10.0 * honest);
}

TEST_CASE("propagation residual vanishes on the flat trajectory") {
    Grid grid(spec_n(6, 6, 8));
    State sm = sampled_state(grid, flat_metric(), 0.0);
    State s0 = sampled_state(grid, flat_metric(), 0.0);
    State sp = sampled_state(grid, flat_metric(), 0.0);
    sm.t = 0.0;
    s0.t = 0.01;
    sp.t = 0.02;
    CHECK(propagation_check(sm, s0, sp) < 1e-10);
}

TEST_CASE("convergence rate estimator") {
    ConvergenceRate r = convergence_rate(4.0, 1.0, 0.25);
    CHECK(r.rate01 == doctest::Approx(2.0));
    CHECK(r.rate12 == doctest::Approx(2.0));
    CHECK(r.monotone);
    ConvergenceRate bad = convergence_rate(1.0, 2.0, 0.5);
    CHECK_FALSE(bad.monotone);
}

TEST_CASE("full record is finite and flat-zero") {
    Grid grid(spec_n(8, 8, 8));
    BoundaryData bd;
    auto fam = std::make_shared<ConstantFamily>();
    bd.inner = fam;
    bd.outer = fam;
    EvolveConfig cfg;
    cfg.t_end = 0.01;
    Evolver ev(grid, cfg, bd);
    State s(grid);
    sample_metric(flat_metric(), 0.0, s.g);
    s.k.fill(0.0);
    s.v.fill(0.0);
    s.phi.fill(1.0);
    ev.initialize(s);
    GeometryData geo = geometry_of(s);
    SymTensorField g0 = s.g;
    ScalarField dtphi(grid);
    dtphi.fill(0.0);
    DiagnosticsRecord rec = compute_diagnostics(s, geo, bd, g0, dtphi, 0, &s, 1.0);
    CHECK(rec.ham_l2 < 1e-10);
    CHECK(rec.trk_max < 1e-10);
    CHECK(rec.einstein_l2 < 1e-10);
    CHECK(rec.energy_k < 1e-10);
    CHECK(rec.energy_total < 1e-10);
    CHECK(rec.c_bd == 0.0);
    CHECK(rec.bc_knn_max < 1e-12);
}
