#include <cmath>
#include <memory>

#include <doctest.h>

#include "collar/analytic.hpp"
#include "collar/errors.hpp"
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

BoundaryData constant_bd() {
    BoundaryData bd;
    auto fam = std::make_shared<ConstantFamily>();
    bd.inner = fam;
    bd.outer = fam;
    return bd;
}

State flat_state(const Grid& grid) {
    State s(grid);
    sample_metric(flat_metric(), 0.0, s.g);
    s.k.fill(0.0);
    s.v.fill(0.0);
    s.phi.fill(1.0);
    return s;
}

// traceless tangential k bump, vanishing at the faces
void add_tt_bump(State& s, double eps) {
    const Grid& g = s.g.grid();
    double L = -g.spec().x3_min;
    for (int i3 = -2; i3 <= g.n3() + 1; ++i3) {
        double xi = (g.x3(i3) - g.spec().x3_min) / L;
        double b = std::sin(M_PI * xi);
        b *= b;
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                s.k(0, 0, i1, i2, i3) = eps * b;
                s.k(1, 1, i1, i2, i3) = -eps * b;
                s.k(0, 1, i1, i2, i3) = 0.5 * eps * b;
            }
    }
}

} // namespace

TEST_CASE("flat data are a fixed point of the integrator") {
    Grid grid(spec_n(8, 8, 8));
    EvolveConfig cfg;
    cfg.t_end = 0.2;
    Evolver ev(grid, cfg, constant_bd());
    State s = flat_state(grid);
    ev.initialize(s);
    ev.run(s);
    CHECK(s.t == doctest::Approx(0.2));
    SymTensorField dg = s.g;
    SymTensorField flat(grid);
    sample_metric(flat_metric(), 0.0, flat);
    dg -= flat;
    CHECK(dg.max_abs_interior() < 1e-11);
    CHECK(s.k.max_abs_interior() < 1e-11);
    ScalarField dphi = s.phi;
    ScalarField one(grid);
    one.fill(1.0);
    dphi -= one;
    CHECK(dphi.max_abs_interior() < 1e-10);
}

TEST_CASE("stable step follows the coordinate wave speeds") {
    Grid grid(spec_n(8, 8, 16));
    State s = flat_state(grid);
    GeometryData geo(grid);
    build_geometry(s.g, geo);
    double dt = cfl_dt(s, geo, 0.25);
    CHECK(dt == doctest::Approx(0.25 * grid.h3()).epsilon(1e-12));
}

TEST_CASE("initial kdot matches the closed-form second variation") {
    AnalyticMetric m = random_metric(19, 0.1);
    auto err = [&](int n) {
        Grid grid(spec_n(n, n, n));
        State s(grid);
        sample_solution(m, 0.0, s.g, s.k, s.v, s.phi);
        GeometryData geo(grid);
        SymTensorField gc = s.g;
        build_geometry(gc, geo);
        SymTensorField kd = initial_kdot(s, geo);
        double e = 0.0;
        for (int i3 = 0; i3 < grid.n3(); ++i3)
            for (int i2 = 0; i2 < grid.n2(); ++i2)
                for (int i1 = 0; i1 < grid.n1(); ++i1) {
                    ContinuumPoint p = continuum_point(m, 0.0, grid.x1(i1), grid.x2(i2),
                                                       grid.x3(i3));
                    // closed form: -phi^{-1} Hess phi + Ric + k trk - 2 k.k
                    for (int a = 0; a < 3; ++a)
                        for (int b = a; b < 3; ++b) {
                            int c = SymTensorField::comp(a, b);
                            double kk = 0.0;
                            for (int l = 0; l < 3; ++l)
                                for (int mj = 0; mj < 3; ++mj)
                                    kk += p.k[SymTensorField::comp(a, l)] * p.gi[SymTensorField::comp(l, mj)] *
                                          p.k[SymTensorField::comp(mj, b)];
                            double exact = -p.hess_phi[c] / p.phi + p.ric[c] +
                                           p.k[c] * p.trk - 2.0 * kk;
                            e = std::max(e, std::abs(kd[c](i1, i2, i3) - exact));
                        }
                }
        return e;
    };
    double e0 = err(10), e1 = err(20);
    CHECK(std::log2(e0 / e1) > 1.6);
}

TEST_CASE("wave-equation right side converges to the continuum jets") {
    AnalyticMetric m = random_metric(29, 0.1);
    const double t = 0.15;
    auto err = [&](int n) {
        Grid grid(spec_n(n, n, n));
        State s(grid);
        s.t = t;
        sample_solution(m, t, s.g, s.k, s.v, s.phi);
        GeometryData geo(grid);
        SymTensorField gc = s.g;
        build_geometry(gc, geo);
        ScalarField dtphi(grid);
        for (int i3 = -2; i3 <= grid.n3() + 1; ++i3)
            for (int i2 = 0; i2 < grid.n2(); ++i2)
                for (int i1 = 0; i1 < grid.n1(); ++i1)
                    dtphi(i1, i2, i3) = continuum_point(m, t, grid.x1(i1), grid.x2(i2),
                                                        grid.x3(i3))
                                            .dtphi;
        RhsOut out(grid);
        eval_rhs(s, geo, dtphi, out);
        double e = 0.0;
        for (int i3 = 0; i3 < grid.n3(); ++i3)
            for (int i2 = 0; i2 < grid.n2(); ++i2)
                for (int i1 = 0; i1 < grid.n1(); ++i1) {
                    ContinuumPoint p = continuum_point(m, t, grid.x1(i1), grid.x2(i2),
                                                       grid.x3(i3));
                    for (int c = 0; c < 6; ++c) {
                        double exact = p.phi * (p.lap_k[c] + p.wave_rhs[c]);
                        e = std::max(e, std::abs(out.dv[c](i1, i2, i3) - exact));
                        e = std::max(e, std::abs(out.dk[c](i1, i2, i3) - p.phi * p.v[c]));
                        e = std::max(e,
                                     std::abs(out.dg[c](i1, i2, i3) + 2.0 * p.phi * p.k[c]));
                    }
                }
        return e;
    };
    double e0 = err(10), e1 = err(20);
    CHECK(std::log2(e0 / e1) > 1.6);
}

TEST_CASE("manufactured solution is tracked at second order") {
    auto err = [&](int n) {
        Grid grid(spec_n(n, 4, n));
        auto mms = std::make_shared<MmsForcing>(MmsForcing{mms_metric_x1x3(0.05, 1.0)});
        EvolveConfig cfg;
        cfg.t_end = 0.1;
        Evolver ev(grid, cfg, constant_bd(), mms);
        State s(grid);
        sample_solution(mms->metric, 0.0, s.g, s.k, s.v, s.phi);
        ev.initialize(s, false);
        ev.run(s);
        State ex(grid);
        sample_solution(mms->metric, s.t, ex.g, ex.k, ex.v, ex.phi);
        ex.g -= s.g;
        ex.k -= s.k;
        return std::max(ex.g.max_abs_interior(), ex.k.max_abs_interior());
    };
    double e0 = err(8), e1 = err(16);
    double rate = std::log2(e0 / e1);
    CHECK(rate > 1.5);
    CHECK(rate < 2.6);
}

TEST_CASE("sweep iteration reaches the direct fixed-step solution") {
    Grid grid(spec_n(6, 6, 10));
    EvolveConfig cfg;
    cfg.dt = 0.02;
    cfg.t_end = 0.1;
    BoundaryData bd = constant_bd();

    State init = flat_state(grid);
    add_tt_bump(init, 1e-4);
    PicardResult pr = picard_solve(init, cfg, bd, 1e-13, 80);
    CHECK(pr.converged);
    for (std::size_t i = 1; i < pr.deltas.size(); ++i)
        CHECK(pr.deltas[i] <= pr.deltas[i - 1] * 1.5);

    State s = flat_state(grid);
    add_tt_bump(s, 1e-4);
    Evolver ev(grid, cfg, bd);
    ev.initialize(s);
    ev.run(s);
    SymTensorField dk = s.k;
    dk -= pr.state.k;
    SymTensorField dg = s.g;
    dg -= pr.state.g;
    CHECK(dk.max_abs_interior() < 1e-9);
    CHECK(dg.max_abs_interior() < 1e-9);
}

TEST_CASE("sweep iteration requires a fixed step") {
    Grid grid(spec_n(4, 4, 8));
    EvolveConfig cfg;
    cfg.dt = 0.0;
    State init = flat_state(grid);
    CHECK_THROWS_AS(picard_solve(init, cfg, constant_bd()), config_error);
}

TEST_CASE("step count guard trips") {
    Grid grid(spec_n(4, 4, 8));
    EvolveConfig cfg;
    cfg.t_end = 10.0;
    cfg.max_steps = 3;
    Evolver ev(grid, cfg, constant_bd());
    State s = flat_state(grid);
    ev.initialize(s);
    CHECK_THROWS_AS(ev.run(s), solver_error);
}
