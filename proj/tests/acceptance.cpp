// End-to-end acceptance checks. Each check prints exactly one PASS/FAIL line;
// the exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "collar/analytic.hpp"
#include "collar/boundary.hpp"
#include "collar/diagnostics.hpp"
#include "collar/evolution.hpp"
#include "collar/geometry.hpp"
#include "collar/grid.hpp"
#include "collar/lapse.hpp"

using namespace collar;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s: %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++failures;
}

void guarded(const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

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

// traceless tangential k bump, zero on the faces; fields depend on x3 only so
// the dynamics stay effectively one-dimensional
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
                s.k(0, 1, i1, i2, i3) = 0.5 * eps * b * std::cos(M_PI * xi);
            }
    }
}

// traceless bump k11 = -k22 = eps sin(pi xi) together with the metric
// correction g11 = 1 + a(x3) solving the linearized Hamiltonian constraint
// R = |k|^2, i.e. a'' = -2 eps^2 sin^2(pi xi); the residual violation is
// O(eps^4), so the trk drift of the run is discretization-dominated
void add_tt_bump_balanced(State& s, double eps) {
    const Grid& g = s.g.grid();
    double L = -g.spec().x3_min;
    double P = eps * eps * (L / M_PI) * (L / M_PI);
    for (int i3 = -2; i3 <= g.n3() + 1; ++i3) {
        double xi = (g.x3(i3) - g.spec().x3_min) / L;
        double u = M_PI * xi;
        double b = std::sin(u);
        double a = P * (0.5 * u * (M_PI - u) + 0.25 * (1.0 - std::cos(2.0 * u)));
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                s.k(0, 0, i1, i2, i3) = eps * b;
                s.k(1, 1, i1, i2, i3) = -eps * b;
                s.g(0, 0, i1, i2, i3) += a;
            }
    }
}

// x1-dependent transverse-traceless bump from the potential psi = sin(x1) b(x3):
// k12 = eps d3 psi, k23 = -eps d1 psi is exactly trace- and divergence-free on
// the flat background, so the only initial constraint violation is the O(eps^2)
// Hamiltonian term
void add_tt_bump_x1(State& s, double eps) {
    const Grid& g = s.g.grid();
    double L = -g.spec().x3_min;
    for (int i3 = -2; i3 <= g.n3() + 1; ++i3) {
        double xi = (g.x3(i3) - g.spec().x3_min) / L;
        double b = std::sin(M_PI * xi) * std::sin(M_PI * xi);
        double db = M_PI * std::sin(2.0 * M_PI * xi) / L;
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                s.k(0, 1, i1, i2, i3) = eps * std::sin(g.x1(i1)) * db;
                s.k(1, 2, i1, i2, i3) = -eps * std::cos(g.x1(i1)) * b;
            }
    }
}

// seeded smooth metric family varying in t and x3 only
AnalyticMetric metric_x3_seeded(unsigned seed, double eps) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    AnalyticMetric m = flat_metric();
    auto mode = [&](double amp) {
        TrigMode md;
        md.amp = amp * (0.5 + 0.5 * std::abs(u(rng)));
        md.freq = {0.7 + 0.3 * u(rng), 0.0, 0.0, M_PI * (1.0 + 0.4 * u(rng))};
        md.phase = {u(rng), 0.0, 0.0, u(rng)};
        return md;
    };
    for (int c = 0; c < 6; ++c) {
        bool diag = c == 0 || c == 3 || c == 5;
        m.g[c].modes.push_back(mode(diag ? eps : 0.4 * eps));
    }
    m.phi.modes.push_back(mode(0.5 * eps));
    return m;
}

double wall_seconds(const std::function<void()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

struct EvolvedRun {
    State final_state;
    double trk_peak = 0.0;
    double energy_c = 0.0;
    std::vector<State> window; // three consecutive slices when requested
    EvolvedRun(const Grid& g) : final_state(g) {}
};

// grid must outlive the returned states
EvolvedRun perturbed_run(const Grid& grid, const std::function<void(State&, double)>& bump,
                         double eps, double t_end, double fixed_dt,
                         const std::vector<double>& window_times, double rel_tol = 1e-12) {
    EvolveConfig cfg;
    cfg.t_end = t_end;
    cfg.dt = fixed_dt;
    cfg.elliptic.rel_tol = rel_tol; // keep the lapse-solve footprint below the signals
    BoundaryData bd = constant_bd();
    Evolver ev(grid, cfg, bd);
    State s = flat_state(grid);
    bump(s, eps);
    ev.initialize(s);
    SymTensorField g0 = s.g;
    GeometryData geo0(grid);
    {
        SymTensorField gc = s.g;
        build_geometry(gc, geo0);
    }
    double etotal0 = energy_total(s, geo0, 0, g0, ev.dtphi_at(s.t));
    EvolvedRun out(grid);
    ev.run(s, [&](const State& st, int) {
        GeometryData geo(grid);
        SymTensorField gc = st.g;
        build_geometry(gc, geo);
        ScalarField trk = trace(geo.ginv, st.k);
        out.trk_peak = std::max(out.trk_peak, trk.max_abs_interior());
        double ek = energy_k(st, geo, 0);
        out.energy_c = std::max(out.energy_c, ek / etotal0);
        for (double tw : window_times)
            if (std::abs(st.t - tw) < 1e-9 && out.window.size() < window_times.size())
                out.window.push_back(st);
    });
    out.final_state = s;
    return out;
}

void criterion_flat_fixed_point() {
    const std::string name = "flat fixed point stays below 1e-10 for 200 steps";
    Grid grid(spec_n(16, 16, 16));
    EvolveConfig cfg;
    cfg.t_end = 1e9; // step count limited below
    // a loose lapse solve leaves an O(rel_tol / h^2) footprint in the
    // second-derivative diagnostics; solve well below the 1e-10 gate
    cfg.elliptic.rel_tol = 1e-13;
    BoundaryData bd = constant_bd();
    Evolver ev(grid, cfg, bd);
    State s = flat_state(grid);
    SymTensorField g0(grid);
    double worst = 0.0;
    double secs = wall_seconds([&] {
        ev.initialize(s);
        g0 = s.g;
        for (int step = 1; step <= 200; ++step) {
            ev.step(s);
            if (step % 25 == 0 || step == 200) {
                GeometryData geo(grid);
                SymTensorField gc = s.g;
                build_geometry(gc, geo);
                DiagnosticsRecord r =
                    compute_diagnostics(s, geo, bd, g0, ev.dtphi_at(s.t), 0);
                const double cols[] = {r.ham_l2, r.mom_l2[0], r.mom_l2[1], r.mom_l2[2],
                                       r.trk_l2, r.trk_max, r.ricci_ij_l2, r.ricci_00_l2,
                                       r.gi_l2, r.einstein_l2, r.gtilde_l2, r.energy_k,
                                       r.energy_total, r.c_bd, r.bc_knn_max, r.bc_kna_max,
                                       r.bc_kcc_max};
                for (double c : cols) worst = std::max(worst, std::abs(c));
            }
        }
    });
    char d[128];
    std::snprintf(d, sizeof d, "max column %.3e, %.1f s", worst, secs);
    report(name, worst < 1e-10 && secs < 30.0, d);
}

void criterion_trace_identity() {
    const std::string name = "trace identity residual converges at order 2.0 +/- 0.2";
    EllipticConfig cfg;
    cfg.rel_tol = 1e-13;
    bool ok = true;
    std::string detail;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        AnalyticMetric m = metric_x3_seeded(seed, 0.08);
        double err[3];
        for (int lvl = 0; lvl < 3; ++lvl) {
            Grid grid(spec_n(8, 8, 16 << lvl));
            State s(grid);
            s.t = 0.1;
            sample_solution(m, 0.1, s.g, s.k, s.v, s.phi);
            err[lvl] = trace_identity_check(s, cfg);
        }
        ConvergenceRate r = convergence_rate(err[0], err[1], err[2]);
        bool seed_ok = r.rate01 > 1.8 && r.rate01 < 2.2 && r.rate12 > 1.8 && r.rate12 < 2.2;
        ok = ok && seed_ok;
        char d[64];
        std::snprintf(d, sizeof d, "%s%.2f/%.2f", seed > 1 ? " " : "", r.rate01, r.rate12);
        detail += d;
    }
    report(name, ok, "rates " + detail);
}

void criterion_mms() {
    const std::string name = "manufactured-solution errors converge at order 2.0 +/- 0.2";
    double secs = 0.0;
    double eg[4], ek[4], ephi[4];
    secs = wall_seconds([&] {
        for (int lvl = 0; lvl < 4; ++lvl) {
            Grid grid(spec_n(8, 8, 24 << lvl));
            auto mms = std::make_shared<MmsForcing>(MmsForcing{mms_metric_x3(0.05, 1.0)});
            EvolveConfig cfg;
            cfg.t_end = 0.5;
            Evolver ev(grid, cfg, constant_bd(), mms);
            State s(grid);
            sample_solution(mms->metric, 0.0, s.g, s.k, s.v, s.phi);
            ev.initialize(s, false);
            ev.run(s);
            State ex(grid);
            sample_solution(mms->metric, s.t, ex.g, ex.k, ex.v, ex.phi);
            ex.g -= s.g;
            ex.k -= s.k;
            ex.phi -= s.phi;
            eg[lvl] = ex.g.max_abs_interior();
            ek[lvl] = ex.k.max_abs_interior();
            ephi[lvl] = ex.phi.max_abs_interior();
        }
    });
    bool ok = secs < 600.0;
    std::string detail;
    for (double* e : {eg, ek, ephi}) {
        for (int i = 0; i + 1 < 4; ++i) {
            double rate = std::log2(e[i] / e[i + 1]);
            ok = ok && rate > 1.8 && rate < 2.2;
            char d[32];
            std::snprintf(d, sizeof d, "%.2f ", rate);
            detail += d;
        }
        detail += "| ";
    }
    char d[64];
    std::snprintf(d, sizeof d, "%.0f s", secs);
    report(name, ok, "rates g,k,phi " + detail + d);
}

void criterion_initial_eve() {
    const std::string name = "initial spacetime Ricci reconstruction is consistent";
    const double eps = 1e-3, rel_tol = 1e-10;
    bool ok = true;
    std::string detail;
    for (int pert = 0; pert < 2; ++pert) {
        Grid grid(spec_n(8, 8, 16));
        EvolveConfig cfg;
        BoundaryData bd = constant_bd();
        Evolver ev(grid, cfg, bd);
        State s = flat_state(grid);
        if (pert) add_tt_bump(s, eps);
        ev.initialize(s);
        GeometryData geo(grid);
        SymTensorField gc = s.g;
        build_geometry(gc, geo);
        SpacetimeCurvature rc = spacetime_ricci(s, geo);
        double rij = l2_norm(rc.Rij, s.g);
        double r00 = l2_norm(rc.R00, s.g);
        double gi = 0.0;
        for (int j = 0; j < 3; ++j) gi = std::max(gi, l2_norm(rc.Gi[j], s.g));
        double cap = std::max(10.0 * rel_tol, 10.0 * eps * eps);
        bool this_ok = pert ? (rij < cap && r00 < cap && gi < cap)
                            : (rij < 10.0 * rel_tol && r00 < 1e-8 && gi < 1e-10);
        ok = ok && this_ok;
        char d[128];
        std::snprintf(d, sizeof d, "%s Rij %.2e R00 %.2e Gi %.2e (K=%.2f); ",
                      pert ? "perturbed" : "flat", rij, r00, gi,
                      pert ? rij / (eps * eps) : 0.0);
        detail += d;
    }
    report(name, ok, detail);
}

void criterion_trk_propagation() {
    const std::string name = "max |trk| drops by 4 +/- 30% under grid doubling";
    // constraint-balanced data: with an O(eps^2) Hamiltonian violation the trk
    // drift has an h-independent continuum part and cannot scale with the grid
    Grid gc(spec_n(8, 8, 16)), gf(spec_n(8, 8, 32));
    EvolvedRun coarse = perturbed_run(gc, add_tt_bump_balanced, 1e-3, 0.5, 0.0, {});
    EvolvedRun fine = perturbed_run(gf, add_tt_bump_balanced, 1e-3, 0.5, 0.0, {});
    double factor = coarse.trk_peak / fine.trk_peak;
    char d[96];
    std::snprintf(d, sizeof d, "peaks %.3e -> %.3e, factor %.2f", coarse.trk_peak,
                  fine.trk_peak, factor);
    report(name, factor > 2.8 && factor < 5.2, d);
}

void criterion_bc_enforcement() {
    const std::string name = "boundary conditions enforced to 1e-11 with O(h^2) face momentum";
    bool ok = true;
    double worst = 0.0;
    for (unsigned seed : {3u, 14u, 15u}) {
        Grid grid(spec_n(8, 8, 12));
        State s(grid);
        sample_solution(random_metric(seed, 0.08), 0.1, s.g, s.k, s.v, s.phi);
        GeometryData geo(grid);
        build_geometry(s.g, geo);
        apply_bc(s.k, s.g, geo.ginv, geo.gamma, geo.frame, constant_bd(), 0.1);
        BcResiduals r = bc_residuals(s.k, s.g, geo.ginv, geo.gamma, geo.frame,
                                     constant_bd(), 0.1);
        worst = std::max({worst, r.hat, r.knn, r.kna, r.kcc});
    }
    ok = worst < 1e-11;

    // tangential momentum on the faces of a vacuum-consistent evolved run;
    // the x1-dependent bump makes the tangential components nontrivial
    double face_mom[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        Grid g(spec_n(8 << lvl, 4, 16 << lvl));
        EvolvedRun run = perturbed_run(g, add_tt_bump_x1, 1e-3, 0.2, 0.0, {});
        GeometryData geo(g);
        SymTensorField gc = run.final_state.g;
        build_geometry(gc, geo);
        auto mom = momentum(run.final_state.k, geo);
        double m = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int i3 : {0, g.n3() - 1})
                for (int i2 = 0; i2 < g.n2(); ++i2)
                    for (int i1 = 0; i1 < g.n1(); ++i1)
                        m = std::max(m, std::abs(mom[a](i1, i2, i3)));
        face_mom[lvl] = m;
    }
    double rate = std::log2(face_mom[0] / face_mom[1]);
    ok = ok && rate > 1.5;
    char d[96];
    std::snprintf(d, sizeof d, "max residual %.2e, face momentum rate %.2f", worst, rate);
    report(name, ok, d);
}

void criterion_lapse() {
    const std::string name = "cosh lapse oracle at order 2.0 +/- 0.2 with the maximum principle";
    const double c = 3.0;
    double err[3];
    for (int lvl = 0; lvl < 3; ++lvl) {
        Grid grid(spec_n(4, 4, 16 << lvl));
        SymTensorField gf(grid);
        sample_metric(flat_metric(), 0.0, gf);
        SymTensorField gi = inverse_metric(gf, 1);
        ChristoffelField gam = christoffels(gf, gi, 1);
        ScalarField k2(grid);
        k2.fill(c);
        EllipticConfig cfg;
        cfg.rel_tol = 1e-12;
        ScalarField phi = solve_lapse(gi, gam, k2, cfg);
        double e = 0.0, r = std::sqrt(c), L = 1.0;
        for (int i3 = 0; i3 < grid.n3(); ++i3) {
            double exact = std::cosh(r * (grid.x3(i3) + L / 2.0)) / std::cosh(r * L / 2.0);
            e = std::max(e, std::abs(phi(1, 1, i3) - exact));
        }
        err[lvl] = e;
    }
    ConvergenceRate cr = convergence_rate(err[0], err[1], err[2]);
    bool ok = cr.rate01 > 1.8 && cr.rate01 < 2.2 && cr.rate12 > 1.8 && cr.rate12 < 2.2;

    Grid g(spec_n(6, 6, 12));
    EvolvedRun run = perturbed_run(g, add_tt_bump, 1e-3, 0.2, 0.0, {});
    const ScalarField& phi = run.final_state.phi;
    bool principle = true;
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                principle = principle && phi(i1, i2, i3) > 0.0 &&
                            phi(i1, i2, i3) <= 1.0 + 10.0 * 1e-10;
    char d[64];
    std::snprintf(d, sizeof d, "rates %.2f/%.2f, bounds %s", cr.rate01, cr.rate12,
                  principle ? "held" : "violated");
    report(name, ok && principle, d);
}

void criterion_propagation_identity() {
    const std::string name = "einstein-tensor propagation identity converges at order >= 1.8";
    // constraint-balanced data and a tight lapse solve keep the residual in
    // the discretization-dominated regime; the time differencing of the
    // einstein tensor amplifies iterative-solver noise by 1/(h^2 dt), so at
    // much finer resolution that noise floor takes over
    double resid[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        double dt = 0.01 / (1 << lvl);
        Grid g(spec_n(8, 8, 16 << lvl));
        EvolvedRun run = perturbed_run(g, add_tt_bump_balanced, 1e-3, 0.12 + 1e-12, dt,
                                       {0.10, 0.10 + dt, 0.10 + 2.0 * dt}, 1e-13);
        if (run.window.size() != 3) throw std::runtime_error("window not captured");
        resid[lvl] = propagation_check(run.window[0], run.window[1], run.window[2]);
    }
    double rate = std::log2(resid[0] / resid[1]);
    char d[96];
    std::snprintf(d, sizeof d, "residuals %.3e -> %.3e, order %.2f", resid[0], resid[1],
                  rate);
    report(name, rate >= 1.8, d);
}

void criterion_energy_bound() {
    const std::string name = "energy bound constant is finite and grid-stable";
    Grid gc(spec_n(8, 8, 16)), gf(spec_n(8, 8, 32));
    EvolvedRun coarse = perturbed_run(gc, add_tt_bump, 1e-3, 0.5, 0.0, {});
    EvolvedRun fine = perturbed_run(gf, add_tt_bump, 1e-3, 0.5, 0.0, {});
    double c0 = coarse.energy_c, c1 = fine.energy_c;
    bool ok = std::isfinite(c0) && std::isfinite(c1) && c0 > 0.0 &&
              std::abs(c1 - c0) / c0 < 0.2;
    char d[96];
    std::snprintf(d, sizeof d, "C = %.4f vs %.4f (change %.1f%%)", c0, c1,
                  100.0 * std::abs(c1 - c0) / c0);
    report(name, ok, d);
}

void criterion_picard() {
    const std::string name = "sweep iteration matches the direct scheme with monotone deltas";
    GridSpec gs = spec_n(6, 6, 12);
    Grid grid(gs);
    EvolveConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 0.2;
    BoundaryData bd = constant_bd();
    const double tol = 1e-12;

    State init = flat_state(grid);
    add_tt_bump(init, 1e-4);
    PicardResult pr = picard_solve(init, cfg, bd, tol, 80);

    auto direct = [&](double dt) {
        EvolveConfig c2 = cfg;
        c2.dt = dt;
        Evolver ev(grid, c2, bd);
        State s = flat_state(grid);
        add_tt_bump(s, 1e-4);
        ev.initialize(s);
        ev.run(s);
        return s;
    };
    State d1 = direct(cfg.dt);
    State d2 = direct(cfg.dt / 2.0);
    SymTensorField est = d1.k;
    est -= d2.k;
    double integ_err = est.max_abs_interior();
    SymTensorField diff = d1.k;
    diff -= pr.state.k;
    double mismatch = diff.max_abs_interior();

    bool monotone = true;
    for (std::size_t i = 1; i < pr.deltas.size(); ++i)
        monotone = monotone && pr.deltas[i] <= pr.deltas[i - 1];

    bool ok = pr.converged && monotone && mismatch <= 10.0 * std::max(tol, integ_err);
    char d[128];
    std::snprintf(d, sizeof d, "mismatch %.2e vs bound %.2e, %d sweeps, %s", mismatch,
                  10.0 * std::max(tol, integ_err), pr.iterations,
                  monotone ? "monotone" : "non-monotone");
    report(name, ok, d);
}

void criterion_conformal_invariance() {
    const std::string name = "boundary data bit-identical under conformal rescaling";
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> pw(-20, 20);
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        double a = std::exp(0.5 * u(rng)), b = std::exp(0.5 * u(rng));
        double rho = 0.8 * u(rng);
        double w1 = 0.5 + 0.4 * u(rng), w2 = 0.5 + 0.4 * u(rng), ph = u(rng);
        double omega = std::ldexp(1.0, pw(rng));
        auto base = [=](double t, int, int) {
            Sym2 q;
            q.m11 = a * (1.1 + 0.3 * std::sin(w1 * t + ph));
            q.m22 = b * (1.1 + 0.3 * std::cos(w2 * t));
            q.m12 = rho * 0.2 * std::sqrt(q.m11 * q.m22) * std::sin(t);
            return q;
        };
        CallableFamily f1(base);
        CallableFamily f2([=](double t, int i1, int i2) {
            Sym2 q = base(t, i1, i2);
            q.m11 *= omega;
            q.m12 *= omega;
            q.m22 *= omega;
            return q;
        });
        double t = u(rng);
        TracelessMixed2 h1 = f1.hat(t, 0, 0);
        TracelessMixed2 h2 = f2.hat(t, 0, 0);
        if (h1.a11 != h2.a11 || h1.a12 != h2.a12 || h1.a21 != h2.a21) ++bad;
    }
    char d[48];
    std::snprintf(d, sizeof d, "%d of 100 samples differed", bad);
    report(name, bad == 0, d);
}

} // namespace

int main(int argc, char** argv) {
    // optional substring filter over check names, for running one check alone
    std::string filter = argc > 1 ? argv[1] : "";
    auto want = [&](const std::string& n) { return n.find(filter) != std::string::npos; };
    const std::pair<const char*, void (*)()> checks[] = {
        {"flat fixed point", criterion_flat_fixed_point},
        {"trace identity", criterion_trace_identity},
        {"mms convergence", criterion_mms},
        {"initial consistency", criterion_initial_eve},
        {"trk propagation", criterion_trk_propagation},
        {"boundary enforcement", criterion_bc_enforcement},
        {"lapse oracle", criterion_lapse},
        {"propagation identity", criterion_propagation_identity},
        {"energy bound", criterion_energy_bound},
        {"picard cross-validation", criterion_picard},
        {"conformal invariance", criterion_conformal_invariance},
    };
    for (const auto& [name, fn] : checks)
        if (want(name)) guarded(name, fn);
    return failures;
}
