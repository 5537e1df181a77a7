#include "collar/evolution.hpp"

#include <cmath>

#include "collar/errors.hpp"

namespace collar {

namespace {

const int C6[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

// Copy the face planes and both ghost layers in the normal direction.
void copy_boundary_layers(ScalarField& dst, const ScalarField& src) {
    const Grid& gr = dst.grid();
    const int n3 = gr.n3();
    const int levels[6] = {-2, -1, 0, n3 - 1, n3, n3 + 1};
    for (int l = 0; l < 6; ++l)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1)
                dst(i1, i2, levels[l]) = src(i1, i2, levels[l]);
}

void copy_boundary_layers(SymTensorField& dst, const SymTensorField& src) {
    for (int c = 0; c < 6; ++c) copy_boundary_layers(dst[c], src[c]);
}

// Derivative at time t of the interpolating polynomial through up to three
// history samples (the most recent ones).
std::vector<double> fit_deriv_weights(const std::vector<double>& ts, double t) {
    int n = static_cast<int>(ts.size());
    int use = std::min(n, 3);
    std::vector<double> w(n, 0.0);
    if (use < 2) return w;
    int off = n - use;
    // Lagrange basis derivative at t
    for (int a = 0; a < use; ++a) {
        double sum = 0.0;
        for (int b = 0; b < use; ++b) {
            if (b == a) continue;
            double prod = 1.0;
            for (int c = 0; c < use; ++c) {
                if (c == a || c == b) continue;
                prod *= (t - ts[off + c]) / (ts[off + a] - ts[off + c]);
            }
            sum += prod / (ts[off + a] - ts[off + b]);
        }
        w[off + a] = sum;
    }
    return w;
}

} // namespace

void build_geometry(SymTensorField& g, GeometryData& geo) {
    fill_ghosts_extrapolate(g);
    geo.ginv = inverse_metric(g, 1);
    geo.gamma = christoffels(g, geo.ginv, 1);
    geo.frame = normal_frame(g, geo.ginv, 1);
}

SymTensorField initial_kdot(const State& s, const GeometryData& geo) {
    const Grid& gr = s.g.grid();
    SymTensorField ric = ricci(geo.gamma);
    SymTensorField hp = hessian(geo.gamma, s.phi);
    SymTensorField out(gr);
    for (int c = 0; c < 6; ++c) out[c].fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 kk = load_sym3(s.k, i1, i2, i3);
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                double km[3][3];
                double trk = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        km[i][j] = 0.0;
                        for (int l = 0; l < 3; ++l) km[i][j] += gi(j, l) * kk(i, l);
                    }
                for (int i = 0; i < 3; ++i) trk += km[i][i];
                double iphi = 1.0 / s.phi(i1, i2, i3);
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        double kkij = 0.0;
                        for (int l = 0; l < 3; ++l) kkij += km[i][l] * kk(j, l);
                        out(i, j, i1, i2, i3) = -iphi * hp(i, j, i1, i2, i3) +
                                                ric(i, j, i1, i2, i3) +
                                                kk(i, j) * trk - 2.0 * kkij;
                    }
            }
    return out;
}

double cfl_dt(const State& s, const GeometryData& geo, double cfl) {
    const Grid& gr = s.g.grid();
    double h[3] = {gr.h1(), gr.h2(), gr.h3()};
    double dt = 1e30;
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double phi = s.phi(i1, i2, i3);
                for (int a = 0; a < 3; ++a) {
                    double speed = phi * std::sqrt(geo.ginv(a, a, i1, i2, i3));
                    if (speed > 0.0) dt = std::min(dt, h[a] / speed);
                }
            }
    if (!(dt > 0.0) || dt > 1e29) throw numeric_error("degenerate wave speeds in step control");
    return cfl * dt;
}

void eval_rhs(const State& s, const GeometryData& geo, const ScalarField& dtphi,
              RhsOut& out, const SymTensorField* Sv) {
    const Grid& gr = s.g.grid();
    const int n1 = gr.n1(), n2 = gr.n2(), n3 = gr.n3();

    SymTensorField ric = ricci(geo.gamma);
    ScalarField rscal = scalar_curvature(geo.ginv, ric);
    SymTensorField hphi = hessian(geo.gamma, s.phi);
    ScalarField lphi(gr);
    lphi.fill(ghost_sentinel);
    for (int i3 = 0; i3 < n3; ++i3)
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                double sum = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        sum += geo.ginv(i, j, i1, i2, i3) * hphi(i, j, i1, i2, i3);
                lphi(i1, i2, i3) = sum;
            }
    SymTensorField hdt = hessian(geo.gamma, dtphi);
    ChristoffelField dgam = dt_christoffel(geo.ginv, geo.gamma, s.k, s.phi);
    auto cd = covariant_deriv(geo.gamma, s.k, 0);
    SymTensorField lapk = laplace_tensor(s.g, geo.ginv, geo.gamma, s.k);

    ScalarField dphi1 = d_tan(s.phi, 1), dphi2 = d_tan(s.phi, 2), dphi3 = d_norm(s.phi);

    // trk one layer into the ghosts for its normal derivative at the faces
    ScalarField trk(gr);
    trk.fill(ghost_sentinel);
    for (int i3 = -1; i3 <= n3; ++i3)
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                double sum = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        sum += geo.ginv(i, j, i1, i2, i3) * s.k(i, j, i1, i2, i3);
                trk(i1, i2, i3) = sum;
            }
    ScalarField dtrk1 = d_tan(trk, 1), dtrk2 = d_tan(trk, 2), dtrk3 = d_norm(trk);

    for (int c = 0; c < 6; ++c) {
        out.dg[c].fill(ghost_sentinel);
        out.dk[c].fill(ghost_sentinel);
        out.dv[c].fill(ghost_sentinel);
    }

    for (int i3 = 0; i3 < n3; ++i3)
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                Sym3 kk = load_sym3(s.k, i1, i2, i3);
                Sym3 vv = load_sym3(s.v, i1, i2, i3);
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                Sym3 gg = load_sym3(s.g, i1, i2, i3);
                Sym3 rr = load_sym3(ric, i1, i2, i3);
                Sym3 hp = load_sym3(hphi, i1, i2, i3);
                const double PHI = s.phi(i1, i2, i3);
                const double DTPHI = dtphi(i1, i2, i3);
                const double RS = rscal(i1, i2, i3);
                const double LPHI = lphi(i1, i2, i3);

                double KM[3][3], VM[3][3], RM[3][3], KUP[3][3];
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        double km = 0, vm = 0, rm = 0;
                        for (int l = 0; l < 3; ++l) {
                            km += gi(j, l) * kk(i, l);
                            vm += gi(j, l) * vv(i, l);
                            rm += gi(j, l) * rr(i, l);
                        }
                        KM[i][j] = km;
                        VM[i][j] = vm;
                        RM[i][j] = rm;
                    }
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        double sup = 0.0;
                        for (int l = 0; l < 3; ++l) sup += gi(i, l) * KM[l][j];
                        KUP[i][j] = sup;
                    }
                double TRK = 0, TRV = 0, K2 = 0;
                for (int i = 0; i < 3; ++i) {
                    TRK += KM[i][i];
                    TRV += VM[i][i];
                    for (int j = 0; j < 3; ++j) K2 += KUP[i][j] * kk(i, j);
                }
                double CDV[3][3][3];
                for (int a = 0; a < 3; ++a)
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j)
                            CDV[a][i][j] = cd[a * 6 + C6[i][j]](i1, i2, i3);
                double DPHI[3] = {dphi1(i1, i2, i3), dphi2(i1, i2, i3), dphi3(i1, i2, i3)};
                double DPHIUP[3];
                for (int i = 0; i < 3; ++i) {
                    double sup = 0.0;
                    for (int c = 0; c < 3; ++c) sup += gi(i, c) * DPHI[c];
                    DPHIUP[i] = sup;
                }
                double DTRK[3] = {dtrk1(i1, i2, i3), dtrk2(i1, i2, i3), dtrk3(i1, i2, i3)};
                double DIVK[3];
                for (int i = 0; i < 3; ++i) {
                    double sdiv = 0.0;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b) sdiv += gi(a, b) * CDV[b][a][i];
                    DIVK[i] = sdiv;
                }

                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        const int c6 = C6[i][j];
                        double t1 = DTPHI * hp(i, j) / (PHI * PHI * PHI) -
                                    hdt(i, j, i1, i2, i3) / (PHI * PHI);
                        for (int l = 0; l < 3; ++l)
                            t1 += dgam.at(l, i, j)(i1, i2, i3) * DPHI[l] / (PHI * PHI);

                        double kkq = 0, vk = 0, kv = 0;
                        for (int l = 0; l < 3; ++l) {
                            vk += VM[i][l] * kk(j, l);
                            kv += KM[i][l] * vv(j, l);
                            for (int a = 0; a < 3; ++a)
                                kkq += KUP[l][a] * kk(i, a) * kk(j, l);
                        }
                        double t2 = vv(i, j) * TRK + kk(i, j) * (TRV + 2.0 * K2) -
                                    (4.0 * kkq + 2.0 * vk + 2.0 * kv);

                        double t3 = kk(i, j) * LPHI;
                        for (int a = 0; a < 3; ++a)
                            t3 -= KM[i][a] * hp(a, j) + KM[j][a] * hp(a, i);
                        t3 /= PHI;

                        double t4 = 0;
                        for (int a = 0; a < 3; ++a)
                            t4 -= DPHIUP[a] * (CDV[j][i][a] + CDV[i][j][a] - 2.0 * CDV[a][i][j]);
                        t4 = (t4 + TRK * hp(i, j)) / PHI;

                        double t5 = (DPHI[j] * (DTRK[i] - DIVK[i]) +
                                     DPHI[i] * (DTRK[j] - DIVK[j])) / PHI;

                        double t6 = 2.0 * TRK * rr(i, j) + (kk(i, j) - gg(i, j) * TRK) * RS;
                        for (int c = 0; c < 3; ++c)
                            t6 -= 3.0 * (kk(c, i) * RM[j][c] + kk(c, j) * RM[i][c]);
                        double rk = 0;
                        for (int a = 0; a < 3; ++a)
                            for (int c = 0; c < 3; ++c) rk += RM[a][c] * KM[c][a];
                        t6 += 2.0 * gg(i, j) * rk;

                        double nij = t1 + t2 + t3 + t4 + t5 + t6;
                        if (Sv) nij += (*Sv)(i, j, i1, i2, i3);
                        out.dv[c6](i1, i2, i3) = PHI * (lapk(i, j, i1, i2, i3) + nij);
                        out.dk[c6](i1, i2, i3) = PHI * vv(i, j);
                        out.dg[c6](i1, i2, i3) = -2.0 * PHI * kk(i, j);
                    }
            }
}

Evolver::Evolver(const Grid& grid, EvolveConfig cfg, BoundaryData bd,
                 std::shared_ptr<const MmsForcing> mms)
    : grid_(&grid), cfg_(std::move(cfg)), bd_(std::move(bd)), mms_(std::move(mms)),
      geo_(grid) {}

void Evolver::prepare(State& s, bool resolve_lapse) {
    const Grid& gr = *grid_;
    if (mms_) {
        SymTensorField ge(gr), ke(gr), ve(gr);
        ScalarField pe(gr);
        sample_solution(mms_->metric, s.t, ge, ke, ve, pe);
        copy_boundary_layers(s.g, ge);
        copy_boundary_layers(s.k, ke);
        copy_boundary_layers(s.v, ve);
        geo_.ginv = inverse_metric(s.g, 1);
        geo_.gamma = christoffels(s.g, geo_.ginv, 1);
        geo_.frame = normal_frame(s.g, geo_.ginv, 1);
        if (resolve_lapse) {
            ScalarField sigma = norm2(geo_.ginv, s.k);
            SymTensorField Sv(gr);
            ScalarField Sphi(gr);
            sample_mms_sources(mms_->metric, s.t, Sv, Sphi);
            s.phi = solve_helmholtz(geo_.ginv, geo_.gamma, sigma, Sphi, pe, cfg_.elliptic,
                                    initialized_ ? &s.phi : nullptr, &lapse_stats_);
        }
        copy_boundary_layers(s.phi, pe);
    } else {
        build_geometry(s.g, geo_);
        apply_bc(s.k, s.g, geo_.ginv, geo_.gamma, geo_.frame, bd_, s.t);
        if (resolve_lapse) {
            ScalarField sigma = norm2(geo_.ginv, s.k);
            s.phi = solve_lapse(geo_.ginv, geo_.gamma, sigma, cfg_.elliptic,
                                initialized_ ? &s.phi : nullptr, &lapse_stats_);
        }
        fill_ghosts_extrapolate(s.phi);
    }
}

void Evolver::push_history(const State& s) {
    hist_t_.push_back(s.t);
    hist_phi_.push_back(s.phi);
    if (hist_t_.size() > 3) {
        hist_t_.erase(hist_t_.begin());
        hist_phi_.erase(hist_phi_.begin());
    }
}

void Evolver::initialize(State& s, bool compute_kdot) {
    prepare(s, true);
    initialized_ = true;
    if (compute_kdot && !mms_) {
        s.v = initial_kdot(s, geo_);
    }
    hist_t_.clear();
    hist_phi_.clear();
    push_history(s);
}

ScalarField Evolver::dtphi_at(double t) const {
    ScalarField out(*grid_);
    out.fill(0.0);
    auto w = fit_deriv_weights(hist_t_, t);
    for (std::size_t a = 0; a < hist_phi_.size(); ++a)
        if (w[a] != 0.0) out.axpy(w[a], hist_phi_[a]);
    return out;
}

double Evolver::step(State& s) {
    if (!initialized_) throw solver_error("evolver used before initialize");
    const Grid& gr = *grid_;
    double dt = cfg_.dt > 0.0 ? cfg_.dt : cfl_dt(s, geo_, cfg_.cfl);
    if (s.t + dt > cfg_.t_end) dt = cfg_.t_end - s.t;

    bool bootstrap = hist_t_.size() < 2 && !mms_;
    ScalarField dtphi_boot(gr);
    dtphi_boot.fill(0.0);
    if (bootstrap) {
        // Euler predictor to estimate the lapse velocity for the first step
        RhsOut r0(gr);
        eval_rhs(s, geo_, dtphi_boot, r0, nullptr);
        State p = s;
        p.t = s.t + dt;
        p.g.axpy(dt, r0.dg);
        p.k.axpy(dt, r0.dk);
        p.v.axpy(dt, r0.dv);
        ScalarField phi0 = s.phi;
        prepare(p, true);
        for (int i3 = -2; i3 <= gr.n3() + 1; ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1)
                    dtphi_boot(i1, i2, i3) = (p.phi(i1, i2, i3) - phi0(i1, i2, i3)) / dt;
        prepare(s, false); // restore the geometry of the current state
    }

    const double cst[4] = {0.0, 0.5, 0.5, 1.0};
    const double wgt[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    State y = s;
    RhsOut stage(gr);
    SymTensorField ag(gr), ak(gr), av(gr); // weighted accumulators
    for (int c = 0; c < 6; ++c) {
        ag[c].fill(0.0);
        ak[c].fill(0.0);
        av[c].fill(0.0);
    }
    SymTensorField Sv(gr);
    ScalarField Sphi(gr);
    for (int m = 0; m < 4; ++m) {
        if (m > 0) {
            y.g = s.g;
            y.k = s.k;
            y.v = s.v;
            y.g.axpy(cst[m] * dt, stage.dg);
            y.k.axpy(cst[m] * dt, stage.dk);
            y.v.axpy(cst[m] * dt, stage.dv);
            y.t = s.t + cst[m] * dt;
            prepare(y, true);
        }
        ScalarField dtphi = bootstrap ? dtphi_boot : ScalarField(gr);
        if (!bootstrap) {
            if (mms_) {
                // exact lapse velocity of the manufactured solution
                dtphi.fill(0.0);
                int mask = mms_->metric.active_mask();
                bool dep1 = mask & 2, dep2 = mask & 4;
                int m1 = dep1 ? gr.n1() : 1, m2 = dep2 ? gr.n2() : 1;
                for (int i3 = -2; i3 <= gr.n3() + 1; ++i3)
                    for (int i2 = 0; i2 < m2; ++i2)
                        for (int i1 = 0; i1 < m1; ++i1) {
                            std::array<Jet4, 4> xs = {
                                Jet4::variable(0, y.t), Jet4::variable(1, gr.x1(i1)),
                                Jet4::variable(2, gr.x2(i2)), Jet4::variable(3, gr.x3(i3))};
                            dtphi(i1, i2, i3) = mms_->metric.phi.jet(xs).deriv1(0);
                        }
                if (!dep1 || !dep2)
                    for (int i3 = -2; i3 <= gr.n3() + 1; ++i3)
                        for (int i2 = 0; i2 < gr.n2(); ++i2)
                            for (int i1 = 0; i1 < gr.n1(); ++i1)
                                dtphi(i1, i2, i3) =
                                    dtphi(dep1 ? i1 : 0, dep2 ? i2 : 0, i3);
            } else {
                dtphi = dtphi_at(y.t);
            }
        }
        const SymTensorField* src = nullptr;
        if (mms_) {
            sample_mms_sources(mms_->metric, y.t, Sv, Sphi);
            src = &Sv;
        }
        eval_rhs(y, geo_, dtphi, stage, src);
        ag.axpy(wgt[m], stage.dg);
        ak.axpy(wgt[m], stage.dk);
        av.axpy(wgt[m], stage.dv);
    }
    s.g.axpy(dt, ag);
    s.k.axpy(dt, ak);
    s.v.axpy(dt, av);
    s.t += dt;
    prepare(s, true);
    push_history(s);
    return dt;
}

void Evolver::run(State& s, const std::function<void(const State&, int)>& cb) {
    if (!initialized_) initialize(s, true);
    if (cb) cb(s, 0);
    int step_no = 0;
    while (s.t < cfg_.t_end - 1e-12) {
        if (step_no >= cfg_.max_steps)
            throw solver_error("step limit reached before the final time");
        step(s);
        ++step_no;
        if (cb) cb(s, step_no);
    }
}

PicardResult picard_solve(const State& init, EvolveConfig cfg, const BoundaryData& bd,
                          double tol, int max_sweeps) {
    if (!(cfg.dt > 0.0)) throw config_error("sweep iteration requires a fixed time step");
    const Grid& gr = init.g.grid();
    const int nsteps = static_cast<int>(std::ceil((cfg.t_end - init.t) / cfg.dt - 1e-9));
    const double cst[4] = {0.0, 0.5, 0.5, 1.0};
    const double wgt[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};

    struct StageRec {
        SymTensorField g;
        ScalarField phi;
        StageRec(const Grid& grid) : g(grid), phi(grid) {}
    };

    // frozen data: start state prepared once
    State s0 = init;
    GeometryData geo(gr);
    build_geometry(s0.g, geo);
    apply_bc(s0.k, s0.g, geo.ginv, geo.gamma, geo.frame, bd, s0.t);
    {
        ScalarField sigma = norm2(geo.ginv, s0.k);
        s0.phi = solve_lapse(geo.ginv, geo.gamma, sigma, cfg.elliptic);
        fill_ghosts_extrapolate(s0.phi);
    }
    s0.v = initial_kdot(s0, geo);

    // sweep 0 freezes everything at the initial slice
    std::vector<std::array<StageRec, 4>> frozen(
        nsteps, std::array<StageRec, 4>{StageRec(gr), StageRec(gr), StageRec(gr), StageRec(gr)});
    std::vector<ScalarField> frozen_phi_steps; // accepted lapse per step start
    std::vector<double> step_times(nsteps + 1, 0.0);
    for (int n = 0; n <= nsteps; ++n)
        step_times[n] = std::min(init.t + n * cfg.dt, cfg.t_end);
    for (int n = 0; n < nsteps; ++n)
        for (int m = 0; m < 4; ++m) {
            frozen[n][m].g = s0.g;
            frozen[n][m].phi = s0.phi;
        }
    frozen_phi_steps.assign(nsteps + 1, s0.phi);

    PicardResult result{State(gr)};
    result.state = s0;
    SymTensorField k_prev_final = s0.k;

    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        std::vector<std::array<StageRec, 4>> rec(
            nsteps,
            std::array<StageRec, 4>{StageRec(gr), StageRec(gr), StageRec(gr), StageRec(gr)});
        std::vector<ScalarField> phi_steps;
        phi_steps.reserve(nsteps + 1);

        State s = s0;
        phi_steps.push_back(s.phi);
        for (int n = 0; n < nsteps; ++n) {
            double dt = step_times[n + 1] - step_times[n];
            State y = s;
            RhsOut stage(gr);
            SymTensorField ag(gr), ak(gr), av(gr);
            for (int c = 0; c < 6; ++c) {
                ag[c].fill(0.0);
                ak[c].fill(0.0);
                av[c].fill(0.0);
            }
            rec[n][0].g = s.g;
            for (int m = 0; m < 4; ++m) {
                double tstage = step_times[n] + cst[m] * dt;
                if (m > 0) {
                    y.k = s.k;
                    y.v = s.v;
                    y.k.axpy(cst[m] * dt, stage.dk);
                    y.v.axpy(cst[m] * dt, stage.dv);
                    y.t = tstage;
                }
                // geometry and lapse coefficients from the previous sweep
                y.g = frozen[n][m].g;
                GeometryData fgeo(gr);
                fgeo.ginv = inverse_metric(y.g, 1);
                fgeo.gamma = christoffels(y.g, fgeo.ginv, 1);
                fgeo.frame = normal_frame(y.g, fgeo.ginv, 1);
                apply_bc(y.k, y.g, fgeo.ginv, fgeo.gamma, fgeo.frame, bd, tstage);
                ScalarField sigma = norm2(fgeo.ginv, y.k);
                EllipticStats st;
                y.phi = solve_lapse(fgeo.ginv, fgeo.gamma, sigma, cfg.elliptic,
                                    &frozen[n][m].phi, &st);
                fill_ghosts_extrapolate(y.phi);
                rec[n][m].phi = y.phi;

                // lapse velocity from the previous sweep's accepted history,
                // same causal stencil as the direct integrator
                ScalarField dtphi(gr);
                dtphi.fill(0.0);
                {
                    int lo = std::max(0, n - 2);
                    std::vector<double> ts(step_times.begin() + lo, step_times.begin() + n + 1);
                    auto w = fit_deriv_weights(ts, tstage);
                    for (std::size_t a = 0; a < w.size(); ++a)
                        if (w[a] != 0.0) dtphi.axpy(w[a], frozen_phi_steps[lo + a]);
                }
                eval_rhs(y, fgeo, dtphi, stage, nullptr);

                // stage metric for the next sweep
                if (m < 3) {
                    SymTensorField gs = s.g;
                    gs.axpy(cst[m + 1] * dt, stage.dg);
                    fill_ghosts_extrapolate(gs);
                    rec[n][m + 1].g = gs;
                }
                ag.axpy(wgt[m], stage.dg);
                ak.axpy(wgt[m], stage.dk);
                av.axpy(wgt[m], stage.dv);
            }
            s.g.axpy(dt, ag);
            s.k.axpy(dt, ak);
            s.v.axpy(dt, av);
            s.t = step_times[n + 1];
            fill_ghosts_extrapolate(s.g);

            // accepted lapse for the next sweep's history
            GeometryData egeo(gr);
            egeo.ginv = inverse_metric(s.g, 1);
            egeo.gamma = christoffels(s.g, egeo.ginv, 1);
            egeo.frame = normal_frame(s.g, egeo.ginv, 1);
            apply_bc(s.k, s.g, egeo.ginv, egeo.gamma, egeo.frame, bd, s.t);
            ScalarField sigma = norm2(egeo.ginv, s.k);
            s.phi = solve_lapse(egeo.ginv, egeo.gamma, sigma, cfg.elliptic, &s.phi);
            fill_ghosts_extrapolate(s.phi);
            phi_steps.push_back(s.phi);
        }

        double delta = 0.0;
        {
            SymTensorField diff = s.k;
            diff -= k_prev_final;
            delta = diff.max_abs_interior();
            SymTensorField diffg = s.g;
            diffg -= result.state.g;
            delta = std::max(delta, diffg.max_abs_interior());
        }
        k_prev_final = s.k;
        result.state = s;
        result.iterations = sweep;
        result.delta = delta;
        result.deltas.push_back(delta);
        frozen = std::move(rec);
        frozen_phi_steps = std::move(phi_steps);
        if (delta < tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

} // namespace collar
