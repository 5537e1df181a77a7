#include "collar/analytic.hpp"

#include <cmath>
#include <random>

namespace collar {

namespace {

constexpr int C[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

} // namespace

double AnalyticScalar::value(double t, double x1, double x2, double x3) const {
    double y[4] = {t, x1, x2, x3};
    double s = constant;
    for (const TrigMode& m : modes) {
        double p = m.amp;
        for (int v = 0; v < 4; ++v) p *= std::cos(m.freq[v] * y[v] + m.phase[v]);
        s += p;
    }
    return s;
}

Jet4 AnalyticScalar::jet(const std::array<Jet4, 4>& y) const {
    Jet4 s = Jet4::constant(constant);
    for (const TrigMode& m : modes) {
        Jet4 p = Jet4::constant(m.amp);
        for (int v = 0; v < 4; ++v) {
            if (m.freq[v] == 0.0) {
                p = p * std::cos(m.phase[v]);
            } else {
                p = p * cosj(y[v] * m.freq[v] + m.phase[v]);
            }
        }
        s += p;
    }
    return s;
}

int AnalyticScalar::active_mask() const {
    int mask = 0;
    for (const TrigMode& m : modes)
        for (int v = 0; v < 4; ++v)
            if (m.freq[v] != 0.0) mask |= 1 << v;
    return mask;
}

int AnalyticMetric::active_mask() const {
    int mask = phi.active_mask();
    for (const auto& s : g) mask |= s.active_mask();
    return mask;
}

ContinuumPoint continuum_point(const AnalyticMetric& m, double t, double x1, double x2,
                               double x3) {
    ContinuumPoint out{};
    std::array<Jet4, 4> y{Jet4::variable(0, t), Jet4::variable(1, x1), Jet4::variable(2, x2),
                          Jet4::variable(3, x3)};

    Jet4 gj[6], gij[6];
    for (int c = 0; c < 6; ++c) gj[c] = m.g[c].jet(y);
    Jet4 phij = m.phi.jet(y);

    Jet4 det = gj[0] * (gj[3] * gj[5] - gj[4] * gj[4])
             - gj[1] * (gj[1] * gj[5] - gj[4] * gj[2])
             + gj[2] * (gj[1] * gj[4] - gj[3] * gj[2]);
    Jet4 idet = recip(det);
    gij[0] = (gj[3] * gj[5] - gj[4] * gj[4]) * idet;
    gij[1] = (gj[2] * gj[4] - gj[1] * gj[5]) * idet;
    gij[2] = (gj[1] * gj[4] - gj[2] * gj[3]) * idet;
    gij[3] = (gj[0] * gj[5] - gj[2] * gj[2]) * idet;
    gij[4] = (gj[1] * gj[2] - gj[0] * gj[4]) * idet;
    gij[5] = (gj[0] * gj[3] - gj[1] * gj[1]) * idet;

    // Spatial Christoffels as jets; dg[d][c] = pd_d g_c with d a spatial index.
    Jet4 dg[3][6], gam[3][6];
    for (int d = 0; d < 3; ++d)
        for (int c = 0; c < 6; ++c) dg[d][c] = gj[c].d(d + 1);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = b; c < 3; ++c) {
                Jet4 s;
                for (int l = 0; l < 3; ++l)
                    s += gij[C[a][l]] * (dg[b][C[c][l]] + dg[c][C[b][l]] - dg[l][C[b][c]]);
                gam[a][C[b][c]] = s * 0.5;
            }

    Jet4 iphi = recip(phij);
    Jet4 kj[6], vj[6];
    for (int c = 0; c < 6; ++c) kj[c] = gj[c].d(0) * iphi * (-0.5);
    for (int c = 0; c < 6; ++c) vj[c] = kj[c].d(0) * iphi;

    // nabla_a k_ij as jets, cd[a][comp].
    Jet4 cd[3][6];
    for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                Jet4 s = kj[C[i][j]].d(a + 1);
                for (int c = 0; c < 3; ++c)
                    s -= gam[c][C[a][i]] * kj[C[c][j]] + gam[c][C[a][j]] * kj[C[i][c]];
                cd[a][C[i][j]] = s;
            }

    Jet4 trkj;
    {
        const double w[6] = {1, 2, 2, 1, 2, 1};
        for (int c = 0; c < 6; ++c) trkj += gij[c] * kj[c] * w[c];
    }

    // Value extraction.
    double G[6], GI[6], K[6], V[6];
    for (int c = 0; c < 6; ++c) {
        G[c] = gj[c].value();
        GI[c] = gij[c].value();
        K[c] = kj[c].value();
        V[c] = vj[c].value();
        out.g[c] = G[c];
        out.gi[c] = GI[c];
        out.k[c] = K[c];
        out.v[c] = V[c];
        out.dtv[c] = vj[c].d(0).value();
    }
    out.phi = phij.value();
    out.dtphi = phij.deriv1(0);
    for (int i = 0; i < 3; ++i) out.grad_phi[i] = phij.deriv1(i + 1);

    double GAM[3][3][3], DGAM[3][3][3][3]; // DGAM[d][a][b][c] = pd_{x^d} Gamma^a_{bc}
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                GAM[a][b][c] = gam[a][C[b][c]].value();
                out.gamma[a][b][c] = GAM[a][b][c];
                out.dtgamma[a][b][c] = gam[a][C[b][c]].deriv1(0);
                for (int d = 0; d < 3; ++d)
                    DGAM[d][a][b][c] = gam[a][C[b][c]].deriv1(d + 1);
            }

    // Ricci of g.
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a) {
                s += DGAM[a][a][i][j] - DGAM[j][a][i][a];
                for (int b = 0; b < 3; ++b)
                    s += GAM[a][a][b] * GAM[b][i][j] - GAM[a][j][b] * GAM[b][i][a];
            }
            out.ric[C[i][j]] = s;
        }
    {
        const double w[6] = {1, 2, 2, 1, 2, 1};
        out.rscal = 0.0;
        for (int c = 0; c < 6; ++c) out.rscal += GI[c] * out.ric[c] * w[c];
    }

    // Hessians of phi and of dt phi.
    double HPHI[6], HDT[6];
    Jet4 dphj = phij.d(0);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double h = phij.d(i + 1).deriv1(j + 1);
            double hd = dphj.d(i + 1).deriv1(j + 1);
            for (int c = 0; c < 3; ++c) {
                h -= GAM[c][i][j] * phij.deriv1(c + 1);
                hd -= GAM[c][i][j] * dphj.deriv1(c + 1);
            }
            HPHI[C[i][j]] = h;
            HDT[C[i][j]] = hd;
            out.hess_phi[C[i][j]] = h;
        }
    {
        const double w[6] = {1, 2, 2, 1, 2, 1};
        out.lap_phi = 0.0;
        for (int c = 0; c < 6; ++c) out.lap_phi += GI[c] * HPHI[c] * w[c];
    }

    auto gi_at = [&](int a, int b) { return GI[C[a][b]]; };
    auto k_at = [&](int a, int b) { return K[C[a][b]]; };
    auto v_at = [&](int a, int b) { return V[C[a][b]]; };
    auto g_at = [&](int a, int b) { return G[C[a][b]]; };
    auto r_at = [&](int a, int b) { return out.ric[C[a][b]]; };

    double CDV[3][3][3]; // CDV[a][i][j] = nabla_a k_ij
    for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CDV[a][i][j] = cd[a][C[i][j]].value();

    // Rough Laplacian of k.
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double nn = cd[b][C[i][j]].deriv1(a + 1);
                    for (int c = 0; c < 3; ++c)
                        nn -= GAM[c][a][b] * CDV[c][i][j] + GAM[c][a][i] * CDV[b][c][j]
                            + GAM[c][a][j] * CDV[b][i][c];
                    s += gi_at(a, b) * nn;
                }
            out.lap_k[C[i][j]] = s;
        }

    // Scalars and mixed tensors.
    double KM[3][3], VM[3][3], RM[3][3], KUP[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double km = 0, vm = 0, rm = 0;
            for (int l = 0; l < 3; ++l) {
                km += gi_at(j, l) * k_at(i, l);
                vm += gi_at(j, l) * v_at(i, l);
                rm += gi_at(j, l) * r_at(i, l);
            }
            KM[i][j] = km; // k_i^j
            VM[i][j] = vm;
            RM[i][j] = rm;
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int l = 0; l < 3; ++l) s += gi_at(i, l) * KM[l][j];
            KUP[i][j] = s; // k^{ij}
        }
    double TRK = 0, TRV = 0, K2 = 0;
    for (int i = 0; i < 3; ++i) {
        TRK += KM[i][i];
        TRV += VM[i][i];
        for (int j = 0; j < 3; ++j) K2 += KUP[i][j] * k_at(i, j);
    }
    out.trk = TRK;
    out.trv = TRV;
    out.k2 = K2;

    double DPHI[3], DPHIUP[3];
    for (int i = 0; i < 3; ++i) DPHI[i] = out.grad_phi[i];
    for (int i = 0; i < 3; ++i) {
        double s = 0;
        for (int c = 0; c < 3; ++c) s += gi_at(i, c) * DPHI[c];
        DPHIUP[i] = s;
    }
    double DTRK[3], DIVK[3];
    for (int i = 0; i < 3; ++i) {
        DTRK[i] = trkj.deriv1(i + 1);
        double s = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s += gi_at(a, b) * CDV[b][a][i];
        DIVK[i] = s;
    }

    const double PHI = out.phi, DTPHI = out.dtphi;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const int c6 = C[i][j];
            double t1 = DTPHI * HPHI[c6] / (PHI * PHI * PHI) - HDT[c6] / (PHI * PHI);
            for (int l = 0; l < 3; ++l) t1 += out.dtgamma[l][i][j] * DPHI[l] / (PHI * PHI);

            double kk = 0, vk = 0, kv = 0;
            for (int l = 0; l < 3; ++l) {
                vk += VM[i][l] * k_at(j, l);
                kv += KM[i][l] * v_at(j, l);
                for (int a = 0; a < 3; ++a) kk += KUP[l][a] * k_at(i, a) * k_at(j, l);
            }
            double t2 = v_at(i, j) * TRK + k_at(i, j) * (TRV + 2.0 * K2)
                      - (4.0 * kk + 2.0 * vk + 2.0 * kv);

            double t3 = k_at(i, j) * out.lap_phi;
            for (int a = 0; a < 3; ++a)
                t3 -= KM[i][a] * HPHI[C[a][j]] + KM[j][a] * HPHI[C[a][i]];
            t3 /= PHI;

            double t4 = 0;
            for (int a = 0; a < 3; ++a)
                t4 -= DPHIUP[a] * (CDV[j][i][a] + CDV[i][j][a] - 2.0 * CDV[a][i][j]);
            t4 = (t4 + TRK * HPHI[c6]) / PHI;

            double t5 = (DPHI[j] * (DTRK[i] - DIVK[i]) + DPHI[i] * (DTRK[j] - DIVK[j])) / PHI;

            double t6 = 2.0 * TRK * r_at(i, j) + (k_at(i, j) - g_at(i, j) * TRK) * out.rscal;
            for (int c = 0; c < 3; ++c)
                t6 -= 3.0 * (k_at(c, i) * RM[j][c] + k_at(c, j) * RM[i][c]);
            double rk = 0;
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) rk += RM[a][c] * KM[c][a];
            t6 += 2.0 * g_at(i, j) * rk;

            out.wave_rhs[c6] = t1 + t2 + t3 + t4 + t5 + t6;
            out.mms_Sv[c6] = out.dtv[c6] / PHI - out.lap_k[c6] - out.wave_rhs[c6];
        }
    out.mms_Sphi = out.lap_phi - K2 * PHI;

    // Curvature of the spacetime metric -phi^2 dt^2 + g (zero shift).
    {
        Jet4 g4[4][4], gi4[4][4];
        g4[0][0] = -(phij * phij);
        gi4[0][0] = -recip(phij * phij);
        for (int i = 0; i < 3; ++i) {
            g4[0][i + 1] = Jet4();
            g4[i + 1][0] = Jet4();
            gi4[0][i + 1] = Jet4();
            gi4[i + 1][0] = Jet4();
            for (int j = 0; j < 3; ++j) {
                g4[i + 1][j + 1] = gj[C[i][j]];
                gi4[i + 1][j + 1] = gij[C[i][j]];
            }
        }
        Jet4 dg4[4][4][4]; // dg4[d][m][n] = pd_d g4_mn
        for (int d = 0; d < 4; ++d)
            for (int mu = 0; mu < 4; ++mu)
                for (int nu = mu; nu < 4; ++nu) {
                    dg4[d][mu][nu] = g4[mu][nu].d(d);
                    dg4[d][nu][mu] = dg4[d][mu][nu];
                }
        Jet4 gam4[4][4][4];
        for (int a = 0; a < 4; ++a)
            for (int mu = 0; mu < 4; ++mu)
                for (int nu = mu; nu < 4; ++nu) {
                    Jet4 s;
                    for (int l = 0; l < 4; ++l)
                        s += gi4[a][l] * (dg4[mu][nu][l] + dg4[nu][mu][l] - dg4[l][mu][nu]);
                    gam4[a][mu][nu] = s * 0.5;
                    gam4[a][nu][mu] = gam4[a][mu][nu];
                }
        auto ric4 = [&](int mu, int nu) {
            double s = 0.0;
            for (int a = 0; a < 4; ++a) {
                s += gam4[a][mu][nu].deriv1(a) - gam4[a][mu][a].deriv1(nu);
                for (int b = 0; b < 4; ++b)
                    s += gam4[a][a][b].value() * gam4[b][mu][nu].value()
                       - gam4[a][nu][b].value() * gam4[b][mu][a].value();
            }
            return s;
        };
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) out.st_ric[C[i][j]] = ric4(i + 1, j + 1);
        out.st_r00 = ric4(0, 0) / (PHI * PHI);
        for (int i = 0; i < 3; ++i) out.st_gi[i] = ric4(0, i + 1) / PHI;
    }

    return out;
}

AnalyticMetric flat_metric() {
    AnalyticMetric m;
    m.g[0].constant = m.g[3].constant = m.g[5].constant = 1.0;
    m.phi.constant = 1.0;
    return m;
}

namespace {

TrigMode mode4(double amp, double ft, double pt, double f1, double p1, double f2, double p2,
               double f3, double p3) {
    TrigMode m;
    m.amp = amp;
    m.freq = {ft, f1, f2, f3};
    m.phase = {pt, p1, p2, p3};
    return m;
}

} // namespace

AnalyticMetric mms_metric_x3(double eps, double depth) {
    const double w = 1.0;
    const double q = 2.0 * M_PI / depth;
    AnalyticMetric m = flat_metric();
    m.g[0].modes.push_back(mode4(eps, w, 0.0, 0, 0, 0, 0, q, 0.3));
    m.g[3].modes.push_back(mode4(eps, w, 0.5, 0, 0, 0, 0, q, 1.1));
    m.g[5].modes.push_back(mode4(0.8 * eps, w, 1.2, 0, 0, 0, 0, q, 0.7));
    m.g[2].modes.push_back(mode4(0.5 * eps, w, 0.9, 0, 0, 0, 0, q, 2.0));
    m.g[1].modes.push_back(mode4(0.4 * eps, w, 0.2, 0, 0, 0, 0, q, 0.9));
    m.g[4].modes.push_back(mode4(0.3 * eps, w, 1.7, 0, 0, 0, 0, q, 0.4));
    // phi - 1 vanishes on both faces: cos(pi x3/depth - pi/2) is zero at
    // x3 = 0 and x3 = -depth.
    m.phi.modes.push_back(mode4(0.5 * eps, w, 0.4, 0, 0, 0, 0, M_PI / depth, -M_PI / 2.0));
    return m;
}

AnalyticMetric mms_metric_x1x3(double eps, double depth) {
    const double w = 1.1;
    const double q = 2.0 * M_PI / depth;
    AnalyticMetric m = flat_metric();
    m.g[0].modes.push_back(mode4(eps, w, 0.0, 1, 0.4, 0, 0, q, 0.3));
    m.g[3].modes.push_back(mode4(eps, w, 0.5, 1, 1.3, 0, 0, q, 1.1));
    m.g[5].modes.push_back(mode4(0.8 * eps, w, 1.2, 1, 2.2, 0, 0, q, 0.7));
    m.g[2].modes.push_back(mode4(0.5 * eps, w, 0.9, 1, 0.8, 0, 0, q, 2.0));
    m.g[1].modes.push_back(mode4(0.4 * eps, w, 0.2, 1, 1.9, 0, 0, q, 0.9));
    m.g[4].modes.push_back(mode4(0.3 * eps, w, 1.7, 1, 2.7, 0, 0, q, 0.4));
    m.phi.modes.push_back(mode4(0.5 * eps, w, 0.4, 1, 0.6, 0, 0, M_PI / depth, -M_PI / 2.0));
    return m;
}

AnalyticMetric random_metric(unsigned seed, double eps) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto add_modes = [&](AnalyticScalar& s, double amp) {
        for (int n = 0; n < 2; ++n) {
            TrigMode m;
            m.amp = amp * (0.3 + 0.7 * U(rng));
            m.freq = {0.6 + 0.9 * U(rng), std::floor(1.0 + 2.0 * U(rng)),
                      std::floor(1.0 + 2.0 * U(rng)), 1.0 + 2.0 * U(rng)};
            m.phase = {2 * M_PI * U(rng), 2 * M_PI * U(rng), 2 * M_PI * U(rng),
                       2 * M_PI * U(rng)};
            s.modes.push_back(m);
        }
    };
    AnalyticMetric m = flat_metric();
    for (int c = 0; c < 6; ++c) {
        bool diag = (c == 0 || c == 3 || c == 5);
        add_modes(m.g[c], diag ? eps : 0.5 * eps);
    }
    add_modes(m.phi, 0.5 * eps);
    return m;
}

AnalyticSym random_sym(unsigned seed, double eps) {
    std::mt19937 rng(seed ^ 0x9e3779b9u);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    AnalyticSym s;
    for (int c = 0; c < 6; ++c) {
        for (int n = 0; n < 2; ++n) {
            TrigMode m;
            m.amp = eps * (0.3 + 0.7 * U(rng));
            m.freq = {0.6 + 0.9 * U(rng), std::floor(1.0 + 2.0 * U(rng)),
                      std::floor(1.0 + 2.0 * U(rng)), 1.0 + 2.0 * U(rng)};
            m.phase = {2 * M_PI * U(rng), 2 * M_PI * U(rng), 2 * M_PI * U(rng),
                       2 * M_PI * U(rng)};
            s.comp[c].modes.push_back(m);
        }
    }
    return s;
}

namespace {

// Evaluate `fn(i1, i2, i3)` over the full ghost-extended grid, skipping
// tangential directions the closed form does not depend on.
template <class Fn>
void foreach_sample(const Grid& gr, int mask, Fn&& fn) {
    bool dep1 = mask & 2, dep2 = mask & 4;
    int m1 = dep1 ? gr.n1() : 1;
    int m2 = dep2 ? gr.n2() : 1;
    for (int i3 = -gr.ghost(); i3 <= gr.n3() - 1 + gr.ghost(); ++i3)
        for (int i2 = 0; i2 < m2; ++i2)
            for (int i1 = 0; i1 < m1; ++i1) fn(i1, i2, i3);
}

void broadcast(const Grid& gr, int mask, ScalarField& f) {
    bool dep1 = mask & 2, dep2 = mask & 4;
    if (dep1 && dep2) return;
    for (int i3 = -gr.ghost(); i3 <= gr.n3() - 1 + gr.ghost(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1)
                f(i1, i2, i3) = f(dep1 ? i1 : 0, dep2 ? i2 : 0, i3);
}

} // namespace

void sample_scalar(const AnalyticScalar& s, double t, ScalarField& out) {
    const Grid& gr = out.grid();
    int mask = s.active_mask();
    foreach_sample(gr, mask, [&](int i1, int i2, int i3) {
        out(i1, i2, i3) = s.value(t, gr.x1(i1), gr.x2(i2), gr.x3(i3));
    });
    broadcast(gr, mask, out);
}

void sample_metric(const AnalyticMetric& m, double t, SymTensorField& g) {
    for (int c = 0; c < 6; ++c) sample_scalar(m.g[c], t, g[c]);
}

void sample_sym(const AnalyticSym& s, double t, SymTensorField& out) {
    for (int c = 0; c < 6; ++c) sample_scalar(s.comp[c], t, out[c]);
}

void sample_solution(const AnalyticMetric& m, double t, SymTensorField& g, SymTensorField& k,
                     SymTensorField& v, ScalarField& phi) {
    const Grid& gr = g.grid();
    int mask = m.active_mask();
    foreach_sample(gr, mask, [&](int i1, int i2, int i3) {
        std::array<Jet4, 4> y{Jet4::variable(0, t), Jet4::variable(1, gr.x1(i1)),
                              Jet4::variable(2, gr.x2(i2)), Jet4::variable(3, gr.x3(i3))};
        Jet4 phij = m.phi.jet(y);
        Jet4 iphi = recip(phij);
        phi(i1, i2, i3) = phij.value();
        for (int c = 0; c < 6; ++c) {
            Jet4 gj = m.g[c].jet(y);
            Jet4 kj = gj.d(0) * iphi * (-0.5);
            g[c](i1, i2, i3) = gj.value();
            k[c](i1, i2, i3) = kj.value();
            v[c](i1, i2, i3) = (kj.d(0) * iphi).value();
        }
    });
    broadcast(gr, mask, phi);
    for (int c = 0; c < 6; ++c) {
        broadcast(gr, mask, g[c]);
        broadcast(gr, mask, k[c]);
        broadcast(gr, mask, v[c]);
    }
}

void sample_mms_sources(const AnalyticMetric& m, double t, SymTensorField& Sv,
                        ScalarField& Sphi) {
    const Grid& gr = Sv.grid();
    int mask = m.active_mask();
    bool dep1 = mask & 2, dep2 = mask & 4;
    int m1 = dep1 ? gr.n1() : 1;
    int m2 = dep2 ? gr.n2() : 1;
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < m2; ++i2)
            for (int i1 = 0; i1 < m1; ++i1) {
                ContinuumPoint p = continuum_point(m, t, gr.x1(i1), gr.x2(i2), gr.x3(i3));
                for (int c = 0; c < 6; ++c) Sv[c](i1, i2, i3) = p.mms_Sv[c];
                Sphi(i1, i2, i3) = p.mms_Sphi;
            }
    if (!dep1 || !dep2) {
        for (int i3 = 0; i3 < gr.n3(); ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1) {
                    int s1 = dep1 ? i1 : 0, s2 = dep2 ? i2 : 0;
                    for (int c = 0; c < 6; ++c) Sv[c](i1, i2, i3) = Sv[c](s1, s2, i3);
                    Sphi(i1, i2, i3) = Sphi(s1, s2, i3);
                }
    }
}

} // namespace collar
