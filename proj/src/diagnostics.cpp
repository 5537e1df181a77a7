#include "collar/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "collar/errors.hpp"

namespace collar {

namespace {

const int C6[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

ScalarField volume_element(const SymTensorField& g) {
    const Grid& gr = g.grid();
    ScalarField vol(gr);
    vol.fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1)
                vol(i1, i2, i3) = std::sqrt(det_sym3(load_sym3(g, i1, i2, i3)));
    return vol;
}

// trk = g^{ij} k_ij on i3 in [-ext, n3-1+ext]
ScalarField trace_ext(const SymTensorField& ginv, const SymTensorField& k, int ext) {
    const Grid& gr = k.grid();
    ScalarField out(gr);
    out.fill(ghost_sentinel);
    for (int i3 = -ext; i3 <= gr.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double s = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        s += ginv(i, j, i1, i2, i3) * k(i, j, i1, i2, i3);
                out(i1, i2, i3) = s;
            }
    return out;
}

} // namespace

double l2_norm(const ScalarField& f, const SymTensorField& g) {
    ScalarField sq(f.grid());
    sq.fill(ghost_sentinel);
    const Grid& gr = f.grid();
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1)
                sq(i1, i2, i3) = f(i1, i2, i3) * f(i1, i2, i3);
    return std::sqrt(integrate_volume(sq, volume_element(g)));
}

double l2_norm(const SymTensorField& f, const SymTensorField& g) {
    double s = 0.0;
    for (int c = 0; c < 6; ++c) {
        double n = l2_norm(f[c], g);
        s += n * n;
    }
    return std::sqrt(s);
}

ScalarField hamiltonian(const SymTensorField& g, const SymTensorField& k,
                        const GeometryData& geo) {
    const Grid& gr = g.grid();
    SymTensorField ric = ricci(geo.gamma);
    ScalarField rs = scalar_curvature(geo.ginv, ric);
    ScalarField trk = trace(geo.ginv, k);
    ScalarField k2 = norm2(geo.ginv, k);
    ScalarField out(gr);
    out.fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1)
                out(i1, i2, i3) = rs(i1, i2, i3) + trk(i1, i2, i3) * trk(i1, i2, i3) -
                                  k2(i1, i2, i3);
    return out;
}

std::array<ScalarField, 3> momentum(const SymTensorField& k, const GeometryData& geo) {
    const Grid& gr = k.grid();
    ScalarField trk = trace_ext(geo.ginv, k, 1);
    ScalarField d1 = d_tan(trk, 1), d2 = d_tan(trk, 2), d3 = d_norm(trk);
    auto cd = covariant_deriv(geo.gamma, k, 0);
    std::array<ScalarField, 3> out{ScalarField(gr), ScalarField(gr), ScalarField(gr)};
    for (int j = 0; j < 3; ++j) out[j].fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double dtrk[3] = {d1(i1, i2, i3), d2(i1, i2, i3), d3(i1, i2, i3)};
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                for (int j = 0; j < 3; ++j) {
                    double div = 0.0;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            div += gi(a, b) * cd[b * 6 + C6[a][j]](i1, i2, i3);
                    out[j](i1, i2, i3) = dtrk[j] - div;
                }
            }
    return out;
}

SpacetimeCurvature spacetime_ricci(const State& s, const GeometryData& geo) {
    const Grid& gr = s.g.grid();
    SpacetimeCurvature rc(gr);
    SymTensorField ric = ricci(geo.gamma);
    SymTensorField hphi = hessian(geo.gamma, s.phi);
    ScalarField lphi = laplace_scalar(geo.ginv, geo.gamma, s.phi);
    auto mom = momentum(s.k, geo);
    for (int c = 0; c < 6; ++c) rc.Rij[c].fill(ghost_sentinel);
    rc.R00.fill(ghost_sentinel);
    for (int j = 0; j < 3; ++j) rc.Gi[j] = mom[j];
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 kk = load_sym3(s.k, i1, i2, i3);
                Sym3 vv = load_sym3(s.v, i1, i2, i3);
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                double iphi = 1.0 / s.phi(i1, i2, i3);
                double km[3][3], trk = 0.0, trv = 0.0, k2 = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        km[i][j] = 0.0;
                        for (int l = 0; l < 3; ++l) km[i][j] += gi(j, l) * kk(i, l);
                    }
                for (int i = 0; i < 3; ++i) {
                    trk += km[i][i];
                    for (int j = 0; j < 3; ++j) {
                        double vm = 0.0, kup = 0.0;
                        for (int l = 0; l < 3; ++l) {
                            vm += gi(j, l) * vv(i, l);
                            kup += gi(i, l) * km[l][j];
                        }
                        if (i == j) trv += vm;
                        k2 += kup * kk(i, j);
                    }
                }
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        double kkij = 0.0;
                        for (int l = 0; l < 3; ++l) kkij += km[i][l] * kk(j, l);
                        rc.Rij(i, j, i1, i2, i3) = -vv(i, j) - iphi * hphi(i, j, i1, i2, i3) +
                                                   ric(i, j, i1, i2, i3) + kk(i, j) * trk -
                                                   2.0 * kkij;
                    }
                // e0 trk + phi^{-1} Lap phi - |k|^2, with e0 trk = trv + 2|k|^2
                rc.R00(i1, i2, i3) = trv + k2 + iphi * lphi(i1, i2, i3);
            }
    return rc;
}

EinsteinTensor einstein_tensor(const SpacetimeCurvature& rc, const State& s,
                               const GeometryData& geo) {
    const Grid& gr = s.g.grid();
    EinsteinTensor out(gr);
    for (int c = 0; c < 6; ++c) out.Gij[c].fill(ghost_sentinel);
    out.R.fill(ghost_sentinel);
    ScalarField trk1 = trace_ext(geo.ginv, s.k, 1);
    ScalarField d1 = d_tan(trk1, 1), d2 = d_tan(trk1, 2), d3 = d_norm(trk1);
    for (int j = 0; j < 3; ++j) out.Gtilde[j].fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                double trr = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) trr += gi(i, j) * rc.Rij(i, j, i1, i2, i3);
                double R4 = -rc.R00(i1, i2, i3) + trr;
                out.R(i1, i2, i3) = R4;
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j)
                        out.Gij(i, j, i1, i2, i3) = rc.Rij(i, j, i1, i2, i3) -
                                                    0.5 * s.g(i, j, i1, i2, i3) * R4;
                double dtrk[3] = {d1(i1, i2, i3), d2(i1, i2, i3), d3(i1, i2, i3)};
                for (int j = 0; j < 3; ++j)
                    out.Gtilde[j](i1, i2, i3) = rc.Gi[j](i1, i2, i3) - 0.5 * dtrk[j];
            }
    return out;
}

namespace {

// Frame scalars of a symmetric tensor against (e_1, e_2, N) with the
// tangential trace-free split, valid one layer into the ghosts.
struct FrameScalars {
    ScalarField hat11, hat12, hat21, tau, kn1, kn2, knn;
    explicit FrameScalars(const Grid& g)
        : hat11(g), hat12(g), hat21(g), tau(g), kn1(g), kn2(g), knn(g) {}
};

FrameScalars frame_scalars(const SymTensorField& T, const SymTensorField& g,
                           const GeometryData& geo) {
    const Grid& gr = T.grid();
    FrameScalars out(gr);
    ScalarField* all[7] = {&out.hat11, &out.hat12, &out.hat21, &out.tau,
                           &out.kn1, &out.kn2, &out.knn};
    for (auto* f : all) f->fill(ghost_sentinel);
    for (int i3 = -1; i3 <= gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym2 q{g(0, 0, i1, i2, i3), g(0, 1, i1, i2, i3), g(1, 1, i1, i2, i3)};
                Sym2 qi = inv_sym2(q);
                double N[3] = {geo.frame.N[0](i1, i2, i3), geo.frame.N[1](i1, i2, i3),
                               geo.frame.N[2](i1, i2, i3)};
                double m[2][2];
                for (int A = 0; A < 2; ++A)
                    for (int B = 0; B < 2; ++B) {
                        m[A][B] = 0.0;
                        for (int C = 0; C < 2; ++C) m[A][B] += qi(B, C) * T(A, C, i1, i2, i3);
                    }
                double kn[2] = {0.0, 0.0}, knn = 0.0;
                for (int A = 0; A < 2; ++A)
                    for (int i = 0; i < 3; ++i) kn[A] += N[i] * T(i, A, i1, i2, i3);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) knn += N[i] * N[j] * T(i, j, i1, i2, i3);
                out.hat11(i1, i2, i3) = 0.5 * (m[0][0] - m[1][1]);
                out.hat12(i1, i2, i3) = m[0][1];
                out.hat21(i1, i2, i3) = m[1][0];
                out.tau(i1, i2, i3) = m[0][0] + m[1][1];
                out.kn1(i1, i2, i3) = kn[0];
                out.kn2(i1, i2, i3) = kn[1];
                out.knn(i1, i2, i3) = knn;
            }
    return out;
}

double deriv_dir(const ScalarField& f, const Grid& gr, int dir, int i1, int i2, int i3) {
    switch (dir) {
        case 0: return (f.at(i1 + 1, i2, i3) - f.at(i1 - 1, i2, i3)) / (2.0 * gr.h1());
        case 1: return (f.at(i1, i2 + 1, i3) - f.at(i1, i2 - 1, i3)) / (2.0 * gr.h2());
        default: return (f(i1, i2, i3 + 1) - f(i1, i2, i3 - 1)) / (2.0 * gr.h3());
    }
}

// Coordinate gradient, safe one layer into the ghosts and inward.
void gradient_at(const ScalarField& f, int i1, int i2, int i3, const Grid& gr, double* df) {
    for (int d = 0; d < 3; ++d) df[d] = deriv_dir(f, gr, d, i1, i2, i3);
}

double integrate_margin(const Grid& gr, int m, const std::function<double(int, int, int)>& f) {
    double total = 0.0;
    int lo = m, hi = gr.n3() - 1 - m;
    for (int i3 = lo; i3 <= hi; ++i3) {
        double w3 = (i3 == lo || i3 == hi) ? 0.5 : 1.0;
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) total += w3 * f(i1, i2, i3);
    }
    return total * gr.h1() * gr.h2() * gr.h3();
}

} // namespace

double energy_k(const State& s, const GeometryData& geo, int r, const State* prev,
                double dt) {
    if (r != 0 && r != 1) throw config_error("energy order must be 0 or 1");
    if (r == 1 && prev == nullptr)
        throw solver_error("first-order energy needs a previous slice");
    const Grid& gr = s.g.grid();
    require_ghosts(s.k[0], 2, "energy");
    SymTensorField ve = s.v;
    fill_ghosts_extrapolate(ve);
    FrameScalars fk = frame_scalars(s.k, s.g, geo);
    FrameScalars fv = frame_scalars(ve, s.g, geo);
    ScalarField vol = volume_element(s.g);

    // pairs (k-scalar, e0-scalar, multiplicity); k_NA handled with the metric
    const ScalarField* u[5] = {&fk.hat11, &fk.hat12, &fk.hat21, &fk.tau, &fk.knn};
    const ScalarField* ue[5] = {&fv.hat11, &fv.hat12, &fv.hat21, &fv.tau, &fv.knn};
    const double mult[5] = {2.0, 1.0, 1.0, 1.0, 1.0};

    auto quad_at = [&](const FrameScalars& a, const FrameScalars& ae, int i1, int i2,
                       int i3) {
        Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
        Sym2 q{s.g(0, 0, i1, i2, i3), s.g(0, 1, i1, i2, i3), s.g(1, 1, i1, i2, i3)};
        Sym2 qiv = inv_sym2(q);
        const ScalarField* au[5] = {&a.hat11, &a.hat12, &a.hat21, &a.tau, &a.knn};
        const ScalarField* aue[5] = {&ae.hat11, &ae.hat12, &ae.hat21, &ae.tau, &ae.knn};
        double sum = 0.0;
        for (int p = 0; p < 5; ++p) {
            double e0 = (*aue[p])(i1, i2, i3);
            double df[3];
            gradient_at(*au[p], i1, i2, i3, gr, df);
            double grad2 = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) grad2 += gi(i, j) * df[i] * df[j];
            sum += mult[p] * (e0 * e0 + grad2);
        }
        const ScalarField* kn[2] = {&a.kn1, &a.kn2};
        const ScalarField* kne[2] = {&ae.kn1, &ae.kn2};
        double dkn[2][3], e0kn[2];
        for (int A = 0; A < 2; ++A) {
            gradient_at(*kn[A], i1, i2, i3, gr, dkn[A]);
            e0kn[A] = (*kne[A])(i1, i2, i3);
        }
        for (int A = 0; A < 2; ++A)
            for (int B = 0; B < 2; ++B) {
                double grad = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) grad += gi(i, j) * dkn[A][i] * dkn[B][j];
                sum += 4.0 * qiv(A, B) * (e0kn[A] * e0kn[B] + grad);
            }
        return sum;
    };

    double total = integrate_margin(gr, 0, [&](int i1, int i2, int i3) {
        return quad_at(fk, fv, i1, i2, i3) * vol(i1, i2, i3);
    });

    if (r == 1) {
        // one coordinate derivative of every scalar (margin 1 in the normal
        // direction), e0 represented through the matching v-scalar derivative
        auto deriv_field = [&](const ScalarField& f, int dir) {
            ScalarField out(gr);
            out.fill(ghost_sentinel);
            int m = dir == 2 ? 0 : -1;
            for (int i3 = m; i3 <= gr.n3() - 1 - m; ++i3)
                for (int i2 = 0; i2 < gr.n2(); ++i2)
                    for (int i1 = 0; i1 < gr.n1(); ++i1)
                        out(i1, i2, i3) = deriv_dir(f, gr, dir, i1, i2, i3);
            return out;
        };
        for (int dir = 0; dir < 3; ++dir) {
            FrameScalars dk(gr), dv(gr);
            ScalarField* dsts[7] = {&dk.hat11, &dk.hat12, &dk.hat21, &dk.tau,
                                    &dk.kn1, &dk.kn2, &dk.knn};
            ScalarField* dste[7] = {&dv.hat11, &dv.hat12, &dv.hat21, &dv.tau,
                                    &dv.kn1, &dv.kn2, &dv.knn};
            const ScalarField* srcs[7] = {&fk.hat11, &fk.hat12, &fk.hat21, &fk.tau,
                                          &fk.kn1, &fk.kn2, &fk.knn};
            const ScalarField* srce[7] = {&fv.hat11, &fv.hat12, &fv.hat21, &fv.tau,
                                          &fv.kn1, &fv.kn2, &fv.knn};
            for (int p = 0; p < 7; ++p) {
                *dsts[p] = deriv_field(*srcs[p], dir);
                *dste[p] = deriv_field(*srce[p], dir);
            }
            total += integrate_margin(gr, 1, [&](int i1, int i2, int i3) {
                return quad_at(dk, dv, i1, i2, i3) * vol(i1, i2, i3);
            });
        }
        // one time difference against the previous slice
        GeometryData pgeo(gr);
        SymTensorField pg = prev->g;
        build_geometry(pg, pgeo);
        SymTensorField pve = prev->v;
        fill_ghosts_extrapolate(pve);
        FrameScalars pk = frame_scalars(prev->k, pg, pgeo);
        FrameScalars pv = frame_scalars(pve, pg, pgeo);
        FrameScalars tk(gr), tv(gr);
        ScalarField* tks[7] = {&tk.hat11, &tk.hat12, &tk.hat21, &tk.tau,
                               &tk.kn1, &tk.kn2, &tk.knn};
        ScalarField* tvs[7] = {&tv.hat11, &tv.hat12, &tv.hat21, &tv.tau,
                               &tv.kn1, &tv.kn2, &tv.knn};
        const ScalarField* cks[7] = {&fk.hat11, &fk.hat12, &fk.hat21, &fk.tau,
                                     &fk.kn1, &fk.kn2, &fk.knn};
        const ScalarField* cvs[7] = {&fv.hat11, &fv.hat12, &fv.hat21, &fv.tau,
                                     &fv.kn1, &fv.kn2, &fv.knn};
        const ScalarField* pks[7] = {&pk.hat11, &pk.hat12, &pk.hat21, &pk.tau,
                                     &pk.kn1, &pk.kn2, &pk.knn};
        const ScalarField* pvs[7] = {&pv.hat11, &pv.hat12, &pv.hat21, &pv.tau,
                                     &pv.kn1, &pv.kn2, &pv.knn};
        for (int p = 0; p < 7; ++p) {
            *tks[p] = *cks[p];
            (*tks[p]) -= *pks[p];
            (*tks[p]) *= 1.0 / dt;
            *tvs[p] = *cvs[p];
            (*tvs[p]) -= *pvs[p];
            (*tvs[p]) *= 1.0 / dt;
        }
        total += integrate_margin(gr, 0, [&](int i1, int i2, int i3) {
            return quad_at(tk, tv, i1, i2, i3) * vol(i1, i2, i3);
        });
    }
    return total;
}

double hnorm2(const ScalarField& u, const GeometryData& geo, const SymTensorField& g,
              int r) {
    if (r < 0 || r > 3) throw config_error("Sobolev order must be in 0..3");
    const Grid& gr = u.grid();
    ScalarField vol = volume_element(g);
    struct MF {
        ScalarField f;
        int m; // valid for i3 in [m, n3-1-m]
    };
    auto deriv = [&](const MF& in, int dir) {
        MF out{ScalarField(gr), dir == 2 ? in.m + 1 : in.m};
        out.f.fill(ghost_sentinel);
        for (int i3 = out.m; i3 <= gr.n3() - 1 - out.m; ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1)
                    out.f(i1, i2, i3) = deriv_dir(in.f, gr, dir, i1, i2, i3);
        return out;
    };
    auto nderiv = [&](const MF& in) {
        MF out{ScalarField(gr), std::max(in.m + 1, -1)};
        out.f.fill(ghost_sentinel);
        for (int i3 = out.m; i3 <= gr.n3() - 1 - out.m; ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1) {
                    double df[3];
                    gradient_at(in.f, i1, i2, i3, gr, df);
                    double s = 0.0;
                    for (int i = 0; i < 3; ++i) s += geo.frame.N[i](i1, i2, i3) * df[i];
                    out.f(i1, i2, i3) = s;
                }
        return out;
    };
    auto accum = [&](const MF& f) {
        int m = std::max(f.m, 0);
        return integrate_margin(gr, m, [&](int i1, int i2, int i3) {
            double x = f.f(i1, i2, i3);
            return x * x * vol(i1, i2, i3);
        });
    };

    double total = 0.0;
    // all applications of r1 coordinate derivatives followed by r2 normal ones
    for (int r1 = 0; r1 <= r; ++r1)
        for (int r2 = 0; r1 + r2 <= r; ++r2) {
            std::vector<MF> cur;
            cur.push_back(MF{u, -2});
            for (int d = 0; d < r1; ++d) {
                std::vector<MF> next;
                for (const MF& f : cur)
                    for (int dir = 0; dir < 3; ++dir) next.push_back(deriv(f, dir));
                cur = std::move(next);
            }
            for (int d = 0; d < r2; ++d) {
                std::vector<MF> next;
                for (const MF& f : cur) next.push_back(nderiv(f));
                cur = std::move(next);
            }
            for (const MF& f : cur) total += accum(f);
        }
    return total;
}

double energy_total(const State& s, const GeometryData& geo, int r,
                    const SymTensorField& g0, const ScalarField& dtphi, const State* prev,
                    double dt) {
    double total = energy_k(s, geo, r, prev, dt);
    const Grid& gr = s.g.grid();
    SymTensorField g0e = g0;
    fill_ghosts_extrapolate(g0e);
    for (int c = 0; c < 6; ++c) {
        ScalarField dev = s.g[c];
        dev -= g0e[c];
        total += hnorm2(dev, geo, s.g, r + 1);
    }
    ScalarField pdev = s.phi;
    {
        ScalarField one(gr);
        one.fill(1.0);
        pdev -= one;
    }
    total += hnorm2(pdev, geo, s.g, r + 2);
    ScalarField dpe = dtphi;
    fill_ghosts_extrapolate(dpe);
    total += hnorm2(dpe, geo, s.g, r + 1);
    return total;
}

double trace_identity_check(const State& s, const EllipticConfig& cfg, bool solve_phi) {
    const Grid& gr = s.g.grid();
    State w = s;
    GeometryData geo(gr);
    build_geometry(w.g, geo);
    require_ghosts(w.k[0], 2, "trace identity");
    ScalarField sigma = norm2(geo.ginv, w.k);
    if (solve_phi) {
        w.phi = solve_lapse(geo.ginv, geo.gamma, sigma, cfg);
    }
    fill_ghosts_extrapolate(w.phi);

    SymTensorField hphi = hessian(geo.gamma, w.phi);
    ChristoffelField dgam = dt_christoffel(geo.ginv, geo.gamma, w.k, w.phi);
    ScalarField dphi1 = d_tan(w.phi, 1), dphi2 = d_tan(w.phi, 2), dphi3 = d_norm(w.phi);

    ScalarField dtphi(gr);
    dtphi.fill(0.0);
    if (solve_phi) {
        // time-differentiated lapse equation:
        // Lap dtphi - |k|^2 dtphi = dt(|k|^2) phi - (dt Lap)(phi)
        ScalarField rhs(gr);
        rhs.fill(ghost_sentinel);
        for (int i3 = 0; i3 < gr.n3(); ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1) {
                    Sym3 kk = load_sym3(w.k, i1, i2, i3);
                    Sym3 vv = load_sym3(w.v, i1, i2, i3);
                    Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                    double phi = w.phi(i1, i2, i3);
                    double km[3][3];
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) {
                            km[i][j] = 0.0;
                            for (int l = 0; l < 3; ++l) km[i][j] += gi(j, l) * kk(i, l);
                        }
                    double kv = 0.0, k3 = 0.0, kup[3][3];
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) {
                            kup[i][j] = 0.0;
                            for (int l = 0; l < 3; ++l) kup[i][j] += gi(i, l) * km[l][j];
                        }
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) {
                            kv += kup[i][j] * vv(i, j);
                            for (int l = 0; l < 3; ++l) k3 += km[i][j] * km[j][l] * km[l][i];
                        }
                    double dtk2 = phi * (2.0 * kv + 4.0 * k3);
                    // (dt Lap) phi = 2 phi k^{ab} Hess_ab - g^{ab} dtGamma^c_{ab} d_c phi
                    double dlap = 0.0;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            dlap += 2.0 * phi * kup[a][b] * hphi(a, b, i1, i2, i3);
                    double dphi[3] = {dphi1(i1, i2, i3), dphi2(i1, i2, i3),
                                      dphi3(i1, i2, i3)};
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            for (int c = 0; c < 3; ++c)
                                dlap -= gi(a, b) * dgam.at(c, a, b)(i1, i2, i3) * dphi[c];
                    rhs(i1, i2, i3) = dtk2 * phi - dlap;
                }
        ScalarField zero(gr);
        zero.fill(0.0);
        dtphi = solve_helmholtz(geo.ginv, geo.gamma, sigma, rhs, zero, cfg);
        fill_ghosts_extrapolate(dtphi);
    }

    RhsOut rhs_out(gr);
    eval_rhs(w, geo, dtphi, rhs_out);
    auto mom = momentum(w.k, geo);
    ScalarField trk = trace_ext(geo.ginv, w.k, 1);
    ScalarField laptrk = laplace_scalar(geo.ginv, geo.gamma, trk);

    ScalarField res(gr);
    res.fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 kk = load_sym3(w.k, i1, i2, i3);
                Sym3 vv = load_sym3(w.v, i1, i2, i3);
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                double phi = w.phi(i1, i2, i3);
                double km[3][3], kup[3][3];
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        km[i][j] = 0.0;
                        for (int l = 0; l < 3; ++l) km[i][j] += gi(j, l) * kk(i, l);
                    }
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        kup[i][j] = 0.0;
                        for (int l = 0; l < 3; ++l) kup[i][j] += gi(i, l) * km[l][j];
                    }
                double trv = 0.0, k2 = 0.0, kv = 0.0, k3 = 0.0, wavetr = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        trv += gi(i, j) * vv(i, j);
                        k2 += kup[i][j] * kk(i, j);
                        kv += kup[i][j] * vv(i, j);
                        wavetr += gi(i, j) * rhs_out.dv(i, j, i1, i2, i3) / phi;
                        for (int l = 0; l < 3; ++l) k3 += km[i][j] * km[j][l] * km[l][i];
                    }
                double trk_v = trk(i1, i2, i3);
                double e0k2 = 2.0 * kv + 4.0 * k3;
                double e0sq = wavetr + 2.0 * kv + 2.0 * e0k2;
                double lhs = e0sq - laptrk(i1, i2, i3);
                double dphi[3] = {dphi1(i1, i2, i3), dphi2(i1, i2, i3), dphi3(i1, i2, i3)};
                double gphi_dot_G = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        gphi_dot_G += gi(a, b) * dphi[a] * mom[b](i1, i2, i3);
                double rhsval = 2.0 * trk_v * (trv + 2.0 * k2) + 4.0 / phi * gphi_dot_G;
                res(i1, i2, i3) = lhs - rhsval;
            }
    return l2_norm(res, w.g);
}

namespace {

// Gtilde one layer into the ghosts (needs g, k ghosts to depth 2).
std::array<ScalarField, 3> gtilde_ext1(const State& s, const GeometryData& geo) {
    const Grid& gr = s.g.grid();
    SymTensorField gi2 = inverse_metric(s.g, 2);
    ScalarField trk = trace_ext(gi2, s.k, 2);
    ScalarField d1 = d_tan(trk, 1, 1), d2 = d_tan(trk, 2, 1), d3 = d_norm(trk, 1);
    auto cd = covariant_deriv(geo.gamma, s.k, 1);
    std::array<ScalarField, 3> out{ScalarField(gr), ScalarField(gr), ScalarField(gr)};
    for (int j = 0; j < 3; ++j) out[j].fill(ghost_sentinel);
    for (int i3 = -1; i3 <= gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 gi = load_sym3(geo.ginv, i1, i2, i3);
                double dtrk[3] = {d1(i1, i2, i3), d2(i1, i2, i3), d3(i1, i2, i3)};
                for (int j = 0; j < 3; ++j) {
                    double div = 0.0;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            div += gi(a, b) * cd[b * 6 + C6[a][j]](i1, i2, i3);
                    out[j](i1, i2, i3) = dtrk[j] - div - 0.5 * dtrk[j];
                }
            }
    return out;
}

} // namespace

double propagation_check(const State& sm, const State& s0, const State& sp) {
    const Grid& gr = s0.g.grid();
    const double dt = 0.5 * (sp.t - sm.t);
    if (!(dt > 0.0)) throw config_error("propagation window must be time-ordered");

    auto curvature = [&](const State& s, GeometryData& geo, SymTensorField& gcopy) {
        gcopy = s.g;
        build_geometry(gcopy, geo);
        State w = s;
        w.g = gcopy;
        SpacetimeCurvature rc = spacetime_ricci(w, geo);
        return einstein_tensor(rc, w, geo);
    };
    GeometryData gm(gr), g0(gr), gp(gr);
    SymTensorField cm(gr), c0(gr), cp(gr);
    EinsteinTensor Em = curvature(sm, gm, cm);
    EinsteinTensor E0 = curvature(s0, g0, c0);
    EinsteinTensor Ep = curvature(sp, gp, cp);

    State w0 = s0;
    w0.g = c0;
    SpacetimeCurvature rc0 = spacetime_ricci(w0, g0);
    auto gt = gtilde_ext1(w0, g0);
    std::array<ScalarField, 3> dgt1{d_tan(gt[0], 1), d_tan(gt[1], 1), d_tan(gt[2], 1)};
    std::array<ScalarField, 3> dgt2{d_tan(gt[0], 2), d_tan(gt[1], 2), d_tan(gt[2], 2)};
    std::array<ScalarField, 3> dgt3{d_norm(gt[0]), d_norm(gt[1]), d_norm(gt[2])};
    ScalarField trk = trace_ext(g0.ginv, w0.k, 1);
    ScalarField laptrk = laplace_scalar(g0.ginv, g0.gamma, trk);
    ScalarField dtrk1 = d_tan(trk, 1), dtrk2 = d_tan(trk, 2), dtrk3 = d_norm(trk);
    ScalarField dphi1 = d_tan(w0.phi, 1), dphi2 = d_tan(w0.phi, 2), dphi3 = d_norm(w0.phi);

    SymTensorField resf(gr);
    for (int c = 0; c < 6; ++c) resf[c].fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double phi = w0.phi(i1, i2, i3);
                Sym3 kk = load_sym3(w0.k, i1, i2, i3);
                Sym3 gi = load_sym3(g0.ginv, i1, i2, i3);
                Sym3 gg = load_sym3(c0, i1, i2, i3);
                double km[3][3], trkv = trk(i1, i2, i3), trv = 0.0, k2 = 0.0;
                Sym3 vv = load_sym3(w0.v, i1, i2, i3);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        km[i][j] = 0.0;
                        for (int l = 0; l < 3; ++l) km[i][j] += gi(j, l) * kk(i, l);
                    }
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        double vm = 0.0, kup = 0.0;
                        for (int l = 0; l < 3; ++l) {
                            vm += gi(j, l) * vv(i, l);
                            kup += gi(i, l) * km[l][j];
                        }
                        if (i == j) trv += vm;
                        k2 += kup * kk(i, j);
                    }
                double gtv[3] = {gt[0](i1, i2, i3), gt[1](i1, i2, i3), gt[2](i1, i2, i3)};
                double dgt[3][3]; // d_i gtilde_j
                for (int j = 0; j < 3; ++j) {
                    dgt[0][j] = dgt1[j](i1, i2, i3);
                    dgt[1][j] = dgt2[j](i1, i2, i3);
                    dgt[2][j] = dgt3[j](i1, i2, i3);
                }
                double cov[3][3]; // nabla_i gtilde_j
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        double sgt = dgt[i][j];
                        for (int c = 0; c < 3; ++c)
                            sgt -= g0.gamma.at(c, i, j)(i1, i2, i3) * gtv[c];
                        cov[i][j] = sgt;
                    }
                double divgt = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int a = 0; a < 3; ++a) divgt += gi(i, a) * cov[i][a];
                double dphi[3] = {dphi1(i1, i2, i3), dphi2(i1, i2, i3), dphi3(i1, i2, i3)};
                double dtrk[3] = {dtrk1(i1, i2, i3), dtrk2(i1, i2, i3), dtrk3(i1, i2, i3)};
                double gphi_gt = 0.0, gphi_dtrk = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        gphi_gt += gi(a, b) * dphi[a] * gtv[b];
                        gphi_dtrk += gi(a, b) * dphi[a] * dtrk[b];
                    }
                double kR = 0.0; // k^{ab} Rij_ab
                double R4 = E0.R(i1, i2, i3);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        double kab = 0.0;
                        for (int l = 0; l < 3; ++l)
                            for (int m = 0; m < 3; ++m)
                                kab += gi(a, l) * gi(b, m) * kk(l, m);
                        kR += kab * rc0.Rij(a, b, i1, i2, i3);
                    }
                double e0trk2 = 2.0 * trkv * (trv + 2.0 * k2);
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        double e0G = (Ep.Gij(i, j, i1, i2, i3) - Em.Gij(i, j, i1, i2, i3)) /
                                     (2.0 * dt * phi);
                        double rhs = cov[i][j] + cov[j][i] - gg(i, j) * divgt +
                                     0.5 * gg(i, j) * laptrk(i1, i2, i3) +
                                     kk(i, j) * R4 - gg(i, j) * kR +
                                     0.5 * gg(i, j) * e0trk2 +
                                     2.0 * gg(i, j) * gphi_gt / phi +
                                     gg(i, j) * gphi_dtrk / phi;
                        resf(i, j, i1, i2, i3) = e0G - rhs;
                    }
            }
    return l2_norm(resf, c0);
}

ConvergenceRate convergence_rate(double e0, double e1, double e2) {
    ConvergenceRate out;
    out.monotone = e0 > e1 && e1 > e2 && e2 > 0.0;
    if (e0 > 0.0 && e1 > 0.0) out.rate01 = std::log2(e0 / e1);
    if (e1 > 0.0 && e2 > 0.0) out.rate12 = std::log2(e1 / e2);
    return out;
}

DiagnosticsRecord compute_diagnostics(const State& s, const GeometryData& geo,
                                      const BoundaryData& bd, const SymTensorField& g0,
                                      const ScalarField& dtphi, int r, const State* prev,
                                      double dt) {
    DiagnosticsRecord rec;
    rec.t = s.t;
    ScalarField ham = hamiltonian(s.g, s.k, geo);
    rec.ham_l2 = l2_norm(ham, s.g);
    auto mom = momentum(s.k, geo);
    for (int j = 0; j < 3; ++j) rec.mom_l2[j] = l2_norm(mom[j], s.g);
    ScalarField trk = trace(geo.ginv, s.k);
    rec.trk_l2 = l2_norm(trk, s.g);
    rec.trk_max = trk.max_abs_interior();
    SpacetimeCurvature rc = spacetime_ricci(s, geo);
    rec.ricci_ij_l2 = l2_norm(rc.Rij, s.g);
    rec.ricci_00_l2 = l2_norm(rc.R00, s.g);
    double gi2 = 0.0;
    for (int j = 0; j < 3; ++j) {
        double n = l2_norm(rc.Gi[j], s.g);
        gi2 += n * n;
    }
    rec.gi_l2 = std::sqrt(gi2);
    EinsteinTensor et = einstein_tensor(rc, s, geo);
    rec.einstein_l2 = l2_norm(et.Gij, s.g);
    double gt2 = 0.0;
    for (int j = 0; j < 3; ++j) {
        double n = l2_norm(et.Gtilde[j], s.g);
        gt2 += n * n;
    }
    rec.gtilde_l2 = std::sqrt(gt2);
    rec.energy_k = energy_k(s, geo, r, prev, dt);
    rec.energy_total = energy_total(s, geo, r, g0, dtphi, prev, dt);
    rec.c_bd = cbd_norm(*bd.inner, s.g.grid(), s.t, r) +
               cbd_norm(*bd.outer, s.g.grid(), s.t, r);
    BcResiduals bres = bc_residuals(s.k, s.g, geo.ginv, geo.gamma, geo.frame, bd, s.t);
    rec.bc_knn_max = bres.knn;
    rec.bc_kna_max = bres.kna;
    rec.bc_kcc_max = bres.kcc;
    return rec;
}

} // namespace collar
