#include "collar/geometry.hpp"

#include <cmath>

namespace collar {

namespace {

ScalarField deriv(const ScalarField& f, int dir, int ext) {
    return dir == 3 ? d_norm(f, ext) : d_tan(f, dir, ext);
}

} // namespace

ChristoffelField::ChristoffelField(const Grid& grid)
    : c_{ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid),
         ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid),
         ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid),
         ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid),
         ScalarField(grid), ScalarField(grid)} {}

double det_sym3(const Sym3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2))
         - m(0, 1) * (m(0, 1) * m(2, 2) - m(1, 2) * m(0, 2))
         + m(0, 2) * (m(0, 1) * m(1, 2) - m(1, 1) * m(0, 2));
}

Sym3 inv_sym3(const Sym3& m, double det) {
    Sym3 r;
    double id = 1.0 / det;
    r.ref(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) * id;
    r.ref(0, 1) = (m(0, 2) * m(1, 2) - m(0, 1) * m(2, 2)) * id;
    r.ref(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) * id;
    r.ref(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(0, 2)) * id;
    r.ref(1, 2) = (m(0, 1) * m(0, 2) - m(0, 0) * m(1, 2)) * id;
    r.ref(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1)) * id;
    return r;
}

double min_eig_sym3(const Sym3& m) {
    // Analytic symmetric 3x3 eigenvalue bound (trigonometric form).
    double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
    double b00 = m(0, 0) - q, b11 = m(1, 1) - q, b22 = m(2, 2) - q;
    double p2 = b00 * b00 + b11 * b11 + b22 * b22
              + 2.0 * (m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2));
    double p = std::sqrt(p2 / 6.0);
    if (p < 1e-300) return q;
    Sym3 b;
    b.ref(0, 0) = b00 / p; b.ref(1, 1) = b11 / p; b.ref(2, 2) = b22 / p;
    b.ref(0, 1) = m(0, 1) / p; b.ref(0, 2) = m(0, 2) / p; b.ref(1, 2) = m(1, 2) / p;
    double r = det_sym3(b) / 2.0;
    r = std::max(-1.0, std::min(1.0, r));
    double phi = std::acos(r) / 3.0;
    // Smallest eigenvalue corresponds to the phase shifted by 2*pi/3 twice.
    return q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
}

SymTensorField inverse_metric(const SymTensorField& g, int ext) {
    const Grid& gr = g.grid();
    SymTensorField out(gr);
    for (int c = 0; c < 6; ++c) out[c].fill(ghost_sentinel);
    for (int i3 = -ext; i3 <= gr.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 m = load_sym3(g, i1, i2, i3);
                double det = det_sym3(m);
                if (det < 1e-10)
                    throw numeric_error("inverse_metric: det g below 1e-10, metric degenerate");
                if (min_eig_sym3(m) < 1e-8)
                    throw numeric_error("inverse_metric: metric eigenvalue below 1e-8");
                Sym3 inv = inv_sym3(m, det);
                for (int c = 0; c < 6; ++c) out[c](i1, i2, i3) = inv.v[c];
            }
    return out;
}

ChristoffelField christoffels(const SymTensorField& g, const SymTensorField& ginv, int ext) {
    const Grid& gr = g.grid();
    ChristoffelField gam(gr);
    for (int i = 0; i < 18; ++i) gam.flat(i).fill(ghost_sentinel);
    // dg[d][c] = pd_d g_c at the requested extension.
    std::array<std::array<ScalarField, 6>, 3> dg{
        std::array<ScalarField, 6>{ScalarField(gr), ScalarField(gr), ScalarField(gr),
                                   ScalarField(gr), ScalarField(gr), ScalarField(gr)},
        std::array<ScalarField, 6>{ScalarField(gr), ScalarField(gr), ScalarField(gr),
                                   ScalarField(gr), ScalarField(gr), ScalarField(gr)},
        std::array<ScalarField, 6>{ScalarField(gr), ScalarField(gr), ScalarField(gr),
                                   ScalarField(gr), ScalarField(gr), ScalarField(gr)}};
    for (int d = 0; d < 3; ++d)
        for (int c = 0; c < 6; ++c)
            dg[d][c] = deriv(g[c], d + 1, ext);
    for (int i3 = -ext; i3 <= gr.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 gi = load_sym3(ginv, i1, i2, i3);
                double pd[3][3][3]; // pd[d][i][j] = pd_d g_ij
                for (int d = 0; d < 3; ++d)
                    for (int i = 0; i < 3; ++i)
                        for (int j = i; j < 3; ++j)
                            pd[d][i][j] = pd[d][j][i] = dg[d][SymTensorField::comp(i, j)](i1, i2, i3);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = b; c < 3; ++c) {
                            double s = 0.0;
                            for (int l = 0; l < 3; ++l)
                                s += gi(a, l) * (pd[b][c][l] + pd[c][b][l] - pd[l][b][c]);
                            gam.at(a, b, c)(i1, i2, i3) = 0.5 * s;
                        }
            }
    return gam;
}

SymTensorField ricci(const ChristoffelField& gamma) {
    const Grid& gr = gamma.grid();
    // Contracted symbols t_i = Gamma^a_{ia}, valid wherever Gamma is.
    std::array<ScalarField, 3> tr{ScalarField(gr), ScalarField(gr), ScalarField(gr)};
    for (int i = 0; i < 3; ++i) {
        tr[i].fill(0.0);
        // Gamma validity may extend into ghosts; copy the full range.
        for (int i3 = -1; i3 <= gr.n3(); ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1) {
                    double s = 0.0;
                    for (int a = 0; a < 3; ++a) s += gamma.at(a, i, a)(i1, i2, i3);
                    tr[i](i1, i2, i3) = s;
                }
    }
    std::array<std::array<ScalarField, 3>, 3> dtr{
        std::array<ScalarField, 3>{ScalarField(gr), ScalarField(gr), ScalarField(gr)},
        std::array<ScalarField, 3>{ScalarField(gr), ScalarField(gr), ScalarField(gr)},
        std::array<ScalarField, 3>{ScalarField(gr), ScalarField(gr), ScalarField(gr)}};
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            dtr[j][i] = deriv(tr[i], j + 1, 0);
    // div[c(i,j)] = pd_a Gamma^a_{ij}
    SymTensorField div(gr);
    for (int c = 0; c < 6; ++c) div[c].fill(0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            for (int a = 0; a < 3; ++a)
                div[SymTensorField::comp(i, j)] += deriv(gamma.at(a, i, j), a + 1, 0);

    SymTensorField out(gr);
    for (int c = 0; c < 6; ++c) out[c].fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double gm[3][3][3];
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = b; c < 3; ++c)
                            gm[a][b][c] = gm[a][c][b] = gamma.at(a, b, c)(i1, i2, i3);
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        double quad = 0.0;
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b)
                                quad += gm[a][a][b] * gm[b][i][j] - gm[a][j][b] * gm[b][i][a];
                        double val = div(i, j, i1, i2, i3)
                                   - 0.5 * (dtr[j][i](i1, i2, i3) + dtr[i][j](i1, i2, i3))
                                   + quad;
                        out(i, j, i1, i2, i3) = val;
                    }
            }
    return out;
}

ScalarField scalar_curvature(const SymTensorField& ginv, const SymTensorField& ric) {
    return trace(ginv, ric);
}

SymTensorField hessian(const ChristoffelField& gamma, const ScalarField& phi) {
    const Grid& gr = phi.grid();
    SymTensorField out(gr);
    std::array<ScalarField, 3> dphi{deriv(phi, 1, 0), deriv(phi, 2, 0), deriv(phi, 3, 0)};
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            ScalarField h = d2(phi, i + 1, j + 1, 0);
            for (int i3 = 0; i3 < gr.n3(); ++i3)
                for (int i2 = 0; i2 < gr.n2(); ++i2)
                    for (int i1 = 0; i1 < gr.n1(); ++i1) {
                        double corr = 0.0;
                        for (int c = 0; c < 3; ++c)
                            corr += gamma.at(c, i, j)(i1, i2, i3) * dphi[c](i1, i2, i3);
                        h(i1, i2, i3) -= corr;
                    }
            out[SymTensorField::comp(i, j)] = h;
        }
    return out;
}

ScalarField laplace_scalar(const SymTensorField& ginv, const ChristoffelField& gamma,
                           const ScalarField& phi) {
    return trace(ginv, hessian(gamma, phi));
}

std::array<ScalarField, 18> covariant_deriv(const ChristoffelField& gamma,
                                            const SymTensorField& T, int ext) {
    const Grid& gr = T.grid();
    std::array<ScalarField, 18> out{
        ScalarField(gr), ScalarField(gr), ScalarField(gr), ScalarField(gr), ScalarField(gr),
        ScalarField(gr), ScalarField(gr), ScalarField(gr), ScalarField(gr), ScalarField(gr),
        ScalarField(gr), ScalarField(gr), ScalarField(gr), ScalarField(gr), ScalarField(gr),
        ScalarField(gr), ScalarField(gr), ScalarField(gr)};
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 6; ++c)
            out[a * 6 + c] = deriv(T[c], a + 1, ext);
    for (int i3 = -ext; i3 <= gr.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 t = load_sym3(T, i1, i2, i3);
                double gm[3][3][3];
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = b; c < 3; ++c)
                            gm[a][b][c] = gm[a][c][b] = gamma.at(a, b, c)(i1, i2, i3);
                for (int a = 0; a < 3; ++a)
                    for (int i = 0; i < 3; ++i)
                        for (int j = i; j < 3; ++j) {
                            double corr = 0.0;
                            for (int c = 0; c < 3; ++c)
                                corr += gm[c][a][i] * t(c, j) + gm[c][a][j] * t(i, c);
                            out[a * 6 + SymTensorField::comp(i, j)](i1, i2, i3) -= corr;
                        }
            }
    return out;
}

SymTensorField laplace_tensor(const SymTensorField& g, const SymTensorField& ginv,
                              const ChristoffelField& gamma, const SymTensorField& T) {
    (void)g;
    const Grid& gr = T.grid();
    auto cd = covariant_deriv(gamma, T, 1);
    SymTensorField out(gr);
    for (int c = 0; c < 6; ++c) out[c].fill(0.0);
    // Second-derivative part g^{ab} pd_a (nabla_b T)_ij.
    for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 6; ++c)
            for (int a = 0; a < 3; ++a) {
                ScalarField d = deriv(cd[b * 6 + c], a + 1, 0);
                const ScalarField& w = ginv[SymTensorField::comp(a, b)];
                for (int i3 = 0; i3 < gr.n3(); ++i3)
                    for (int i2 = 0; i2 < gr.n2(); ++i2)
                        for (int i1 = 0; i1 < gr.n1(); ++i1)
                            out[c](i1, i2, i3) += w(i1, i2, i3) * d(i1, i2, i3);
            }
    // Connection corrections.
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 gi = load_sym3(ginv, i1, i2, i3);
                double gm[3][3][3];
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = b; c < 3; ++c)
                            gm[a][b][c] = gm[a][c][b] = gamma.at(a, b, c)(i1, i2, i3);
                double cdv[3][3][3];
                for (int a = 0; a < 3; ++a)
                    for (int i = 0; i < 3; ++i)
                        for (int j = i; j < 3; ++j)
                            cdv[a][i][j] = cdv[a][j][i] =
                                cd[a * 6 + SymTensorField::comp(i, j)](i1, i2, i3);
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) {
                        double corr = 0.0;
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b) {
                                double w = gi(a, b);
                                for (int c = 0; c < 3; ++c)
                                    corr += w * (gm[c][a][b] * cdv[c][i][j]
                                               + gm[c][a][i] * cdv[b][c][j]
                                               + gm[c][a][j] * cdv[b][i][c]);
                            }
                        out(i, j, i1, i2, i3) -= corr;
                    }
            }
    return out;
}

ChristoffelField dt_christoffel(const SymTensorField& ginv, const ChristoffelField& gamma,
                                const SymTensorField& k, const ScalarField& phi) {
    const Grid& gr = k.grid();
    SymTensorField p(gr);
    for (int c = 0; c < 6; ++c) {
        p[c].fill(ghost_sentinel);
        for (int i3 = -1; i3 <= gr.n3(); ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1)
                    p[c](i1, i2, i3) = phi(i1, i2, i3) * k[c](i1, i2, i3);
    }
    auto cd = covariant_deriv(gamma, p, 0);
    ChristoffelField out(gr);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 gi = load_sym3(ginv, i1, i2, i3);
                double cdv[3][3][3];
                for (int a = 0; a < 3; ++a)
                    for (int i = 0; i < 3; ++i)
                        for (int j = i; j < 3; ++j)
                            cdv[a][i][j] = cdv[a][j][i] =
                                cd[a * 6 + SymTensorField::comp(i, j)](i1, i2, i3);
                for (int b = 0; b < 3; ++b)
                    for (int a = 0; a < 3; ++a)
                        for (int c = a; c < 3; ++c) {
                            double s = 0.0;
                            for (int l = 0; l < 3; ++l)
                                s += gi(b, l) * (cdv[l][a][c] - cdv[a][c][l] - cdv[c][a][l]);
                            out.at(b, a, c)(i1, i2, i3) = s;
                        }
            }
    return out;
}

NormalFrame normal_frame(const SymTensorField& g, const SymTensorField& ginv, int ext) {
    (void)g;
    const Grid& gr = ginv.grid();
    NormalFrame fr(gr);
    for (int i = 0; i < 3; ++i) fr.N[i].fill(ghost_sentinel);
    fr.lapse_n.fill(ghost_sentinel);
    for (int i3 = -ext; i3 <= gr.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double g33 = ginv(2, 2, i1, i2, i3);
                if (!(g33 > 0.0))
                    throw numeric_error("normal_frame: g^{33} not positive");
                double s = std::sqrt(g33);
                for (int i = 0; i < 3; ++i)
                    fr.N[i](i1, i2, i3) = ginv(2, i, i1, i2, i3) / s;
                fr.lapse_n(i1, i2, i3) = 1.0 / s;
            }
    return fr;
}

ScalarField trace(const SymTensorField& ginv, const SymTensorField& T) {
    const Grid& gr = T.grid();
    ScalarField out(gr);
    out.fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                double s = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        s += ginv(i, j, i1, i2, i3) * T(i, j, i1, i2, i3);
                out(i1, i2, i3) = s;
            }
    return out;
}

ScalarField norm2(const SymTensorField& ginv, const SymTensorField& T) {
    const Grid& gr = T.grid();
    ScalarField out(gr);
    out.fill(ghost_sentinel);
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                Sym3 gi = load_sym3(ginv, i1, i2, i3);
                Sym3 t = load_sym3(T, i1, i2, i3);
                double s = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b)
                                s += gi(i, a) * gi(j, b) * t(i, j) * t(a, b);
                out(i1, i2, i3) = s;
            }
    return out;
}

} // namespace collar
