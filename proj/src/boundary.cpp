#include "collar/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "collar/errors.hpp"

namespace collar {

namespace {

// 2x2 symmetric component index: 00->0, 01->1, 11->2.
inline int comp2(int a, int b) { return a + b; }

// Plain face-node array with periodic tangential access.
struct FA {
    int n1 = 0, n2 = 0;
    std::vector<double> v;
    FA() = default;
    FA(int n1_, int n2_) : n1(n1_), n2(n2_), v(static_cast<std::size_t>(n1_) * n2_, 0.0) {}
    double& at(int i1, int i2) { return v[static_cast<std::size_t>(i2) * n1 + i1]; }
    double w(int i1, int i2) const {
        i1 = (i1 % n1 + n1) % n1;
        i2 = (i2 % n2 + n2) % n2;
        return v[static_cast<std::size_t>(i2) * n1 + i1];
    }
};

double dtan_fa(const FA& f, int dir, int i1, int i2, double h) {
    if (dir == 0) return (f.w(i1 + 1, i2) - f.w(i1 - 1, i2)) / (2.0 * h);
    return (f.w(i1, i2 + 1) - f.w(i1, i2 - 1)) / (2.0 * h);
}

// Scalars derived from k and the frame at one i3 level.
struct LevelScalars {
    FA kN1, kN2, tau, kNN;
    FA tl11, tl12, tl21; // trace-free part of k_A^B
    FA m11, m12, m21, m22;
};

Sym2 q_block(const SymTensorField& g, int i1, int i2, int i3) {
    return Sym2{g(0, 0, i1, i2, i3), g(0, 1, i1, i2, i3), g(1, 1, i1, i2, i3)};
}

LevelScalars level_scalars(const SymTensorField& k, const SymTensorField& g,
                           const NormalFrame& frame, int i3) {
    const Grid& grid = k.grid();
    const int n1 = grid.n1(), n2 = grid.n2();
    LevelScalars L{FA(n1, n2), FA(n1, n2), FA(n1, n2), FA(n1, n2),
                   FA(n1, n2), FA(n1, n2), FA(n1, n2),
                   FA(n1, n2), FA(n1, n2), FA(n1, n2), FA(n1, n2)};
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1) {
            Sym2 q = q_block(g, i1, i2, i3);
            Sym2 qi = inv_sym2(q);
            double N[3] = {frame.N[0](i1, i2, i3), frame.N[1](i1, i2, i3),
                           frame.N[2](i1, i2, i3)};
            double kn[2] = {0.0, 0.0}, knn = 0.0;
            for (int A = 0; A < 2; ++A)
                for (int i = 0; i < 3; ++i) kn[A] += N[i] * k(i, A, i1, i2, i3);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) knn += N[i] * N[j] * k(i, j, i1, i2, i3);
            double m[2][2];
            for (int A = 0; A < 2; ++A)
                for (int B = 0; B < 2; ++B) {
                    m[A][B] = 0.0;
                    for (int C = 0; C < 2; ++C) m[A][B] += qi(B, C) * k(A, C, i1, i2, i3);
                }
            double tau = m[0][0] + m[1][1];
            L.kN1.at(i1, i2) = kn[0];
            L.kN2.at(i1, i2) = kn[1];
            L.tau.at(i1, i2) = tau;
            L.kNN.at(i1, i2) = knn;
            L.tl11.at(i1, i2) = 0.5 * (m[0][0] - m[1][1]);
            L.tl12.at(i1, i2) = m[0][1];
            L.tl21.at(i1, i2) = m[1][0];
            L.m11.at(i1, i2) = m[0][0];
            L.m12.at(i1, i2) = m[0][1];
            L.m21.at(i1, i2) = m[1][0];
            L.m22.at(i1, i2) = m[1][1];
        }
    return L;
}

// Per-node targets for the normal-derivative conditions, all evaluated from
// face values of k only. W is the intrinsic divergence term q^{AB}(nabla_B k)(N, e_A).
struct NodeTargets {
    double W = 0.0;
    double t_tau = 0.0;   // target for N(tau)
    double t_knn = 0.0;   // target for N(k_NN)
    double t_kna[2] = {0.0, 0.0}; // targets for N(k_NA)
    double corr_d1 = 0.0; // 2 k(nabla_N N, N)
    double corr_d2 = 0.0; // terms relating N(tau) to nabla_N k_A^A
};

NodeTargets node_targets(const FaceGeom& fg, const LevelScalars& face,
                         const SymTensorField& k, int i1, int i2, int i3f,
                         double h1, double h2) {
    NodeTargets out;
    std::size_t f = fg.at(i1, i2);
    const Sym2& qi = fg.qinv[f];
    const Sym2& chi = fg.chi[f];
    const auto& N = fg.N[f];
    double kc[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) kc[i][j] = k(i, j, i1, i2, i3f);
    double kNvec[3]; // k_cj N^j
    for (int c = 0; c < 3; ++c) {
        kNvec[c] = 0.0;
        for (int j = 0; j < 3; ++j) kNvec[c] += kc[c][j] * N[j];
    }
    double chimix[2][2]; // chi_A^B
    for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B) {
            chimix[A][B] = 0.0;
            for (int C = 0; C < 2; ++C) chimix[A][B] += qi(B, C) * chi(A, C);
        }
    double kNA[2] = {face.kN1.w(i1, i2), face.kN2.w(i1, i2)};
    double kNN = face.kNN.w(i1, i2);
    const FA* kN_arr[2] = {&face.kN1, &face.kN2};
    double hB[2] = {h1, h2};

    // W = q^{AB} [ d_B k_NA + chi_B^C k_CA - Gamma2^C_{BA} k_NC - chi_BA k_NN ]
    for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B) {
            double term = dtan_fa(*kN_arr[A], B, i1, i2, hB[B]);
            for (int C = 0; C < 2; ++C) {
                term += chimix[B][C] * kc[C][A];
                term -= fg.gamma2[f][C * 3 + comp2(B, A)] * kNA[C];
            }
            term -= chi(B, A) * kNN;
            out.W += qi(A, B) * term;
        }

    // corr_d2 = (N q^{AB}) k_AB + q^{AB} [ (nabla_N e_A)^c k_cB + (nabla_N e_B)^c k_cA ]
    for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B) {
            out.corr_d2 += fg.dn_qinv[f](A, B) * kc[A][B];
            double s = 0.0;
            for (int c = 0; c < 3; ++c)
                s += fg.dNe[f][A][c] * kc[c][B] + fg.dNe[f][B][c] * kc[c][A];
            out.corr_d2 += qi(A, B) * s;
        }
    out.t_tau = out.W + out.corr_d2;

    // corr_d1 = 2 k(nabla_N N, N)
    for (int c = 0; c < 3; ++c) out.corr_d1 += 2.0 * fg.dNN[f][c] * kNvec[c];
    out.t_knn = -out.W + out.corr_d1;

    // condition on k_NA: N(k_NA) = -div2(k_A^B) + chi_A^B k_NB + chi_B^B k_NA
    //                              + k(nabla_N N, e_A) + k(N, nabla_N e_A)
    const FA* m_arr[2][2] = {{&face.m11, &face.m12}, {&face.m21, &face.m22}};
    for (int A = 0; A < 2; ++A) {
        double div = 0.0;
        for (int B = 0; B < 2; ++B) {
            div += dtan_fa(*m_arr[A][B], B, i1, i2, hB[B]);
            for (int D = 0; D < 2; ++D) {
                div += fg.gamma2[f][B * 3 + comp2(B, D)] * m_arr[A][D]->w(i1, i2);
                div -= fg.gamma2[f][D * 3 + comp2(B, A)] * m_arr[D][B]->w(i1, i2);
            }
        }
        double rhs = -div + (chimix[0][0] + chimix[1][1]) * kNA[A];
        for (int B = 0; B < 2; ++B) rhs += chimix[A][B] * kNA[B];
        double corr = 0.0;
        for (int c = 0; c < 3; ++c)
            corr += fg.dNN[f][c] * kc[c][A] + fg.dNe[f][A][c] * kNvec[c];
        out.t_kna[A] = rhs + corr;
    }
    return out;
}

} // namespace

Sym2 inv_sym2(const Sym2& q) {
    double det = q.m11 * q.m22 - q.m12 * q.m12;
    if (!(det > 1e-14)) throw numeric_error("face metric block is degenerate");
    return Sym2{q.m22 / det, -q.m12 / det, q.m11 / det};
}

Sym2 normalize_rep(const Sym2& q) {
    double det = q.m11 * q.m22 - q.m12 * q.m12;
    if (!(det > 0.0)) throw numeric_error("conformal representative is not positive");
    double s = std::sqrt(det);
    return Sym2{q.m11 / s, q.m12 / s, q.m22 / s};
}

Sym2 ConformalFamily::rep(double t, int i1, int i2) const {
    return normalize_rep(q(t, i1, i2));
}

namespace {
// 4th order centered first derivative of a Sym2-valued function of t.
template <class F>
Sym2 dt4(const F& f, double t, double delta) {
    Sym2 fm2 = f(t - 2 * delta), fm1 = f(t - delta), fp1 = f(t + delta), fp2 = f(t + 2 * delta);
    auto c = [&](double a, double b, double cc, double d) {
        return (-a + 8.0 * b - 8.0 * cc + d) / (12.0 * delta);
    };
    return Sym2{c(fp2.m11, fp1.m11, fm1.m11, fm2.m11),
                c(fp2.m12, fp1.m12, fm1.m12, fm2.m12),
                c(fp2.m22, fp1.m22, fm1.m22, fm2.m22)};
}
constexpr double kFdDelta = 1e-2;
} // namespace

TracelessMixed2 ConformalFamily::hat(double t, int i1, int i2) const {
    Sym2 r = rep(t, i1, i2);
    Sym2 ri = inv_sym2(r);
    Sym2 dr = dt4([&](double s) { return rep(s, i1, i2); }, t, kFdDelta);
    // P_A^B = [q]^{BC} dt [q]_{AC}; hat = -1/2 (P - 1/2 tr P)
    double p11 = ri.m11 * dr.m11 + ri.m12 * dr.m12;
    double p12 = ri.m12 * dr.m11 + ri.m22 * dr.m12;
    double p21 = ri.m11 * dr.m12 + ri.m12 * dr.m22;
    double p22 = ri.m12 * dr.m12 + ri.m22 * dr.m22;
    return TracelessMixed2{-0.25 * (p11 - p22), -0.5 * p12, -0.5 * p21};
}

TracelessMixed2 ConformalFamily::dt_hat(double t, int i1, int i2) const {
    auto h = [&](double s) { return this->hat(s, i1, i2); };
    TracelessMixed2 hm2 = h(t - 2 * kFdDelta), hm1 = h(t - kFdDelta);
    TracelessMixed2 hp1 = h(t + kFdDelta), hp2 = h(t + 2 * kFdDelta);
    auto c = [&](double a, double b, double cc, double d) {
        return (-a + 8.0 * b - 8.0 * cc + d) / (12.0 * kFdDelta);
    };
    return TracelessMixed2{c(hp2.a11, hp1.a11, hm1.a11, hm2.a11),
                           c(hp2.a12, hp1.a12, hm1.a12, hm2.a12),
                           c(hp2.a21, hp1.a21, hm1.a21, hm2.a21)};
}

Sym2 DiagExponentialFamily::q(double t, int, int) const {
    return Sym2{std::exp(2.0 * lambda_ * t), 0.0, std::exp(-2.0 * lambda_ * t)};
}

TableFamily::TableFamily(const std::string& path, int n1, int n2) : n1_(n1), n2_(n2) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open boundary table " + path);
    std::map<double, std::vector<Sym2>> by_time;
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        std::istringstream ss(line);
        double t, q11, q12, q22;
        int i1, i2;
        if (!(ss >> t >> i1 >> i2 >> q11 >> q12 >> q22)) continue;
        if (i1 < 0 || i1 >= n1 || i2 < 0 || i2 >= n2)
            throw config_error("boundary table index out of range in " + path);
        auto& slab = by_time[t];
        if (slab.empty()) slab.assign(static_cast<std::size_t>(n1) * n2, Sym2{0, 0, 0});
        slab[static_cast<std::size_t>(i2) * n1 + i1] = Sym2{q11, q12, q22};
    }
    for (auto& [t, slab] : by_time) {
        times_.push_back(t);
        samples_.push_back(std::move(slab));
    }
    if (times_.size() < 4)
        throw config_error("boundary table " + path + " needs at least 4 time samples");
}

Sym2 TableFamily::q(double t, int i1, int i2) const {
    int n = static_cast<int>(times_.size());
    int j = int(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin()) - 1;
    j = std::clamp(j, 1, n - 3);
    std::size_t node = static_cast<std::size_t>(i2) * n1_ + i1;
    double out[3] = {0.0, 0.0, 0.0};
    // cubic Lagrange through samples j-1..j+2
    for (int a = j - 1; a <= j + 2; ++a) {
        double w = 1.0;
        for (int b = j - 1; b <= j + 2; ++b)
            if (b != a) w *= (t - times_[b]) / (times_[a] - times_[b]);
        const Sym2& s = samples_[a][node];
        out[0] += w * s.m11;
        out[1] += w * s.m12;
        out[2] += w * s.m22;
    }
    return Sym2{out[0], out[1], out[2]};
}

FaceGeom face_geometry(const SymTensorField& g, const SymTensorField& ginv,
                       const ChristoffelField& gamma, const NormalFrame& frame, Face face) {
    const Grid& grid = g.grid();
    const int n1 = grid.n1(), n2 = grid.n2();
    const int i3f = face_i3(grid, face);
    const int inw = face_inward(face);
    const double h1 = grid.h1(), h2 = grid.h2(), h3 = grid.h3();

    FaceGeom fg;
    fg.face = face;
    fg.n1 = n1;
    fg.n2 = n2;
    std::size_t nn = static_cast<std::size_t>(n1) * n2;
    fg.q.resize(nn);
    fg.qinv.resize(nn);
    fg.N.resize(nn);
    fg.chi.resize(nn);
    fg.gamma2.resize(nn);
    fg.dNN.resize(nn);
    fg.dNe.resize(nn);
    fg.dn_qinv.resize(nn);

    // face arrays of the metric components and the frame
    FA G[6], Nc[3];
    for (int c = 0; c < 6; ++c) G[c] = FA(n1, n2);
    for (int c = 0; c < 3; ++c) Nc[c] = FA(n1, n2);
    FA qi_lvl[3][3]; // q^{AB} at the face and two levels inward
    for (int l = 0; l < 3; ++l)
        for (int c = 0; c < 3; ++c) qi_lvl[l][c] = FA(n1, n2);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1) {
            for (int c = 0; c < 6; ++c) G[c].at(i1, i2) = g[c](i1, i2, i3f);
            for (int c = 0; c < 3; ++c) Nc[c].at(i1, i2) = frame.N[c](i1, i2, i3f);
            for (int l = 0; l < 3; ++l) {
                Sym2 qv = q_block(g, i1, i2, i3f + l * inw);
                Sym2 qiv = inv_sym2(qv);
                qi_lvl[l][0].at(i1, i2) = qiv.m11;
                qi_lvl[l][1].at(i1, i2) = qiv.m12;
                qi_lvl[l][2].at(i1, i2) = qiv.m22;
            }
        }

    // one-sided normal derivative at the face, pointing in the coordinate
    // x3 direction (not inward): df/dx3 = s*(3 f0 - 4 f1 + f2)/(2 h3) with
    // s = -inw and levels counted inward.
    double os = -static_cast<double>(inw);
    auto dn_field = [&](const ScalarField& f, int i1, int i2) {
        return os * (3.0 * f(i1, i2, i3f) - 4.0 * f(i1, i2, i3f + inw) + f(i1, i2, i3f + 2 * inw)) /
               (2.0 * h3);
    };
    auto dn_fa = [&](const FA& f0, const FA& f1, const FA& f2, int i1, int i2) {
        return os * (3.0 * f0.w(i1, i2) - 4.0 * f1.w(i1, i2) + f2.w(i1, i2)) / (2.0 * h3);
    };

    double hA[2] = {h1, h2};
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1) {
            std::size_t f = fg.at(i1, i2);
            Sym2 q{G[0].w(i1, i2), G[1].w(i1, i2), G[3].w(i1, i2)};
            fg.q[f] = q;
            Sym2 qi = inv_sym2(q);
            fg.qinv[f] = qi;
            for (int c = 0; c < 3; ++c) fg.N[f][c] = Nc[c].w(i1, i2);

            // intrinsic Christoffels of the face metric
            double dq[2][3]; // d_A q_{comp2}
            for (int A = 0; A < 2; ++A) {
                dq[A][0] = dtan_fa(G[0], A, i1, i2, hA[A]);
                dq[A][1] = dtan_fa(G[1], A, i1, i2, hA[A]);
                dq[A][2] = dtan_fa(G[3], A, i1, i2, hA[A]);
            }
            for (int C = 0; C < 2; ++C)
                for (int A = 0; A < 2; ++A)
                    for (int B = A; B < 2; ++B) {
                        double low[2];
                        for (int D = 0; D < 2; ++D)
                            low[D] = 0.5 * (dq[A][comp2(B, D)] + dq[B][comp2(A, D)] -
                                            dq[D][comp2(A, B)]);
                        fg.gamma2[f][C * 3 + comp2(A, B)] =
                            qi(C, 0) * low[0] + qi(C, 1) * low[1];
                    }

            // chi_AB = 1/2 N^j (d_A g_Bj + d_B g_Aj - d_j g_AB)
            auto dg = [&](int dir, int i, int j) -> double {
                int c = SymTensorField::comp(i, j);
                if (dir < 2) return dtan_fa(G[c], dir, i1, i2, hA[dir]);
                return dn_field(g[c], i1, i2);
            };
            for (int A = 0; A < 2; ++A)
                for (int B = A; B < 2; ++B) {
                    double s = 0.0;
                    for (int j = 0; j < 3; ++j)
                        s += fg.N[f][j] * (dg(A, B, j) + dg(B, A, j) - dg(j, A, B));
                    double val = 0.5 * s;
                    if (comp2(A, B) == 0) fg.chi[f].m11 = val;
                    else if (comp2(A, B) == 1) fg.chi[f].m12 = val;
                    else fg.chi[f].m22 = val;
                }

            // (nabla_N N)^c and (nabla_N e_A)^c
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int a = 0; a < 2; ++a)
                    s += fg.N[f][a] * dtan_fa(Nc[c], a, i1, i2, hA[a]);
                s += fg.N[f][2] * dn_field(frame.N[c], i1, i2);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        s += fg.N[f][a] * fg.N[f][b] * gamma.at(c, a, b)(i1, i2, i3f);
                fg.dNN[f][c] = s;
                for (int A = 0; A < 2; ++A) {
                    double e = 0.0;
                    for (int b = 0; b < 3; ++b)
                        e += fg.N[f][b] * gamma.at(c, b, A)(i1, i2, i3f);
                    fg.dNe[f][A][c] = e;
                }
            }

            // N(q^{AB})
            for (int c = 0; c < 3; ++c) {
                double s = fg.N[f][2] * dn_fa(qi_lvl[0][c], qi_lvl[1][c], qi_lvl[2][c], i1, i2);
                for (int a = 0; a < 2; ++a)
                    s += fg.N[f][a] * dtan_fa(qi_lvl[0][c], a, i1, i2, hA[a]);
                if (c == 0) fg.dn_qinv[f].m11 = s;
                else if (c == 1) fg.dn_qinv[f].m12 = s;
                else fg.dn_qinv[f].m22 = s;
            }
        }
    return fg;
}

std::vector<Sym2> boundary_chi(const SymTensorField& g, Face face) {
    SymTensorField gi = inverse_metric(g, 1);
    ChristoffelField gam = christoffels(g, gi, 0);
    NormalFrame fr = normal_frame(g, gi, 0);
    FaceGeom fg = face_geometry(g, gi, gam, fr, face);
    return fg.chi;
}

void apply_bc(SymTensorField& k, const SymTensorField& g, const SymTensorField& ginv,
              const ChristoffelField& gamma, const NormalFrame& frame,
              const BoundaryData& bd, double t) {
    const Grid& grid = k.grid();
    const int n1 = grid.n1(), n2 = grid.n2(), n3 = grid.n3();
    const double h1 = grid.h1(), h2 = grid.h2(), h3 = grid.h3();
    const Face faces[2] = {Face::inner, Face::outer};

    FaceGeom fgs[2];
    for (int fi = 0; fi < 2; ++fi)
        fgs[fi] = face_geometry(g, ginv, gamma, frame, faces[fi]);

    // Pass 1: replace the face values, keeping the evolved tau and k_NA.
    for (int fi = 0; fi < 2; ++fi) {
        Face face = faces[fi];
        const FaceGeom& fg = fgs[fi];
        const ConformalFamily& fam = bd.at(face);
        int i3f = face_i3(grid, face);
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                std::size_t f = fg.at(i1, i2);
                const Sym2& q = fg.q[f];
                const Sym2& qi = fg.qinv[f];
                const auto& N = fg.N[f];
                double kn[2] = {0.0, 0.0};
                for (int A = 0; A < 2; ++A)
                    for (int i = 0; i < 3; ++i) kn[A] += N[i] * k(i, A, i1, i2, i3f);
                double tau = 0.0;
                for (int A = 0; A < 2; ++A)
                    for (int B = 0; B < 2; ++B) tau += qi(A, B) * k(A, B, i1, i2, i3f);
                TracelessMixed2 hat = fam.hat(t, i1, i2);
                double knew[2][2];
                for (int A = 0; A < 2; ++A)
                    for (int B = 0; B < 2; ++B) {
                        double s = 0.5 * tau * q(A, B);
                        for (int C = 0; C < 2; ++C)
                            s += 0.5 * (hat(A, C) * q(C, B) + hat(B, C) * q(C, A));
                        knew[A][B] = s;
                    }
                double knn = -tau;
                double N3 = N[2];
                double k3a[2];
                for (int A = 0; A < 2; ++A) {
                    double s = kn[A];
                    for (int B = 0; B < 2; ++B) s -= N[B] * knew[B][A];
                    k3a[A] = s / N3;
                }
                double k33 = knn;
                for (int B = 0; B < 2; ++B) k33 -= 2.0 * N3 * N[B] * k3a[B];
                for (int A = 0; A < 2; ++A)
                    for (int B = 0; B < 2; ++B) k33 -= N[A] * N[B] * knew[A][B];
                k33 /= N3 * N3;
                k(0, 0, i1, i2, i3f) = knew[0][0];
                k(0, 1, i1, i2, i3f) = knew[0][1];
                k(1, 1, i1, i2, i3f) = knew[1][1];
                k(0, 2, i1, i2, i3f) = k3a[0];
                k(1, 2, i1, i2, i3f) = k3a[1];
                k(2, 2, i1, i2, i3f) = k33;
            }
    }

    // Pass 2: first ghost layer from the normal-derivative conditions.
    for (int fi = 0; fi < 2; ++fi) {
        Face face = faces[fi];
        const FaceGeom& fg = fgs[fi];
        int i3f = face_i3(grid, face);
        int dir = (face == Face::outer) ? +1 : -1; // toward the ghost layer
        LevelScalars Lf = level_scalars(k, g, frame, i3f);
        LevelScalars Li = level_scalars(k, g, frame, i3f - dir);
        LevelScalars Lp[4] = {Lf, Li, level_scalars(k, g, frame, i3f - 2 * dir),
                              level_scalars(k, g, frame, i3f - 3 * dir)};
        int i3g = i3f + dir;
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                std::size_t f = fg.at(i1, i2);
                const auto& N = fg.N[f];
                double N3 = N[2];
                NodeTargets tg = node_targets(fg, Lf, k, i1, i2, i3f, h1, h2);

                auto solve_ghost = [&](const FA LevelScalars::* arr, double target) {
                    double tan = 0.0;
                    for (int A = 0; A < 2; ++A)
                        tan += N[A] * dtan_fa(Lf.*arr, A, i1, i2, A == 0 ? h1 : h2);
                    double delta = 2.0 * h3 * (target - tan) / N3;
                    return (Li.*arr).w(i1, i2) + dir * delta;
                };
                double kn_g[2] = {solve_ghost(&LevelScalars::kN1, tg.t_kna[0]),
                                  solve_ghost(&LevelScalars::kN2, tg.t_kna[1])};
                double tau_g = solve_ghost(&LevelScalars::tau, tg.t_tau);
                double knn_g = solve_ghost(&LevelScalars::kNN, tg.t_knn);

                auto extrap = [&](const FA LevelScalars::* arr) {
                    return 4.0 * (Lp[0].*arr).w(i1, i2) - 6.0 * (Lp[1].*arr).w(i1, i2) +
                           4.0 * (Lp[2].*arr).w(i1, i2) - (Lp[3].*arr).w(i1, i2);
                };
                double tl11 = extrap(&LevelScalars::tl11);
                double tl12 = extrap(&LevelScalars::tl12);
                double tl21 = extrap(&LevelScalars::tl21);

                Sym2 qg = q_block(g, i1, i2, i3g);
                double Ng[3] = {frame.N[0](i1, i2, i3g), frame.N[1](i1, i2, i3g),
                                frame.N[2](i1, i2, i3g)};
                double m[2][2] = {{tl11 + 0.5 * tau_g, tl12},
                                  {tl21, -tl11 + 0.5 * tau_g}};
                double kab[2][2];
                for (int A = 0; A < 2; ++A)
                    for (int B = 0; B < 2; ++B) {
                        double s = 0.0;
                        for (int C = 0; C < 2; ++C)
                            s += 0.5 * (m[A][C] * qg(C, B) + m[B][C] * qg(C, A));
                        kab[A][B] = s;
                    }
                double k3a[2];
                for (int A = 0; A < 2; ++A) {
                    double s = kn_g[A];
                    for (int B = 0; B < 2; ++B) s -= Ng[B] * kab[B][A];
                    k3a[A] = s / Ng[2];
                }
                double k33 = knn_g;
                for (int B = 0; B < 2; ++B) k33 -= 2.0 * Ng[2] * Ng[B] * k3a[B];
                for (int A = 0; A < 2; ++A)
                    for (int B = 0; B < 2; ++B) k33 -= Ng[A] * Ng[B] * kab[A][B];
                k33 /= Ng[2] * Ng[2];
                k(0, 0, i1, i2, i3g) = kab[0][0];
                k(0, 1, i1, i2, i3g) = kab[0][1];
                k(1, 1, i1, i2, i3g) = kab[1][1];
                k(0, 2, i1, i2, i3g) = k3a[0];
                k(1, 2, i1, i2, i3g) = k3a[1];
                k(2, 2, i1, i2, i3g) = k33;
            }
    }

    // Second ghost layer by extrapolation through the first.
    for (int fi = 0; fi < 2; ++fi) {
        int i3f = face_i3(grid, faces[fi]);
        int dir = (faces[fi] == Face::outer) ? +1 : -1;
        for (int c = 0; c < 6; ++c)
            for (int i2 = 0; i2 < n2; ++i2)
                for (int i1 = 0; i1 < n1; ++i1)
                    k[c](i1, i2, i3f + 2 * dir) =
                        4.0 * k[c](i1, i2, i3f + dir) - 6.0 * k[c](i1, i2, i3f) +
                        4.0 * k[c](i1, i2, i3f - dir) - k[c](i1, i2, i3f - 2 * dir);
    }
    (void)n3;
}

BcResiduals bc_residuals(const SymTensorField& k, const SymTensorField& g,
                         const SymTensorField& ginv, const ChristoffelField& gamma,
                         const NormalFrame& frame, const BoundaryData& bd, double t) {
    const Grid& grid = k.grid();
    const int n1 = grid.n1(), n2 = grid.n2();
    const double h1 = grid.h1(), h2 = grid.h2(), h3 = grid.h3();
    BcResiduals res;
    const Face faces[2] = {Face::inner, Face::outer};
    for (int fi = 0; fi < 2; ++fi) {
        Face face = faces[fi];
        FaceGeom fg = face_geometry(g, ginv, gamma, frame, face);
        const ConformalFamily& fam = bd.at(face);
        int i3f = face_i3(grid, face);
        int dir = (face == Face::outer) ? +1 : -1;
        LevelScalars Lf = level_scalars(k, g, frame, i3f);
        LevelScalars Li = level_scalars(k, g, frame, i3f - dir);
        LevelScalars Lg = level_scalars(k, g, frame, i3f + dir);
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                std::size_t f = fg.at(i1, i2);
                const auto& N = fg.N[f];
                NodeTargets tg = node_targets(fg, Lf, k, i1, i2, i3f, h1, h2);
                TracelessMixed2 hat = fam.hat(t, i1, i2);
                res.hat = std::max(res.hat, std::abs(Lf.tl11.w(i1, i2) - hat.a11));
                res.hat = std::max(res.hat, std::abs(Lf.tl12.w(i1, i2) - hat.a12));
                res.hat = std::max(res.hat, std::abs(Lf.tl21.w(i1, i2) - hat.a21));
                res.knn = std::max(res.knn,
                                   std::abs(Lf.kNN.w(i1, i2) + Lf.tau.w(i1, i2)));

                auto nderiv = [&](const FA LevelScalars::* arr) {
                    // centered x3 derivative through the ghost layer
                    double d3 = dir * ((Lg.*arr).w(i1, i2) - (Li.*arr).w(i1, i2)) / (2.0 * h3);
                    double s = N[2] * d3;
                    for (int A = 0; A < 2; ++A)
                        s += N[A] * dtan_fa(Lf.*arr, A, i1, i2, A == 0 ? h1 : h2);
                    return s;
                };
                for (int A = 0; A < 2; ++A) {
                    double nk = nderiv(A == 0 ? &LevelScalars::kN1 : &LevelScalars::kN2);
                    res.kna = std::max(res.kna, std::abs(nk - tg.t_kna[A]));
                }
                double lhs_d1 = nderiv(&LevelScalars::kNN) - tg.corr_d1;
                double lhs_d2 = nderiv(&LevelScalars::tau) - tg.corr_d2;
                res.kcc = std::max(res.kcc, std::abs(0.5 * (lhs_d1 - lhs_d2) + tg.W));
            }
    }
    return res;
}

CompatibilityReport compatibility_check(const SymTensorField& g, const SymTensorField& k,
                                        const SymTensorField& v, const ScalarField& phi,
                                        const SymTensorField& ginv,
                                        const ChristoffelField& gamma,
                                        const NormalFrame& frame, const SymTensorField& ric,
                                        const ConformalFamily& family, Face face) {
    const Grid& grid = g.grid();
    const int n1 = grid.n1(), n2 = grid.n2();
    const double h3 = grid.h3();
    const int i3f = face_i3(grid, face);
    const int inw = face_inward(face);
    FaceGeom fg = face_geometry(g, ginv, gamma, frame, face);
    LevelScalars Lf = level_scalars(k, g, frame, i3f);
    CompatibilityReport rep;
    double os = -static_cast<double>(inw);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1) {
            std::size_t f = fg.at(i1, i2);
            const Sym2& qi = fg.qinv[f];
            Sym2 rstate = normalize_rep(fg.q[f]);
            Sym2 rfam = family.rep(0.0, i1, i2);
            rep.conformal_class = std::max(
                rep.conformal_class,
                std::max(std::abs(rstate.m11 - rfam.m11),
                         std::max(std::abs(rstate.m12 - rfam.m12),
                                  std::abs(rstate.m22 - rfam.m22))));
            TracelessMixed2 hat = family.hat(0.0, i1, i2);
            rep.hat = std::max(rep.hat, std::abs(Lf.tl11.w(i1, i2) - hat.a11));
            rep.hat = std::max(rep.hat, std::abs(Lf.tl12.w(i1, i2) - hat.a12));
            rep.hat = std::max(rep.hat, std::abs(Lf.tl21.w(i1, i2) - hat.a21));

            // first-order condition: dt hat k_A^B = R_A^B - 1/2 delta partial_t k_C^C
            //                                       + chi_A^B N(Phi)
            double nphi = os *
                          (3.0 * phi(i1, i2, i3f) - 4.0 * phi(i1, i2, i3f + inw) +
                           phi(i1, i2, i3f + 2 * inw)) /
                          (2.0 * h3);
            nphi *= fg.N[f][2];
            double phiv = phi(i1, i2, i3f);
            // dt tau = 2 Phi k2d^{CB} k_CB + Phi q^{CB} v_CB
            double dt_tau = 0.0;
            for (int C = 0; C < 2; ++C)
                for (int B = 0; B < 2; ++B) {
                    double k2d = 0.0;
                    for (int A = 0; A < 2; ++A)
                        for (int D = 0; D < 2; ++D)
                            k2d += qi(C, A) * qi(B, D) * k(A, D, i1, i2, i3f);
                    dt_tau += 2.0 * phiv * k2d * k(C, B, i1, i2, i3f);
                    dt_tau += phiv * qi(C, B) * v(C, B, i1, i2, i3f);
                }
            TracelessMixed2 dth = family.dt_hat(0.0, i1, i2);
            for (int A = 0; A < 2; ++A)
                for (int B = 0; B < 2; ++B) {
                    double rab = 0.0, chiab = 0.0;
                    for (int C = 0; C < 2; ++C) {
                        rab += qi(B, C) * ric(A, C, i1, i2, i3f);
                        chiab += qi(B, C) * fg.chi[f](A, C);
                    }
                    double rhs = rab + chiab * nphi;
                    if (A == B) rhs -= 0.5 * dt_tau;
                    rep.dt_hat = std::max(rep.dt_hat, std::abs(dth(A, B) - rhs));
                }
        }
    return rep;
}

double cbd_norm(const ConformalFamily& family, const Grid& grid, double t, int r) {
    const int n1 = grid.n1(), n2 = grid.n2();
    const double h1 = grid.h1(), h2 = grid.h2();
    if (r < 0 || r > 1) throw config_error("boundary norm order must be 0 or 1");
    const int order = r + 2;
    double total = 0.0;
    const double d = 5e-2;
    for (int i = 0; i <= order; ++i) {
        // dt^i hat on the face, centered stencils in t
        std::array<FA, 3> comp = {FA(n1, n2), FA(n1, n2), FA(n1, n2)};
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1) {
                auto h = [&](double s) { return family.hat(s, i1, i2); };
                TracelessMixed2 val{};
                if (i == 0) val = h(t);
                else if (i == 1) {
                    TracelessMixed2 p = h(t + d), m = h(t - d);
                    val = {(p.a11 - m.a11) / (2 * d), (p.a12 - m.a12) / (2 * d),
                           (p.a21 - m.a21) / (2 * d)};
                } else if (i == 2) {
                    TracelessMixed2 p = h(t + d), c0 = h(t), m = h(t - d);
                    val = {(p.a11 - 2 * c0.a11 + m.a11) / (d * d),
                           (p.a12 - 2 * c0.a12 + m.a12) / (d * d),
                           (p.a21 - 2 * c0.a21 + m.a21) / (d * d)};
                } else {
                    TracelessMixed2 p2 = h(t + 2 * d), p1 = h(t + d), m1 = h(t - d),
                                    m2 = h(t - 2 * d);
                    auto d3 = [&](double a, double b, double c, double e) {
                        return (a - 2 * b + 2 * c - e) / (2 * d * d * d);
                    };
                    val = {d3(p2.a11, p1.a11, m1.a11, m2.a11),
                           d3(p2.a12, p1.a12, m1.a12, m2.a12),
                           d3(p2.a21, p1.a21, m1.a21, m2.a21)};
                }
                comp[0].at(i1, i2) = val.a11;
                comp[1].at(i1, i2) = val.a12;
                comp[2].at(i1, i2) = val.a21;
            }
        // H^{order-i} tangential norm on the face (flat derivatives)
        int s_max = order - i;
        for (int c = 0; c < 3; ++c) {
            std::vector<FA> cur = {comp[c]};
            for (int s = 0; s <= s_max; ++s) {
                for (const FA& fa : cur)
                    for (int i2 = 0; i2 < n2; ++i2)
                        for (int i1 = 0; i1 < n1; ++i1) {
                            double v = fa.w(i1, i2);
                            total += v * v * h1 * h2;
                        }
                if (s == s_max) break;
                std::vector<FA> next;
                for (const FA& fa : cur)
                    for (int dirn = 0; dirn < 2; ++dirn) {
                        FA dfa(n1, n2);
                        for (int i2 = 0; i2 < n2; ++i2)
                            for (int i1 = 0; i1 < n1; ++i1)
                                dfa.at(i1, i2) =
                                    dtan_fa(fa, dirn, i1, i2, dirn == 0 ? h1 : h2);
                        next.push_back(std::move(dfa));
                    }
                cur = std::move(next);
            }
        }
    }
    return total;
}

} // namespace collar
