#include "collar/lapse.hpp"

#include <cmath>
#include <vector>

namespace collar {

namespace {

// Matrix-free stencil for Delta_g u - sigma u in non-divergence form,
//   g^{ab} pd_a pd_b u - c^l pd_l u - sigma u,  c^l = g^{ab} Gamma^l_{ab},
// applied on the strict interior (i3 = 1 .. n3-2). Face planes of u supply
// the Dirichlet coupling; ghosts are never touched.
class HelmholtzOp {
public:
    HelmholtzOp(const SymTensorField& ginv, const ChristoffelField& gamma,
                const ScalarField& sigma)
        : ginv_(ginv), sigma_(sigma), c1_{ScalarField(ginv.grid()), ScalarField(ginv.grid()),
                                          ScalarField(ginv.grid())} {
        const Grid& gr = ginv.grid();
        for (int i3 = 1; i3 < gr.n3() - 1; ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1)
                    for (int l = 0; l < 3; ++l) {
                        double s = 0.0;
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b)
                                s += ginv(a, b, i1, i2, i3) * gamma.at(l, a, b)(i1, i2, i3);
                        c1_[l](i1, i2, i3) = s;
                    }
    }

    const Grid& grid() const { return ginv_.grid(); }

    void apply(const ScalarField& u, ScalarField& out) const {
        const Grid& gr = grid();
        const double ih1 = 1.0 / gr.h1(), ih2 = 1.0 / gr.h2(), ih3 = 1.0 / gr.h3();
        for (int i3 = 1; i3 < gr.n3() - 1; ++i3)
            for (int i2 = 0; i2 < gr.n2(); ++i2)
                for (int i1 = 0; i1 < gr.n1(); ++i1) {
                    double u0 = u(i1, i2, i3);
                    double u1p = u.at(i1 + 1, i2, i3), u1m = u.at(i1 - 1, i2, i3);
                    double u2p = u.at(i1, i2 + 1, i3), u2m = u.at(i1, i2 - 1, i3);
                    double u3p = u(i1, i2, i3 + 1), u3m = u(i1, i2, i3 - 1);
                    double d11 = (u1p - 2 * u0 + u1m) * ih1 * ih1;
                    double d22 = (u2p - 2 * u0 + u2m) * ih2 * ih2;
                    double d33 = (u3p - 2 * u0 + u3m) * ih3 * ih3;
                    double d1 = 0.5 * (u1p - u1m) * ih1;
                    double d2 = 0.5 * (u2p - u2m) * ih2;
                    double d3 = 0.5 * (u3p - u3m) * ih3;
                    double d12 = 0.25 * (u.at(i1 + 1, i2 + 1, i3) - u.at(i1 + 1, i2 - 1, i3)
                                       - u.at(i1 - 1, i2 + 1, i3) + u.at(i1 - 1, i2 - 1, i3))
                               * ih1 * ih2;
                    double d13 = 0.25 * (u.at(i1 + 1, i2, i3 + 1) - u.at(i1 + 1, i2, i3 - 1)
                                       - u.at(i1 - 1, i2, i3 + 1) + u.at(i1 - 1, i2, i3 - 1))
                               * ih1 * ih3;
                    double d23 = 0.25 * (u.at(i1, i2 + 1, i3 + 1) - u.at(i1, i2 + 1, i3 - 1)
                                       - u.at(i1, i2 - 1, i3 + 1) + u.at(i1, i2 - 1, i3 - 1))
                               * ih2 * ih3;
                    out(i1, i2, i3) =
                        ginv_(0, 0, i1, i2, i3) * d11 + ginv_(1, 1, i1, i2, i3) * d22
                        + ginv_(2, 2, i1, i2, i3) * d33 + 2.0 * ginv_(0, 1, i1, i2, i3) * d12
                        + 2.0 * ginv_(0, 2, i1, i2, i3) * d13
                        + 2.0 * ginv_(1, 2, i1, i2, i3) * d23
                        - c1_[0](i1, i2, i3) * d1 - c1_[1](i1, i2, i3) * d2
                        - c1_[2](i1, i2, i3) * d3 - sigma_(i1, i2, i3) * u0;
                }
    }

    double diag(int i1, int i2, int i3) const {
        const Grid& gr = grid();
        return -2.0 * (ginv_(0, 0, i1, i2, i3) / (gr.h1() * gr.h1())
                       + ginv_(1, 1, i1, i2, i3) / (gr.h2() * gr.h2())
                       + ginv_(2, 2, i1, i2, i3) / (gr.h3() * gr.h3()))
               - sigma_(i1, i2, i3);
    }

private:
    const SymTensorField& ginv_;
    const ScalarField& sigma_;
    std::array<ScalarField, 3> c1_;
};

template <class Fn>
void for_solve_nodes(const Grid& gr, Fn&& fn) {
    for (int i3 = 1; i3 < gr.n3() - 1; ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) fn(i1, i2, i3);
}

double dot_interior(const Grid& gr, const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for_solve_nodes(gr, [&](int i1, int i2, int i3) { s += a(i1, i2, i3) * b(i1, i2, i3); });
    return s;
}

// Preconditioned CG on the interior unknowns. Returns true on convergence.
bool pcg(const HelmholtzOp& op, const ScalarField& b, ScalarField& x, double tol, int max_iter,
         int& iters) {
    const Grid& gr = op.grid();
    double bnorm = std::sqrt(dot_interior(gr, b, b));
    if (bnorm == 0.0) {
        for_solve_nodes(gr, [&](int i1, int i2, int i3) { x(i1, i2, i3) = 0.0; });
        iters = 0;
        return true;
    }
    ScalarField r(gr), z(gr), p(gr), Ap(gr);
    r.fill(0.0); z.fill(0.0); p.fill(0.0); Ap.fill(0.0);
    op.apply(x, Ap);
    for_solve_nodes(gr, [&](int i1, int i2, int i3) {
        r(i1, i2, i3) = b(i1, i2, i3) - Ap(i1, i2, i3);
    });
    for_solve_nodes(gr, [&](int i1, int i2, int i3) {
        z(i1, i2, i3) = r(i1, i2, i3) / op.diag(i1, i2, i3);
        p(i1, i2, i3) = z(i1, i2, i3);
    });
    double rz = dot_interior(gr, r, z);
    double best = std::sqrt(dot_interior(gr, r, r));
    int since_best = 0;
    for (iters = 0; iters < max_iter; ++iters) {
        op.apply(p, Ap);
        double pAp = dot_interior(gr, p, Ap);
        if (pAp == 0.0) return false;
        double alpha = rz / pAp;
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            x(i1, i2, i3) += alpha * p(i1, i2, i3);
            r(i1, i2, i3) -= alpha * Ap(i1, i2, i3);
        });
        double rnorm = std::sqrt(dot_interior(gr, r, r));
        if (rnorm <= tol * bnorm) { ++iters; return true; }
        if (rnorm < 0.5 * best) { best = rnorm; since_best = 0; }
        else if (++since_best > 300) return false; // stalled, caller falls back
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            z(i1, i2, i3) = r(i1, i2, i3) / op.diag(i1, i2, i3);
        });
        double rz_new = dot_interior(gr, r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            p(i1, i2, i3) = z(i1, i2, i3) + beta * p(i1, i2, i3);
        });
    }
    return false;
}

bool bicgstab(const HelmholtzOp& op, const ScalarField& b, ScalarField& x, double tol,
              int max_iter, int& iters) {
    const Grid& gr = op.grid();
    double bnorm = std::sqrt(dot_interior(gr, b, b));
    if (bnorm == 0.0) return true;
    ScalarField r(gr), r0(gr), p(gr), v(gr), s(gr), t(gr), y(gr), z(gr);
    for (ScalarField* f : {&r, &r0, &p, &v, &s, &t, &y, &z}) f->fill(0.0);
    op.apply(x, v);
    for_solve_nodes(gr, [&](int i1, int i2, int i3) {
        r(i1, i2, i3) = b(i1, i2, i3) - v(i1, i2, i3);
        r0(i1, i2, i3) = r(i1, i2, i3);
    });
    double rho = 1, alpha = 1, omega = 1;
    v.fill(0.0);
    for (iters = 0; iters < max_iter; ++iters) {
        double rho_new = dot_interior(gr, r0, r);
        if (rho_new == 0.0) return false;
        double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            p(i1, i2, i3) = r(i1, i2, i3)
                          + beta * (p(i1, i2, i3) - omega * v(i1, i2, i3));
        });
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            y(i1, i2, i3) = p(i1, i2, i3) / op.diag(i1, i2, i3);
        });
        op.apply(y, v);
        alpha = rho / dot_interior(gr, r0, v);
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            s(i1, i2, i3) = r(i1, i2, i3) - alpha * v(i1, i2, i3);
        });
        if (std::sqrt(dot_interior(gr, s, s)) <= tol * bnorm) {
            for_solve_nodes(gr, [&](int i1, int i2, int i3) {
                x(i1, i2, i3) += alpha * y(i1, i2, i3);
            });
            ++iters;
            return true;
        }
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            z(i1, i2, i3) = s(i1, i2, i3) / op.diag(i1, i2, i3);
        });
        op.apply(z, t);
        double tt = dot_interior(gr, t, t);
        if (tt == 0.0) return false;
        omega = dot_interior(gr, t, s) / tt;
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            x(i1, i2, i3) += alpha * y(i1, i2, i3) + omega * z(i1, i2, i3);
            r(i1, i2, i3) = s(i1, i2, i3) - omega * t(i1, i2, i3);
        });
        if (std::sqrt(dot_interior(gr, r, r)) <= tol * bnorm) { ++iters; return true; }
        if (omega == 0.0) return false;
    }
    return false;
}

} // namespace

ScalarField solve_helmholtz(const SymTensorField& ginv, const ChristoffelField& gamma,
                            const ScalarField& sigma, const ScalarField& rhs,
                            const ScalarField& dirichlet, const EllipticConfig& cfg,
                            const ScalarField* warm, EllipticStats* stats) {
    const Grid& gr = ginv.grid();
    HelmholtzOp op(ginv, gamma, sigma);

    // Affine split: u = u0 + w with u0 carrying the face data and w = 0 there.
    ScalarField u0(gr);
    u0.fill(0.0);
    for (int i2 = 0; i2 < gr.n2(); ++i2)
        for (int i1 = 0; i1 < gr.n1(); ++i1) {
            u0(i1, i2, 0) = dirichlet(i1, i2, 0);
            u0(i1, i2, gr.n3() - 1) = dirichlet(i1, i2, gr.n3() - 1);
        }
    ScalarField b(gr);
    b.fill(0.0);
    op.apply(u0, b);
    for_solve_nodes(gr, [&](int i1, int i2, int i3) {
        b(i1, i2, i3) = rhs(i1, i2, i3) - b(i1, i2, i3);
    });

    ScalarField w(gr);
    w.fill(0.0);
    if (warm && cfg.warm_start) {
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            w(i1, i2, i3) = (*warm)(i1, i2, i3) - u0(i1, i2, i3);
        });
    }

    int iters = 0;
    bool ok = pcg(op, b, w, cfg.rel_tol, cfg.max_iter, iters);
    bool fellback = false;
    if (!ok) {
        fellback = true;
        int more = 0;
        ok = bicgstab(op, b, w, cfg.rel_tol, cfg.max_iter, more);
        iters += more;
    }
    if (!ok)
        throw solver_error("solve_helmholtz: linear solver did not reach rel_tol "
                           + std::to_string(cfg.rel_tol));

    ScalarField u = u0;
    for_solve_nodes(gr, [&](int i1, int i2, int i3) { u(i1, i2, i3) += w(i1, i2, i3); });

    if (stats) {
        stats->iterations = iters;
        stats->used_fallback = fellback;
        ScalarField Au(gr);
        Au.fill(0.0);
        op.apply(u, Au);
        double num = 0, den = 0;
        for_solve_nodes(gr, [&](int i1, int i2, int i3) {
            double d = Au(i1, i2, i3) - rhs(i1, i2, i3);
            num += d * d;
            den += b(i1, i2, i3) * b(i1, i2, i3);
        });
        stats->residual = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    }
    return u;
}

ScalarField solve_lapse(const SymTensorField& ginv, const ChristoffelField& gamma,
                        const ScalarField& k2, const EllipticConfig& cfg,
                        const ScalarField* warm, EllipticStats* stats) {
    const Grid& gr = ginv.grid();
    // solve for the deviation psi = phi - 1: (Lap - k2) psi = k2 with psi = 0
    // on the faces. The discrete operator annihilates constants exactly, so
    // this is the same equation but the right-hand side scales with |k|^2 and
    // the flat case stays exact instead of carrying O(rel_tol) solver noise.
    ScalarField zero(gr), psi_warm(gr);
    zero.fill(0.0);
    const ScalarField* pw = nullptr;
    if (warm) {
        psi_warm = *warm;
        for (std::size_t i = 0; i < gr.storage_size(); ++i) psi_warm.data()[i] -= 1.0;
        pw = &psi_warm;
    }
    ScalarField phi = solve_helmholtz(ginv, gamma, k2, k2, zero, cfg, pw, stats);
    for (std::size_t i = 0; i < gr.storage_size(); ++i) phi.data()[i] += 1.0;
    double lo = 1e300, hi = -1e300;
    for (int i3 = 0; i3 < gr.n3(); ++i3)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i1 = 0; i1 < gr.n1(); ++i1) {
                lo = std::min(lo, phi(i1, i2, i3));
                hi = std::max(hi, phi(i1, i2, i3));
            }
    if (!(lo > 0.0))
        throw solver_error("solve_lapse: lapse lost positivity, min = " + std::to_string(lo));
    if (hi > 1.0 + 10.0 * cfg.rel_tol)
        throw solver_error("solve_lapse: maximum principle violated, max = "
                           + std::to_string(hi));
    return phi;
}

double lapse_residual(const SymTensorField& ginv, const ChristoffelField& gamma,
                      const ScalarField& phi, const ScalarField& k2, const ScalarField* rhs) {
    const Grid& gr = ginv.grid();
    HelmholtzOp op(ginv, gamma, k2);
    ScalarField Au(gr);
    Au.fill(0.0);
    op.apply(phi, Au);
    double s = 0.0;
    std::size_t n = 0;
    for_solve_nodes(gr, [&](int i1, int i2, int i3) {
        double d = Au(i1, i2, i3) - (rhs ? (*rhs)(i1, i2, i3) : 0.0);
        s += d * d;
        ++n;
    });
    return std::sqrt(s / n);
}

} // namespace collar
