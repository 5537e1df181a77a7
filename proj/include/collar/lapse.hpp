#pragma once

#include "collar/geometry.hpp"
#include "collar/grid.hpp"

namespace collar {

struct EllipticConfig {
    double rel_tol = 1e-10;
    int max_iter = 50000;
    bool warm_start = true;
};

struct EllipticStats {
    int iterations = 0;
    double residual = 0.0;   // final relative residual of the linear solve
    bool used_fallback = false;
};

// Solve Delta_g u - sigma u = rhs with Dirichlet data on both faces.
// Unknowns are the strict interior nodes; the face planes of `dirichlet` are
// held fixed. Diagonally preconditioned conjugate gradients with a BiCGStab
// fallback if the (mildly nonsymmetric) stencil stalls.
ScalarField solve_helmholtz(const SymTensorField& ginv, const ChristoffelField& gamma,
                            const ScalarField& sigma, const ScalarField& rhs,
                            const ScalarField& dirichlet, const EllipticConfig& cfg,
                            const ScalarField* warm = nullptr, EllipticStats* stats = nullptr);

// Maximal-gauge lapse: Delta_g phi = |k|^2 phi with phi = 1 on both faces.
// Enforces the discrete maximum principle bounds 0 < phi <= 1 + 10*rel_tol.
ScalarField solve_lapse(const SymTensorField& ginv, const ChristoffelField& gamma,
                        const ScalarField& k2, const EllipticConfig& cfg,
                        const ScalarField* warm = nullptr, EllipticStats* stats = nullptr);

// Discrete L2 norm of Delta_g phi - |k|^2 phi - rhs over the interior.
double lapse_residual(const SymTensorField& ginv, const ChristoffelField& gamma,
                      const ScalarField& phi, const ScalarField& k2,
                      const ScalarField* rhs = nullptr);

} // namespace collar
