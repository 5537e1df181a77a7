#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "collar/geometry.hpp"
#include "collar/grid.hpp"

namespace collar {

struct Sym2 {
    double m11 = 0.0, m12 = 0.0, m22 = 0.0;
    double operator()(int a, int b) const {
        return a == 0 ? (b == 0 ? m11 : m12) : (b == 0 ? m12 : m22);
    }
};

// Trace-free mixed 2x2 tensor; the 22 entry is -a11 by construction so the
// trace vanishes identically in floating point.
struct TracelessMixed2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0;
    double operator()(int a, int b) const {
        return a == 0 ? (b == 0 ? a11 : a12) : (b == 0 ? a21 : -a11);
    }
};

// One-parameter family of conformal classes on a face. Implementations
// return any positive multiple of the class representative; all consumers
// normalize to the unit-determinant representative first, so a pointwise
// rescaling of q never changes the produced boundary data.
class ConformalFamily {
public:
    virtual ~ConformalFamily() = default;
    virtual Sym2 q(double t, int i1, int i2) const = 0;

    // Unit-determinant representative of the class.
    Sym2 rep(double t, int i1, int i2) const;
    // Dirichlet data: hat k_A^B = -1/2 tracefree([q]^{-1} dt [q]).
    TracelessMixed2 hat(double t, int i1, int i2) const;
    TracelessMixed2 dt_hat(double t, int i1, int i2) const;
};

class ConstantFamily : public ConformalFamily {
public:
    explicit ConstantFamily(Sym2 q = {1.0, 0.0, 1.0}) : q_(q) {}
    Sym2 q(double, int, int) const override { return q_; }

private:
    Sym2 q_;
};

// [q_t] = diag(e^{2 lambda t}, e^{-2 lambda t}).
class DiagExponentialFamily : public ConformalFamily {
public:
    explicit DiagExponentialFamily(double lambda) : lambda_(lambda) {}
    Sym2 q(double t, int, int) const override;

private:
    double lambda_;
};

class CallableFamily : public ConformalFamily {
public:
    using Fn = std::function<Sym2(double t, int i1, int i2)>;
    explicit CallableFamily(Fn fn) : fn_(std::move(fn)) {}
    Sym2 q(double t, int i1, int i2) const override { return fn_(t, i1, i2); }

private:
    Fn fn_;
};

// Tabulated family loaded from a plain-text file with rows
//   t i1 i2 q11 q12 q22
// cubically interpolated in t (Catmull-Rom through the time samples).
class TableFamily : public ConformalFamily {
public:
    TableFamily(const std::string& path, int n1, int n2);
    Sym2 q(double t, int i1, int i2) const override;

private:
    int n1_, n2_;
    std::vector<double> times_;
    std::vector<std::vector<Sym2>> samples_; // per time, per face node
};

struct BoundaryData {
    std::shared_ptr<const ConformalFamily> inner;
    std::shared_ptr<const ConformalFamily> outer;
    const ConformalFamily& at(Face f) const { return f == Face::inner ? *inner : *outer; }
};

// Geometry of one face needed by the boundary conditions: induced metric,
// unit normal, second fundamental form of the face inside the slice (chi,
// one-sided normal stencils), intrinsic 2d Christoffels, and the normal
// derivatives of the frame vectors.
struct FaceGeom {
    Face face;
    int n1 = 0, n2 = 0;
    std::vector<Sym2> q, qinv;
    std::vector<std::array<double, 3>> N;
    std::vector<Sym2> chi;
    std::vector<std::array<double, 6>> gamma2; // Gamma2^C_{AB}, index C*3+comp2(A,B)
    std::vector<std::array<double, 3>> dNN;    // (nabla_N N)^c
    std::vector<std::array<std::array<double, 3>, 2>> dNe; // (nabla_N e_A)^c
    std::vector<Sym2> dn_qinv;                 // N applied to q^{AB}

    std::size_t at(int i1, int i2) const { return static_cast<std::size_t>(i2) * n1 + i1; }
};

FaceGeom face_geometry(const SymTensorField& g, const SymTensorField& ginv,
                       const ChristoffelField& gamma, const NormalFrame& frame, Face face);

// chi_AB of a face, exposed for diagnostics and tests.
std::vector<Sym2> boundary_chi(const SymTensorField& g, Face face);

// Impose the boundary conditions on k at both faces:
//  - Dirichlet trace-free tangential data from the conformal families,
//  - k_NN = -k_C^C on the face,
//  - first ghost layer of the remaining components from the normal-derivative
//    conditions, second ghost layer by extrapolation.
// g must have filled ghosts; ginv, gamma, frame must be valid one layer into
// the ghosts. Idempotent: a second application is a no-op.
void apply_bc(SymTensorField& k, const SymTensorField& g, const SymTensorField& ginv,
              const ChristoffelField& gamma, const NormalFrame& frame,
              const BoundaryData& bd, double t);

struct BcResiduals {
    double hat = 0.0;  // face data vs prescribed hat k
    double knn = 0.0;  // algebraic trace condition
    double kna = 0.0;  // normal-derivative condition on k_NA
    double kcc = 0.0;  // normal-derivative condition on the tangential trace
    double max_all() const { return std::max(std::max(hat, knn), std::max(kna, kcc)); }
};

BcResiduals bc_residuals(const SymTensorField& k, const SymTensorField& g,
                         const SymTensorField& ginv, const ChristoffelField& gamma,
                         const NormalFrame& frame, const BoundaryData& bd, double t);

struct CompatibilityReport {
    double conformal_class = 0.0; // face metric class vs family class at t = 0
    double hat = 0.0;             // hat of the initial k vs family hat
    double dt_hat = 0.0;          // family velocity vs the evolution-implied one
    bool ok(double tol) const {
        return conformal_class <= tol && hat <= tol && dt_hat <= tol;
    }
};

// Zeroth and first order corner compatibility between the initial data
// (g, k, v = initial time derivative of k, phi) and the family on one face.
CompatibilityReport compatibility_check(const SymTensorField& g, const SymTensorField& k,
                                        const SymTensorField& v, const ScalarField& phi,
                                        const SymTensorField& ginv,
                                        const ChristoffelField& gamma,
                                        const NormalFrame& frame, const SymTensorField& ric,
                                        const ConformalFamily& family, Face face);

// Boundary-data strength sum_{i<=r+2} ||dt^i hat||^2_{H^{r+2-i}} on a face.
double cbd_norm(const ConformalFamily& family, const Grid& grid, double t, int r);

// Utilities shared with tests.
Sym2 normalize_rep(const Sym2& q);
Sym2 inv_sym2(const Sym2& q);

} // namespace collar
