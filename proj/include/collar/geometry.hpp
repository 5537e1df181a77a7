#pragma once

#include <array>

#include "collar/grid.hpp"

namespace collar {

// Christoffel symbols Gamma^a_{bc}, stored as 18 scalar fields indexed by the
// upper index and the symmetric lower pair.
class ChristoffelField {
public:
    explicit ChristoffelField(const Grid& grid);

    const Grid& grid() const { return c_[0].grid(); }

    ScalarField& at(int a, int b, int c) { return c_[a * 6 + SymTensorField::comp(b, c)]; }
    const ScalarField& at(int a, int b, int c) const {
        return c_[a * 6 + SymTensorField::comp(b, c)];
    }
    ScalarField& flat(int i) { return c_[i]; }
    const ScalarField& flat(int i) const { return c_[i]; }

private:
    std::array<ScalarField, 18> c_;
};

// Unit normal frame of the x3 level sets, N^i = g^{3i}/sqrt(g^{33}), defined
// on the whole collar. N points toward increasing x3 everywhere.
struct NormalFrame {
    std::array<ScalarField, 3> N;   // contravariant components
    ScalarField lapse_n;            // 1/sqrt(g^{33}) = proper spacing of level sets
    explicit NormalFrame(const Grid& g) : N{ScalarField(g), ScalarField(g), ScalarField(g)}, lapse_n(g) {}
};

// Pointwise inverse by adjugate/determinant. Throws numeric_error when
// det < 1e-10 or the smallest eigenvalue drops below 1e-8 (no clamping).
// Computed at i3 in [-ext, n3-1+ext]; input must be valid there.
SymTensorField inverse_metric(const SymTensorField& g, int ext = 0);

// Gamma^a_{bc} from centered differences of g. Needs g valid to ext+1 layers.
ChristoffelField christoffels(const SymTensorField& g, const SymTensorField& ginv, int ext = 0);

// Ricci tensor from partial derivatives of the Christoffel fields:
// R_ij = pd_a Gamma^a_{ij} - pd_j Gamma^a_{ia} + Gamma^a_{ab} Gamma^b_{ij}
//        - Gamma^a_{jb} Gamma^b_{ia}, explicitly symmetrized.
// Gamma must be valid to ext 1.
SymTensorField ricci(const ChristoffelField& gamma);

ScalarField scalar_curvature(const SymTensorField& ginv, const SymTensorField& ric);

// Covariant Hessian of a scalar, nabla_i nabla_j phi. phi needs one valid
// ghost layer.
SymTensorField hessian(const ChristoffelField& gamma, const ScalarField& phi);

ScalarField laplace_scalar(const SymTensorField& ginv, const ChristoffelField& gamma,
                           const ScalarField& phi);

// Rough Laplacian g^{ab} nabla_a nabla_b applied to a symmetric 2-tensor.
// Needs T valid to two ghost layers and Gamma valid to ext 1.
SymTensorField laplace_tensor(const SymTensorField& g, const SymTensorField& ginv,
                              const ChristoffelField& gamma, const SymTensorField& T);

// Covariant derivative nabla_a T_ij as 18 fields indexed a*6 + comp(i,j).
// Computed at i3 in [-ext, n3-1+ext]; needs T valid one layer further and
// Gamma valid on the output range.
std::array<ScalarField, 18> covariant_deriv(const ChristoffelField& gamma,
                                            const SymTensorField& T, int ext = 0);

// d/dt Gamma^b_{ac} = g^{bl} [ nabla_l(phi k_ac) - nabla_a(phi k_cl)
//                              - nabla_c(phi k_al) ]  (all indices spatial).
ChristoffelField dt_christoffel(const SymTensorField& ginv, const ChristoffelField& gamma,
                                const SymTensorField& k, const ScalarField& phi);

NormalFrame normal_frame(const SymTensorField& g, const SymTensorField& ginv, int ext = 0);

ScalarField trace(const SymTensorField& ginv, const SymTensorField& T);
ScalarField norm2(const SymTensorField& ginv, const SymTensorField& T); // T^{ij} T_ij

// Pointwise helpers on 3x3 symmetric data packed in component order.
struct Sym3 {
    double v[6];
    double operator()(int i, int j) const { return v[SymTensorField::comp(i, j)]; }
    double& ref(int i, int j) { return v[SymTensorField::comp(i, j)]; }
};

double det_sym3(const Sym3& m);
Sym3 inv_sym3(const Sym3& m, double det);
double min_eig_sym3(const Sym3& m);

inline Sym3 load_sym3(const SymTensorField& f, int i1, int i2, int i3) {
    Sym3 m;
    for (int c = 0; c < 6; ++c) m.v[c] = f[c](i1, i2, i3);
    return m;
}

} // namespace collar
