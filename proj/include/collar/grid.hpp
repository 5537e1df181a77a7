#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include "collar/errors.hpp"

namespace collar {

// Collar domain T^2 x [x3_min, 0]. Directions 1,2 are periodic with node
// spacing h = period/n (no duplicated seam node). Direction 3 is bounded and
// node-centered including both faces: x3(i3) = x3_min + i3*h3, i3 = 0..n3-1,
// with `ghost` extra layers on each side used by normal-direction stencils.
struct GridSpec {
    int n1 = 16;
    int n2 = 16;
    int n3 = 16;
    double x3_min = -1.0;
    double period1 = 2.0 * M_PI;
    double period2 = 2.0 * M_PI;
    int ghost = 2;
};

class Grid {
public:
    explicit Grid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    int n1() const { return spec_.n1; }
    int n2() const { return spec_.n2; }
    int n3() const { return spec_.n3; }
    int ghost() const { return spec_.ghost; }
    double h1() const { return h1_; }
    double h2() const { return h2_; }
    double h3() const { return h3_; }
    double h_min() const { return std::min(h1_, std::min(h2_, h3_)); }

    double x1(int i1) const { return i1 * h1_; }
    double x2(int i2) const { return i2 * h2_; }
    // i3 may lie in the ghost range [-ghost, n3-1+ghost].
    double x3(int i3) const { return spec_.x3_min + i3 * h3_; }

    int wrap1(int i1) const { int n = spec_.n1; i1 %= n; return i1 < 0 ? i1 + n : i1; }
    int wrap2(int i2) const { int n = spec_.n2; i2 %= n; return i2 < 0 ? i2 + n : i2; }

    std::size_t storage_size() const { return storage_; }
    std::size_t index(int i1, int i2, int i3) const {
        return (static_cast<std::size_t>(i3 + spec_.ghost) * spec_.n2 + i2) * spec_.n1 + i1;
    }

    bool same(const Grid& other) const { return this == &other; }

private:
    GridSpec spec_;
    double h1_, h2_, h3_;
    std::size_t storage_;
};

class ScalarField {
public:
    explicit ScalarField(const Grid& grid);

    const Grid& grid() const { return *grid_; }

    double& operator()(int i1, int i2, int i3) { return v_[grid_->index(i1, i2, i3)]; }
    double operator()(int i1, int i2, int i3) const { return v_[grid_->index(i1, i2, i3)]; }

    // Accessor with tangential wrap-around for stencil code.
    double at(int i1, int i2, int i3) const {
        return v_[grid_->index(grid_->wrap1(i1), grid_->wrap2(i2), i3)];
    }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    void fill(double value);
    void fill_interior(double value);

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double s);
    void axpy(double a, const ScalarField& x); // this += a*x

    double max_abs_interior() const;

private:
    const Grid* grid_;
    std::vector<double> v_;
};

// Symmetric rank-2 tensor field, components stored in the fixed order
// 11, 12, 13, 22, 23, 33.
class SymTensorField {
public:
    explicit SymTensorField(const Grid& grid);

    static int comp(int i, int j) {
        static const int map[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
        return map[i][j];
    }

    const Grid& grid() const { return c_[0].grid(); }

    ScalarField& operator[](int comp6) { return c_[comp6]; }
    const ScalarField& operator[](int comp6) const { return c_[comp6]; }

    double& operator()(int i, int j, int i1, int i2, int i3) {
        return c_[comp(i, j)](i1, i2, i3);
    }
    double operator()(int i, int j, int i1, int i2, int i3) const {
        return c_[comp(i, j)](i1, i2, i3);
    }

    void fill(double value);

    SymTensorField& operator+=(const SymTensorField& o);
    SymTensorField& operator-=(const SymTensorField& o);
    SymTensorField& operator*=(double s);
    void axpy(double a, const SymTensorField& x);

    double max_abs_interior() const;

private:
    std::array<ScalarField, 6> c_;
};

enum class Face { inner = 0, outer = 1 }; // inner: x3 = x3_min (i3 = 0), outer: x3 = 0 (i3 = n3-1)

inline int face_i3(const Grid& g, Face f) { return f == Face::inner ? 0 : g.n3() - 1; }
// Step from a face node toward the interior.
inline int face_inward(Face f) { return f == Face::inner ? +1 : -1; }

// Centered tangential derivative, dir is 1 or 2. Computed at i3 in
// [-ext, n3-1+ext]; entries outside that range are left as the sentinel.
ScalarField d_tan(const ScalarField& f, int dir, int ext = 0);

// Centered normal derivative at i3 in [-ext, n3-1+ext]. Requires valid values
// one layer beyond that range; throws numeric_error if the needed ghost
// entries are unset (NaN sentinel).
ScalarField d_norm(const ScalarField& f, int ext = 0);

// Centered second derivatives: dd(f, a, b) = d_a d_b f for a,b in {1,2,3}.
ScalarField d2(const ScalarField& f, int a, int b, int ext = 0);

// Trapezoid rule in the normal direction (half weights on the faces), exact
// periodic trapezoid (= uniform weights) tangentially. `weight` is an
// optional pointwise factor such as sqrt(det g).
double integrate_volume(const ScalarField& f);
double integrate_volume(const ScalarField& f, const ScalarField& weight);

// Integral of a face slice with the tangential product measure.
double integrate_boundary(const ScalarField& f, Face face);
double integrate_boundary(const ScalarField& f, Face face, const ScalarField& weight);

// Fill both ghost layers in the normal direction by cubic extrapolation
// through the four collar nodes nearest each face.
void fill_ghosts_extrapolate(ScalarField& f);
void fill_ghosts_extrapolate(SymTensorField& f);

// Verify that ghost layers 1..depth hold no NaN sentinel.
void require_ghosts(const ScalarField& f, int depth, const char* who);

constexpr double ghost_sentinel = std::numeric_limits<double>::quiet_NaN();

} // namespace collar
