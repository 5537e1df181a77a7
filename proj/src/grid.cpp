#include "collar/grid.hpp"

#include <algorithm>
#include <cmath>

namespace collar {

Grid::Grid(const GridSpec& spec) : spec_(spec) {
    if (spec.n1 < 4 || spec.n2 < 4 || spec.n3 < 4)
        throw config_error("grid: need at least 4 nodes per direction");
    if (!(spec.x3_min < 0.0))
        throw config_error("grid: x3_min must be negative");
    if (spec.ghost < 2)
        throw config_error("grid: ghost width must be >= 2");
    if (!(spec.period1 > 0.0) || !(spec.period2 > 0.0))
        throw config_error("grid: tangential periods must be positive");
    h1_ = spec.period1 / spec.n1;
    h2_ = spec.period2 / spec.n2;
    h3_ = -spec.x3_min / (spec.n3 - 1);
    storage_ = static_cast<std::size_t>(spec.n1) * spec.n2 * (spec.n3 + 2 * spec.ghost);
}

ScalarField::ScalarField(const Grid& grid)
    : grid_(&grid), v_(grid.storage_size(), ghost_sentinel) {
    fill_interior(0.0);
}

void ScalarField::fill(double value) { std::fill(v_.begin(), v_.end(), value); }

void ScalarField::fill_interior(double value) {
    const Grid& g = *grid_;
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                (*this)(i1, i2, i3) = value;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
}

void ScalarField::axpy(double a, const ScalarField& x) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
}

double ScalarField::max_abs_interior() const {
    const Grid& g = *grid_;
    double m = 0.0;
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                m = std::max(m, std::abs((*this)(i1, i2, i3)));
    return m;
}

SymTensorField::SymTensorField(const Grid& grid)
    : c_{ScalarField(grid), ScalarField(grid), ScalarField(grid),
         ScalarField(grid), ScalarField(grid), ScalarField(grid)} {}

void SymTensorField::fill(double value) {
    for (auto& f : c_) f.fill(value);
}

SymTensorField& SymTensorField::operator+=(const SymTensorField& o) {
    for (int c = 0; c < 6; ++c) c_[c] += o.c_[c];
    return *this;
}

SymTensorField& SymTensorField::operator-=(const SymTensorField& o) {
    for (int c = 0; c < 6; ++c) c_[c] -= o.c_[c];
    return *this;
}

SymTensorField& SymTensorField::operator*=(double s) {
    for (auto& f : c_) f *= s;
    return *this;
}

void SymTensorField::axpy(double a, const SymTensorField& x) {
    for (int c = 0; c < 6; ++c) c_[c].axpy(a, x.c_[c]);
}

double SymTensorField::max_abs_interior() const {
    double m = 0.0;
    for (const auto& f : c_) m = std::max(m, f.max_abs_interior());
    return m;
}

void require_ghosts(const ScalarField& f, int depth, const char* who) {
    const Grid& g = f.grid();
    for (int layer = 1; layer <= depth; ++layer) {
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                if (std::isnan(f(i1, i2, -layer)) || std::isnan(f(i1, i2, g.n3() - 1 + layer)))
                    throw numeric_error(std::string(who) + ": unfilled ghost layer in normal direction");
    }
}

ScalarField d_tan(const ScalarField& f, int dir, int ext) {
    const Grid& g = f.grid();
    ScalarField out(g);
    out.fill(ghost_sentinel);
    const double inv2h = 1.0 / (2.0 * (dir == 1 ? g.h1() : g.h2()));
    if (dir != 1 && dir != 2) throw numeric_error("d_tan: dir must be 1 or 2");
    for (int i3 = -ext; i3 <= g.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                double fp = (dir == 1) ? f.at(i1 + 1, i2, i3) : f.at(i1, i2 + 1, i3);
                double fm = (dir == 1) ? f.at(i1 - 1, i2, i3) : f.at(i1, i2 - 1, i3);
                out(i1, i2, i3) = (fp - fm) * inv2h;
            }
    return out;
}

ScalarField d_norm(const ScalarField& f, int ext) {
    const Grid& g = f.grid();
    if (ext + 1 > g.ghost())
        throw numeric_error("d_norm: extension exceeds ghost width");
    require_ghosts(f, ext + 1, "d_norm");
    ScalarField out(g);
    out.fill(ghost_sentinel);
    const double inv2h = 1.0 / (2.0 * g.h3());
    for (int i3 = -ext; i3 <= g.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                out(i1, i2, i3) = (f(i1, i2, i3 + 1) - f(i1, i2, i3 - 1)) * inv2h;
    return out;
}

ScalarField d2(const ScalarField& f, int a, int b, int ext) {
    const Grid& g = f.grid();
    ScalarField out(g);
    out.fill(ghost_sentinel);
    if (a > b) std::swap(a, b);
    if (b == 3) {
        if (ext + 1 > g.ghost()) throw numeric_error("d2: extension exceeds ghost width");
        require_ghosts(f, ext + 1, "d2");
    }
    const double h[4] = {0.0, g.h1(), g.h2(), g.h3()};
    for (int i3 = -ext; i3 <= g.n3() - 1 + ext; ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                double r;
                if (a == b) {
                    double fp, fm, f0 = f(i1, i2, i3);
                    if (a == 1) { fp = f.at(i1 + 1, i2, i3); fm = f.at(i1 - 1, i2, i3); }
                    else if (a == 2) { fp = f.at(i1, i2 + 1, i3); fm = f.at(i1, i2 - 1, i3); }
                    else { fp = f(i1, i2, i3 + 1); fm = f(i1, i2, i3 - 1); }
                    r = (fp - 2.0 * f0 + fm) / (h[a] * h[a]);
                } else {
                    auto val = [&](int d1, int d2_) {
                        int j1 = i1, j2 = i2, j3 = i3;
                        if (a == 1) j1 += d1; else if (a == 2) j2 += d1; else j3 += d1;
                        if (b == 1) j1 += d2_; else if (b == 2) j2 += d2_; else j3 += d2_;
                        return f.at(j1, j2, j3);
                    };
                    r = (val(1, 1) - val(1, -1) - val(-1, 1) + val(-1, -1)) / (4.0 * h[a] * h[b]);
                }
                out(i1, i2, i3) = r;
            }
    return out;
}

double integrate_volume(const ScalarField& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (int i3 = 0; i3 < g.n3(); ++i3) {
        double w3 = (i3 == 0 || i3 == g.n3() - 1) ? 0.5 : 1.0;
        double s = 0.0;
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                s += f(i1, i2, i3);
        sum += w3 * s;
    }
    return sum * g.h1() * g.h2() * g.h3();
}

double integrate_volume(const ScalarField& f, const ScalarField& weight) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (int i3 = 0; i3 < g.n3(); ++i3) {
        double w3 = (i3 == 0 || i3 == g.n3() - 1) ? 0.5 : 1.0;
        double s = 0.0;
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                s += f(i1, i2, i3) * weight(i1, i2, i3);
        sum += w3 * s;
    }
    return sum * g.h1() * g.h2() * g.h3();
}

double integrate_boundary(const ScalarField& f, Face face) {
    const Grid& g = f.grid();
    int i3 = face_i3(g, face);
    double s = 0.0;
    for (int i2 = 0; i2 < g.n2(); ++i2)
        for (int i1 = 0; i1 < g.n1(); ++i1)
            s += f(i1, i2, i3);
    return s * g.h1() * g.h2();
}

double integrate_boundary(const ScalarField& f, Face face, const ScalarField& weight) {
    const Grid& g = f.grid();
    int i3 = face_i3(g, face);
    double s = 0.0;
    for (int i2 = 0; i2 < g.n2(); ++i2)
        for (int i1 = 0; i1 < g.n1(); ++i1)
            s += f(i1, i2, i3) * weight(i1, i2, i3);
    return s * g.h1() * g.h2();
}

void fill_ghosts_extrapolate(ScalarField& f) {
    const Grid& g = f.grid();
    // Cubic extrapolation through the four nodes nearest the face:
    // f(-1) = 4 f(0) - 6 f(1) + 4 f(2) - f(3), iterated for the second layer.
    for (int i2 = 0; i2 < g.n2(); ++i2)
        for (int i1 = 0; i1 < g.n1(); ++i1) {
            for (int layer = 1; layer <= g.ghost(); ++layer) {
                int i3 = -layer;
                f(i1, i2, i3) = 4.0 * f(i1, i2, i3 + 1) - 6.0 * f(i1, i2, i3 + 2)
                              + 4.0 * f(i1, i2, i3 + 3) - f(i1, i2, i3 + 4);
                i3 = g.n3() - 1 + layer;
                f(i1, i2, i3) = 4.0 * f(i1, i2, i3 - 1) - 6.0 * f(i1, i2, i3 - 2)
                              + 4.0 * f(i1, i2, i3 - 3) - f(i1, i2, i3 - 4);
            }
        }
}

void fill_ghosts_extrapolate(SymTensorField& f) {
    for (int c = 0; c < 6; ++c) fill_ghosts_extrapolate(f[c]);
}

} // namespace collar
