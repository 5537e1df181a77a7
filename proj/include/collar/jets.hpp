#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace collar {

// Truncated Taylor polynomial ("jet") in NV variables up to total degree 3.
// Arithmetic on jets propagates exact derivatives of closed-form expressions,
// which is what the analytic oracles and manufactured sources are built from.
template <int NV>
class JetN {
public:
    static constexpr int order = 3;

    struct Tables {
        std::vector<std::array<int, NV>> mono;   // multi-indices, degree <= order
        std::vector<std::vector<int>> prod;      // prod[i][j] = term index of mono_i+mono_j, -1 if cut
        std::vector<std::array<int, NV>> shift;  // shift[i][v] = index of mono_i + e_v, -1 if cut
        int nterms = 0;

        Tables() {
            std::array<int, NV> a{};
            enumerate(a, 0, 0);
            nterms = static_cast<int>(mono.size());
            prod.assign(nterms, std::vector<int>(nterms, -1));
            for (int i = 0; i < nterms; ++i)
                for (int j = 0; j < nterms; ++j) {
                    std::array<int, NV> s;
                    int deg = 0;
                    for (int v = 0; v < NV; ++v) { s[v] = mono[i][v] + mono[j][v]; deg += s[v]; }
                    if (deg <= order) prod[i][j] = find(s);
                }
            shift.assign(nterms, {});
            for (int i = 0; i < nterms; ++i)
                for (int v = 0; v < NV; ++v) {
                    std::array<int, NV> s = mono[i];
                    s[v] += 1;
                    int deg = 0;
                    for (int w = 0; w < NV; ++w) deg += s[w];
                    shift[i][v] = deg <= order ? find(s) : -1;
                }
        }

        void enumerate(std::array<int, NV>& a, int v, int deg) {
            if (v == NV) { mono.push_back(a); return; }
            for (int d = 0; d + deg <= order; ++d) {
                a[v] = d;
                enumerate(a, v + 1, deg + d);
            }
            a[v] = 0;
        }

        int find(const std::array<int, NV>& m) const {
            for (int i = 0; i < static_cast<int>(mono.size()); ++i)
                if (mono[i] == m) return i;
            return -1;
        }
    };

    static const Tables& tables() {
        static const Tables t;
        return t;
    }

    JetN() { c.assign(tables().nterms, 0.0); }

    static JetN constant(double v) {
        JetN j;
        j.c[0] = v;
        return j;
    }

    static JetN variable(int var, double value) {
        JetN j;
        j.c[0] = value;
        std::array<int, NV> m{};
        m[var] = 1;
        j.c[tables().find(m)] = 1.0;
        return j;
    }

    double value() const { return c[0]; }

    // First-derivative coefficient (the value of pd_var of the jet).
    double deriv1(int var) const {
        std::array<int, NV> m{};
        m[var] = 1;
        return c[tables().find(m)];
    }

    // Jet of pd_var, valid one order lower.
    JetN d(int var) const {
        const Tables& t = tables();
        JetN out;
        for (int i = 0; i < t.nterms; ++i) {
            int j = t.shift[i][var];
            if (j >= 0) out.c[i] = c[j] * (t.mono[j][var]);
        }
        return out;
    }

    JetN operator+(const JetN& o) const {
        JetN r = *this;
        for (int i = 0; i < (int)c.size(); ++i) r.c[i] += o.c[i];
        return r;
    }
    JetN operator-(const JetN& o) const {
        JetN r = *this;
        for (int i = 0; i < (int)c.size(); ++i) r.c[i] -= o.c[i];
        return r;
    }
    JetN operator-() const {
        JetN r = *this;
        for (double& x : r.c) x = -x;
        return r;
    }
    JetN operator*(double s) const {
        JetN r = *this;
        for (double& x : r.c) x *= s;
        return r;
    }
    friend JetN operator*(double s, const JetN& j) { return j * s; }
    JetN operator+(double s) const { JetN r = *this; r.c[0] += s; return r; }
    friend JetN operator+(double s, const JetN& j) { return j + s; }
    JetN operator-(double s) const { JetN r = *this; r.c[0] -= s; return r; }
    friend JetN operator-(double s, const JetN& j) { return (-j) + s; }

    JetN operator*(const JetN& o) const {
        const Tables& t = tables();
        JetN r;
        for (int i = 0; i < t.nterms; ++i) {
            double a = c[i];
            if (a == 0.0) continue;
            const auto& row = t.prod[i];
            for (int j = 0; j < t.nterms; ++j) {
                int k = row[j];
                if (k >= 0) r.c[k] += a * o.c[j];
            }
        }
        return r;
    }

    JetN& operator+=(const JetN& o) {
        for (int i = 0; i < (int)c.size(); ++i) c[i] += o.c[i];
        return *this;
    }
    JetN& operator-=(const JetN& o) {
        for (int i = 0; i < (int)c.size(); ++i) c[i] -= o.c[i];
        return *this;
    }

    // Composition with a univariate function given by derivatives at the
    // constant part: f(u) = sum f_k/k! (u - u0)^k, truncated (w^4 = 0).
    JetN compose(double f0, double f1, double f2, double f3) const {
        JetN w = *this;
        w.c[0] = 0.0;
        JetN w2 = w * w;
        JetN w3 = w2 * w;
        JetN r = w3 * (f3 / 6.0);
        r += w2 * (f2 / 2.0);
        r += w * f1;
        r.c[0] += f0;
        return r;
    }

    std::vector<double> c;
};

template <int NV>
JetN<NV> recip(const JetN<NV>& u) {
    double a = u.value();
    return u.compose(1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a), -6.0 / (a * a * a * a));
}

template <int NV>
JetN<NV> operator/(const JetN<NV>& a, const JetN<NV>& b) { return a * recip(b); }

template <int NV>
JetN<NV> sqrtj(const JetN<NV>& u) {
    double a = u.value();
    double s = std::sqrt(a);
    return u.compose(s, 0.5 / s, -0.25 / (s * a), 0.375 / (s * a * a));
}

template <int NV>
JetN<NV> sinj(const JetN<NV>& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    return u.compose(s, c, -s, -c);
}

template <int NV>
JetN<NV> cosj(const JetN<NV>& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    return u.compose(c, -s, -c, s);
}

template <int NV>
JetN<NV> expj(const JetN<NV>& u) {
    double e = std::exp(u.value());
    return u.compose(e, e, e, e);
}

} // namespace collar
