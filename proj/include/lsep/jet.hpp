#pragma once

// Truncated multivariate Taylor polynomials in D = 1 or 2 variables, total degree <= K.
// Coefficients are Taylor coefficients (derivative / factorial), stored densely as
// c[i][j] with i + j <= K (j unused when D = 1).

#include <array>
#include <cmath>

namespace lsep {

template <int D, int K>
struct Jet {
    static_assert(D == 1 || D == 2);
    static constexpr int W = (D == 2 ? K + 1 : 1);
    std::array<double, (K + 1) * W> c{};

    Jet() = default;
    explicit Jet(double v) { c[0] = v; }

    double& at(int i, int j = 0) { return c[i * W + j]; }
    double at(int i, int j = 0) const { return c[i * W + j]; }
    double value() const { return c[0]; }

    static Jet variable(double v, int which = 0) {
        Jet r(v);
        if (K >= 1) {
            if (which == 0) r.at(1, 0) = 1.0;
            else r.at(0, 1) = 1.0;
        }
        return r;
    }

    // d^{i+j}/dx^i dy^j at the expansion point
    double derivative(int i, int j = 0) const {
        double f = 1.0;
        for (int t = 2; t <= i; ++t) f *= t;
        for (int t = 2; t <= j; ++t) f *= t;
        return at(i, j) * f;
    }

    Jet& operator+=(const Jet& o) {
        for (size_t t = 0; t < c.size(); ++t) c[t] += o.c[t];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (size_t t = 0; t < c.size(); ++t) c[t] -= o.c[t];
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& v : c) v *= s;
        return *this;
    }
    Jet& operator+=(double s) {
        c[0] += s;
        return *this;
    }
};

template <int D, int K>
Jet<D, K> operator+(Jet<D, K> a, const Jet<D, K>& b) { return a += b; }
template <int D, int K>
Jet<D, K> operator-(Jet<D, K> a, const Jet<D, K>& b) { return a -= b; }
template <int D, int K>
Jet<D, K> operator-(Jet<D, K> a) { return a *= -1.0; }
template <int D, int K>
Jet<D, K> operator*(double s, Jet<D, K> a) { return a *= s; }
template <int D, int K>
Jet<D, K> operator*(Jet<D, K> a, double s) { return a *= s; }
template <int D, int K>
Jet<D, K> operator+(Jet<D, K> a, double s) { return a += s; }
template <int D, int K>
Jet<D, K> operator+(double s, Jet<D, K> a) { return a += s; }
template <int D, int K>
Jet<D, K> operator-(double s, const Jet<D, K>& a) { return (-a) += s; }
template <int D, int K>
Jet<D, K> operator-(Jet<D, K> a, double s) { return a += -s; }

template <int D, int K>
Jet<D, K> operator*(const Jet<D, K>& a, const Jet<D, K>& b) {
    Jet<D, K> r;
    if constexpr (D == 1) {
        for (int i = 0; i <= K; ++i)
            for (int k = 0; k <= K - i; ++k) r.c[i + k] += a.c[i] * b.c[k];
    } else {
        for (int i = 0; i <= K; ++i)
            for (int j = 0; j <= K - i; ++j) {
                double x = a.at(i, j);
                if (x == 0.0) continue;
                for (int k = 0; k <= K - i - j; ++k)
                    for (int l = 0; l <= K - i - j - k; ++l) r.at(i + k, j + l) += x * b.at(k, l);
            }
    }
    return r;
}

// f(a) given the Taylor coefficients t[n] = f^{(n)}(a0)/n! of f at a0 = a.value().
template <int D, int K>
Jet<D, K> compose(const Jet<D, K>& a, const std::array<double, K + 1>& t) {
    Jet<D, K> h = a;
    h.c[0] = 0.0;
    Jet<D, K> r(t[0]);
    Jet<D, K> p(1.0);
    for (int n = 1; n <= K; ++n) {
        p = p * h;
        Jet<D, K> term = p;
        term *= t[n];
        r += term;
    }
    return r;
}

template <int K>
std::array<double, K + 1> taylor_exp(double x) {
    std::array<double, K + 1> t{};
    double e = std::exp(x), f = 1.0;
    for (int n = 0; n <= K; ++n) {
        if (n > 0) f *= n;
        t[n] = e / f;
    }
    return t;
}

// (x0 + h)^p
template <int K>
std::array<double, K + 1> taylor_pow(double x, double p) {
    std::array<double, K + 1> t{};
    t[0] = std::pow(x, p);
    for (int n = 1; n <= K; ++n) t[n] = t[n - 1] * (p - (n - 1)) / (n * x);
    return t;
}

template <int K>
std::array<double, K + 1> taylor_log(double x) {
    std::array<double, K + 1> t{};
    t[0] = std::log(x);
    double xp = 1.0;
    for (int n = 1; n <= K; ++n) {
        xp *= x;
        t[n] = ((n % 2) ? 1.0 : -1.0) / (n * xp);
    }
    return t;
}

template <int D, int K>
Jet<D, K> exp(const Jet<D, K>& a) { return compose(a, taylor_exp<K>(a.value())); }
template <int D, int K>
Jet<D, K> log(const Jet<D, K>& a) { return compose(a, taylor_log<K>(a.value())); }
template <int D, int K>
Jet<D, K> inv(const Jet<D, K>& a) { return compose(a, taylor_pow<K>(a.value(), -1.0)); }
template <int D, int K>
Jet<D, K> sqrt(const Jet<D, K>& a) { return compose(a, taylor_pow<K>(a.value(), 0.5)); }
template <int D, int K>
Jet<D, K> pow(const Jet<D, K>& a, double p) { return compose(a, taylor_pow<K>(a.value(), p)); }

template <int D, int K>
Jet<D, K> sinh(const Jet<D, K>& a) {
    std::array<double, K + 1> t{};
    double s = std::sinh(a.value()), ch = std::cosh(a.value()), f = 1.0;
    for (int n = 0; n <= K; ++n) {
        if (n > 0) f *= n;
        t[n] = ((n % 2) ? ch : s) / f;
    }
    return compose(a, t);
}

template <int D, int K>
Jet<D, K> cosh(const Jet<D, K>& a) {
    std::array<double, K + 1> t{};
    double s = std::sinh(a.value()), ch = std::cosh(a.value()), f = 1.0;
    for (int n = 0; n <= K; ++n) {
        if (n > 0) f *= n;
        t[n] = ((n % 2) ? s : ch) / f;
    }
    return compose(a, t);
}

// asinh' = (1 + x^2)^{-1/2}; integrate its Taylor series.
template <int D, int K>
Jet<D, K> asinh(const Jet<D, K>& a) {
    std::array<double, K + 1> t{};
    t[0] = std::asinh(a.value());
    if constexpr (K >= 1) {
        auto x = Jet<1, K - 1>::variable(a.value());
        auto g = pow(1.0 + x * x, -0.5);
        for (int n = 1; n <= K; ++n) t[n] = g.c[n - 1] / n;
    }
    return compose(a, t);
}

}  // namespace lsep
