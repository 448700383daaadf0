#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "speckle/errors.hpp"

namespace spk {

using cplx = std::complex<double>;

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const cplx& v) { return std::abs(v); }

namespace quad {

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// QUADPACK qk15 abscissae and weights.
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Interval {
    double a, b;
    T value;
    double error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

template <class T, class F>
Interval<T> kronrod15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const T fc = f(c);
    T k = fc * wgk[7];
    T g = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const T s = f(c - dx) + f(c + dx);
        k += s * wgk[j];
        if (j % 2 == 1) g += s * wg[j / 2];
    }
    k *= h;
    g *= h;
    return {a, b, k, magnitude(k - g)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7,15) on a finite interval.
template <class T, class F>
Result<T> gauss_kronrod(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                        int max_intervals = 4000) {
    Result<T> out;
    if (a == b) return out;
    std::priority_queue<detail::Interval<T>> heap;
    auto first = detail::kronrod15<T>(f, a, b);
    T total = first.value;
    double err = first.error;
    heap.push(first);
    int n = 1;
    while (!(err <= std::max(abs_tol, rel_tol * magnitude(total)))) {
        if (n >= max_intervals || !std::isfinite(err)) {
            throw QuadratureFailure("adaptive quadrature did not converge on [" + std::to_string(a) +
                                    ", " + std::to_string(b) + "], error estimate " +
                                    std::to_string(err));
        }
        auto worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        auto left = detail::kronrod15<T>(f, worst.a, m);
        auto right = detail::kronrod15<T>(f, m, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++n;
        // re-sum occasionally so the running error does not drift through cancellation
        if (n % 64 == 0) {
            auto copy = heap;
            T t{};
            double e = 0.0;
            while (!copy.empty()) {
                t += copy.top().value;
                e += copy.top().error;
                copy.pop();
            }
            total = t;
            err = e;
        }
    }
    // final sum in a fixed order for reproducibility
    std::vector<detail::Interval<T>> parts;
    parts.reserve(heap.size());
    while (!heap.empty()) {
        parts.push_back(heap.top());
        heap.pop();
    }
    std::sort(parts.begin(), parts.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    T t{};
    double e = 0.0;
    for (const auto& p : parts) {
        t += p.value;
        e += p.error;
    }
    out.value = t;
    out.error = e;
    out.evaluations = 15 * (2 * n - 1);
    return out;
}

// Gauss-Legendre nodes and weights on [-1, 1].
struct Nodes {
    std::vector<double> x;
    std::vector<double> w;
};

inline Nodes gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Nodes r;
    r.x.resize(n);
    r.w.resize(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        if (n == 1) {
            r.x[0] = 0.0;
            r.w[0] = 2.0;
            return r;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

}  // namespace quad

namespace ode {

// Dormand-Prince 5(4) with standard step-size control. State is a fixed-size
// array of complex numbers.
template <std::size_t N>
using State = std::array<cplx, N>;

template <std::size_t N>
struct Trajectory {
    std::vector<double> z;
    std::vector<State<N>> y;
    double error_estimate = 0.0;
    int accepted = 0;
    int rejected = 0;
};

template <std::size_t N, class Rhs>
Trajectory<N> dopri5(Rhs&& rhs, double z0, double z1, State<N> y0, double rtol, double atol,
                     const std::vector<double>& samples = {}) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Trajectory<N> out;
    out.z.push_back(z0);
    out.y.push_back(y0);
    if (z1 == z0) return out;

    std::vector<double> stops = samples;
    stops.push_back(z1);
    std::sort(stops.begin(), stops.end());

    State<N> y = y0, k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
    double z = z0;
    double h = (z1 - z0) * 1e-3;
    const double hmin = std::abs(z1 - z0) * 1e-14;
    rhs(z, y, k1);
    std::size_t next = 0;
    while (next < stops.size() && stops[next] <= z0) ++next;
    while (next < stops.size()) {
        const double target = stops[next];
        bool hit = false;
        if (z + h >= target) {
            h = target - z;
            hit = true;
        }
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a21 * k1[i]);
        rhs(z + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(z + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(z + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(z + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                 a65 * k5[i]);
        rhs(z + h, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(z + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += std::norm(e) / (sc * sc);
        }
        err = std::sqrt(err / N);

        if (err <= 1.0) {
            z = hit ? target : z + h;
            y = ynew;
            k1 = k7;
            ++out.accepted;
            out.error_estimate = std::max(out.error_estimate, err * rtol);
            if (hit) {
                out.z.push_back(z);
                out.y.push_back(y);
                ++next;
            }
            const double fac = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
            h *= fac;
        } else {
            ++out.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (std::abs(h) < hmin) {
                throw StiffnessFailure("dopri5: step size collapsed at z = " + std::to_string(z));
            }
        }
    }
    return out;
}

}  // namespace ode
}  // namespace spk
