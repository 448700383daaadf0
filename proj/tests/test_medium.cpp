#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "speckle/medium.hpp"
#include "speckle/numerics.hpp"

using namespace spk;
constexpr double pi = std::numbers::pi;

TEST_CASE("gaussian covariance values") {
    const auto m = MediumModel::gaussian(1.0, 1.0);
    CHECK(covariance(m, {0, 0}) == 1.0);
    CHECK(covariance(m, {1, 0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(covariance(MediumModel::gaussian(2.0, 3.0), {3, 0}) == doctest::Approx(2.0 * std::exp(-1.0)));
    CHECK(covariance(m, {0.3, -0.7}) == covariance(m, {-0.3, 0.7}));
}

// 2D quadrature of C as the spectral oracle
double chat_by_quadrature(const MediumModel& m, Vec2 k) {
    auto inner = [&](double y) {
        auto f = [&](double x) { return covariance(m, {x, y}) * std::cos(k.x * x + k.y * y); };
        return quad::gauss_kronrod<double>(f, -12.0 * m.lc, 12.0 * m.lc, 1e-13).value;
    };
    return quad::gauss_kronrod<double>(inner, -12.0 * m.lc, 12.0 * m.lc, 1e-12).value;
}

TEST_CASE("spectral covariance matches quadrature") {
    const auto m1 = MediumModel::gaussian(1.0, 1.0);
    const auto m2 = MediumModel::gaussian(1.0, 2.0);
    CHECK(spectral_covariance(m1, {0, 0}) == doctest::Approx(pi).epsilon(1e-12));
    CHECK(spectral_covariance(m2, {0, 0}) == doctest::Approx(4.0 * pi).epsilon(1e-12));
    CHECK(chat_by_quadrature(m1, {0, 0}) == doctest::Approx(pi).epsilon(1e-10));
    CHECK(chat_by_quadrature(m2, {0.4, 0.2}) == doctest::Approx(spectral_covariance(m2, {0.4, 0.2})).epsilon(1e-9));
    CHECK(spectral_covariance(m1, {0.5, -1.5}) == spectral_covariance(m1, {-0.5, 1.5}));
}

TEST_CASE("spectrum integrates to C(0)") {
    const auto m = MediumModel::gaussian(1.7, 0.8);
    // radial integral (2 pi)^-1 int Chat k dk
    auto f = [&](double k) { return spectral_covariance(m, {k, 0.0}) * k; };
    const double v = quad::gauss_kronrod<double>(f, 0.0, 60.0, 1e-13).value / (2.0 * pi);
    CHECK(v == doctest::Approx(1.7).epsilon(1e-8));
}

TEST_CASE("diffusion coefficient from the spectral moment") {
    struct Case { double c0, lc, d; };
    for (const Case c : {Case{1, 1, 4}, Case{1, 2, 1}, Case{3, 1, 12}}) {
        const auto m = MediumModel::gaussian(c.c0, c.lc);
        auto f = [&](double k) { return spectral_covariance(m, {k, 0.0}) * k * k * k; };
        const double oracle = quad::gauss_kronrod<double>(f, 0.0, 80.0 / c.lc, 1e-12).value / (2.0 * pi);
        CHECK(oracle == doctest::Approx(c.d).epsilon(1e-9));
        CHECK(diffusion_coefficient(m) == doctest::Approx(c.d).epsilon(1e-14));
    }
}

TEST_CASE("tabulated family") {
    std::vector<double> k, ch;
    const auto g = MediumModel::gaussian(1.0, 1.0);
    for (int i = 0; i <= 400; ++i) {
        k.push_back(0.05 * i);
        ch.push_back(spectral_covariance(g, {0.05 * i, 0.0}));
    }
    const auto t = MediumModel::tabulated(k, ch, 1.0);
    CHECK(covariance_at_origin(t) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(covariance(t, {1.0, 0.0}) == doctest::Approx(std::exp(-1.0)).epsilon(2e-3));
    CHECK(diffusion_coefficient(t) == doctest::Approx(4.0).epsilon(2e-3));
    ch[3] = -1.0;
    CHECK_THROWS_AS(MediumModel::tabulated(k, ch, 1.0), NonPositiveSpectrum);
    std::vector<double> kk = {0.0, 1.0, 2.0}, heavy = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(diffusion_coefficient(MediumModel::tabulated(kk, heavy, 1.0)), DivergentMoment);
}

TEST_CASE("derived scales") {
    const auto s = derived_scales(MediumModel::gaussian(8.0, 1.0), 1.0, 1.0, 1.0);
    CHECK(s.ell_sca == doctest::Approx(1.0));
    const auto u = derived_scales(MediumModel::gaussian(1.0, 1.0), 1.0, 1.0, 1.0);
    CHECK(u.d_coeff == 4.0);
    CHECK(u.ell_par == 0.75);
    CHECK(u.omega_spec == 0.75);
    CHECK(u.b_c == 1.0);
    CHECK(u.ell_par == 3.0 / u.d_coeff);
}

TEST_CASE("Bochner consistency on the grid") {
    const auto m = MediumModel::gaussian(1.0, 1.0);
    const GridSpec g{64, 16.0};
    CVec buf(g.size());
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            buf[static_cast<std::size_t>(i) * g.n + j] = spectral_covariance(m, {g.wavenumber(j), g.wavenumber(i)});
    fft::backward(buf.data(), g.n);
    const double norm = 1.0 / (g.extent * g.extent);
    for (int i = 0; i <= 12; ++i) {  // lags up to 3 lc along x and diagonally
        const double x = i * g.spacing();
        CHECK(std::abs(buf[i].real() * norm - covariance(m, {x, 0.0})) <= 1e-6 * covariance(m, {x, 0.0}));
        const std::size_t d = static_cast<std::size_t>(i / 2) * g.n + i / 2;
        const double xd = (i / 2) * g.spacing();
        CHECK(std::abs(buf[d].real() * norm - covariance(m, {xd, xd})) <= 1e-6 * covariance(m, {xd, xd}));
    }
}

TEST_CASE("screen preconditions and determinism") {
    const auto m = MediumModel::gaussian(1.0, 1.0);
    CHECK_THROWS_AS(make_screen_filter(m, GridSpec{32, 32.0}, 0.1), GridTooCoarse);
    CHECK_THROWS_AS(make_screen_filter(m, GridSpec{32, 4.0}, 0.1), GridTooCoarse);
    const GridSpec g{32, 16.0};
    const auto zero = synthesize_screen(m, g, 0.0, {1, 0}, 0);
    for (double v : zero.values) CHECK(v == 0.0);
    const auto a = synthesize_screen(m, g, 0.1, {42, 3}, 5);
    const auto b = synthesize_screen(m, g, 0.1, {42, 3}, 5);
    const auto c = synthesize_screen(m, g, 0.1, {42, 4}, 5);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
}

TEST_CASE("screen covariance over 1e4 screens") {
    const auto m = MediumModel::gaussian(1.0, 1.0);
    const GridSpec g{32, 16.0};
    const double dz = 0.1;
    const auto filter = make_screen_filter(m, g, dz);
    const int lags[] = {0, 1, 2, 4};  // 0, lc/2, lc, 2 lc at h = lc/2
    std::vector<double> s(4, 0.0), s2(4, 0.0), mean_acc(1, 0.0);
    const int screens = 10000;
    for (int p = 0; p < screens / 2; ++p) {
        const auto pair = synthesize_screen_pair(filter, {2024, 0}, p);
        for (const auto& ps : pair) {
            for (int l = 0; l < 4; ++l) {
                double acc = 0.0;
                for (int i = 0; i < g.n; ++i)
                    for (int j = 0; j < g.n; ++j)
                        acc += ps.values[static_cast<std::size_t>(i) * g.n + j] *
                               ps.values[static_cast<std::size_t>(i) * g.n + (j + lags[l]) % g.n];
                acc /= static_cast<double>(g.size());
                s[l] += acc;
                s2[l] += acc * acc;
            }
            double mean = 0.0;
            for (double v : ps.values) mean += v;
            mean_acc[0] += mean / static_cast<double>(g.size());
        }
    }
    for (int l = 0; l < 4; ++l) {
        const double mu = s[l] / screens;
        const double se = std::sqrt((s2[l] / screens - mu * mu) / screens);
        const double target = dz * covariance(m, {lags[l] * g.spacing(), 0.0});
        CHECK(std::abs(mu - target) <= 4.0 * se);
    }
    CHECK(std::abs(mean_acc[0] / screens) < 2e-3);
}
