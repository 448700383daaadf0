#include "speckle/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "speckle/numerics.hpp"
#include "speckle/oracle.hpp"

namespace spk {

namespace {

constexpr double pi = std::numbers::pi;
const cplx I(0.0, 1.0);
const cplx em4 = std::polar(1.0, -pi / 4.0);  // e^{-i pi/4}
const cplx ep4 = std::polar(1.0, pi / 4.0);

// beyond this the integrand of R(s) is below 1e-22
constexpr double r_cutoff = 80.0;

cplx log1p_c(cplx x) {
    const double re = 0.5 * std::log1p(2.0 * x.real() + std::norm(x));
    return {re, std::atan2(x.imag(), 1.0 + x.real())};
}

struct Hyper {
    cplx log_den;  // log(cosh u + t0 sinh u)
    cplx w;        // (t0 + tanh u) / (1 + t0 tanh u)
    cplx n;        // u w - 1 + 1/(cosh u + t0 sinh u)
    cplx tail;     // n - (u - 1), exponentially small for large |u|
};

Hyper hyper(cplx u, cplx t0) {
    Hyper h;
    if (std::abs(u) <= 1.0) {
        const cplx ch = std::cosh(u), sh = std::sinh(u);
        const cplx half = std::sinh(0.5 * u);
        const cplx den = ch + t0 * sh;
        h.log_den = log1p_c(2.0 * half * half + t0 * sh);
        h.w = (t0 * ch + sh) / den;
        // cancellation-free numerator of n = P(u) / den
        const cplx u2 = u * u;
        cplx pe(0.0), po(0.0);
        cplx term = 1.0;  // u^{2m} / (2m)!
        for (int m = 1; m <= 40; ++m) {
            term *= u2 / (double((2 * m - 1) * (2 * m)));
            const cplx te = term * double(2 * m - 1);
            const cplx to = term * u * (double(2 * m) / double(2 * m + 1));
            pe += te;
            po += to;
            if (std::abs(te) + std::abs(to) < 1e-19 * (std::abs(pe) + std::abs(po))) break;
        }
        h.n = (pe + t0 * po) / den;
        h.tail = h.n - (u - 1.0);
        return h;
    }
    const cplx e = std::exp(-2.0 * u);
    const cplx q = (1.0 + t0) + (1.0 - t0) * e;
    h.log_den = u + std::log(0.5 * q);
    h.w = (t0 * (1.0 + e) + (1.0 - e)) / q;
    const cplx inv_den = 2.0 * std::exp(-u) / q;
    h.n = u * h.w - 1.0 + inv_den;
    h.tail = (2.0 * u * e * (t0 - 1.0) + 2.0 * std::exp(-u)) / q;
    return h;
}

cplx n_of(double s, cplx t0) { return hyper(em4 * s, t0).n; }

cplx psi_d(double s, cplx t0) {
    if (s < 2.0) {
        auto f = [&](double t) {
            const cplx v = n_of(s * t, t0);
            return v * v;
        };
        const double scale = std::pow(s, 4) * (1.0 + std::norm(t0));
        auto r = quad::gauss_kronrod<cplx>(f, 0.0, 1.0, 1e-16 * scale, 1e-13);
        return 1.0 - 3.0 * I / (s * s) * r.value;
    }
    // n^2 - (u - 1)^2 = tail (2 (u - 1) + tail)
    auto g = [&](double sp) {
        const cplx u = em4 * sp;
        const cplx t = hyper(u, t0).tail;
        return t * (2.0 * (u - 1.0) + t);
    };
    const double top = std::min(s, r_cutoff);
    cplx rr = quad::gauss_kronrod<cplx>(g, 0.0, std::min(top, 2.0), 1e-14, 1e-13).value;
    if (top > 2.0) rr += quad::gauss_kronrod<cplx>(g, 2.0, top, 1e-14, 1e-13).value;
    return 3.0 * ep4 / s - 3.0 * I / (s * s) - 3.0 * I * rr / (s * s * s);
}

double beta_of(const TrParams& p) {
    return p.omega0 * p.omega0 * p.d_coeff / (16.0 * p.c_speed * p.c_speed);
}

double kz(double z, const TrParams& p) {
    return std::pow(2.0 * pi, 4) *
           std::exp(-p.omega0 * p.omega0 * p.c_origin * z / (4.0 * p.c_speed * p.c_speed));
}

void conj_all(MomentCoefficients& m) {
    m.a = std::conj(m.a);
    m.b = std::conj(m.b);
    m.c = std::conj(m.c);
    m.d = std::conj(m.d);
    m.e = std::conj(m.e);
    m.f = std::conj(m.f);
    m.g = std::conj(m.g);
    m.h = std::conj(m.h);
}

}  // namespace

PsiValues psi(double s, cplx t0) {
    if (!(s >= 0.0)) throw std::invalid_argument("psi: s must be >= 0");
    if (s == 0.0) {
        if (t0 != cplx(0.0)) throw std::invalid_argument("psi: s = 0 requires t0 = 0");
        return {0.0, 1.0, 1.0, 1.0};
    }
    const cplx u = em4 * s;
    const Hyper h = hyper(u, t0);
    PsiValues v;
    v.a = h.log_den;
    v.b = h.w / u;
    v.c = 2.0 * I * h.n / (s * s);
    v.d = psi_d(s, t0);
    return v;
}

cplx t0_of(double omega, const TrParams& p) {
    return 2.0 * em4 / (p.omega0 * p.omega0 * p.rho0 * p.rho0) *
           std::sqrt(p.c_speed * p.c_speed * p.c_speed * std::abs(omega) / p.d_coeff);
}

double s_of(double z, double omega, const TrParams& p) {
    return std::sqrt(p.d_coeff * std::abs(omega) / (4.0 * p.c_speed)) * z;
}

MomentCoefficients coefficients(double z, double omega, const TrParams& p, const RegimeSpec& r) {
    if (z < 0.0) throw std::invalid_argument("coefficients: z must be >= 0");
    const bool scale = r.variant == Variant::ElementScaleMedium;
    const double b_init = scale ? 1.0 / (4.0 * p.rho0 * p.rho0) : 0.0;
    const double beta = beta_of(p);
    const double cw = p.c_speed / p.omega0;
    MomentCoefficients m;
    m.k = kz(z, p);
    if (z == 0.0) {
        m.a = m.c = m.d = m.h = m.f = 0.0;
        m.b = m.g = b_init;
        m.e = p.r0 * p.r0 / 4.0;
        return m;
    }
    const double pb = beta * z;
    const double pc = p.omega0 * p.d_coeff * z * z / (16.0 * p.c_speed);
    const double pd = p.d_coeff * z * z * z / 48.0;
    if (omega == 0.0) {
        m.a = 0.0;
        m.b = pb + b_init;
        m.c = pc;
        m.d = pd;
        m.e = p.r0 * p.r0 / 4.0 + m.d - cw * z * m.c + cw * cw * z * z * m.b;
        m.f = m.c - 2.0 * cw * z * m.b;
        m.h = cw * cw * z * z * m.b - cw * z * m.c + m.d;
    } else {
        const double s = s_of(z, omega, p);
        const cplx t0 = scale ? t0_of(omega, p) : cplx(0.0);
        const PsiValues v = psi(s, t0);
        m.a = v.a;
        m.b = pb * v.b;
        m.c = pc * v.c;
        m.d = pd * v.d;
        m.h = pd * (v.d - 3.0 * v.c + 3.0 * v.b);
        m.e = p.r0 * p.r0 / 4.0 + m.h;
        m.f = pc * (v.c - 2.0 * v.b);
        if (omega < 0.0) {
            m.g = m.b - m.f * m.f / (4.0 * m.e);
            conj_all(m);
            return m;
        }
    }
    m.g = m.b - m.f * m.f / (4.0 * m.e);
    return m;
}

MomentCoefficients coefficients_small_offset(double z, double omega, const TrParams& p) {
    const double x = p.d_coeff * omega * z * z / p.c_speed;
    MomentCoefficients m;
    m.k = kz(z, p);
    m.a = -I * x / 8.0 + x * x / 192.0;
    m.b = beta_of(p) * z * (1.0 + I * x / 12.0 - x * x / 120.0);
    m.c = p.omega0 * p.d_coeff * z * z / (16.0 * p.c_speed) * (1.0 + I * x / 16.0 - 7.0 * x * x / 1152.0);
    m.d = p.d_coeff * z * z * z / 48.0 * (1.0 + 3.0 * I * x / 80.0 - 3.0 * x * x / 896.0);
    return m;
}

MomentCoefficients coefficients_large_offset(double z, double omega, const TrParams& p) {
    const double w = std::abs(omega);
    const double c = p.c_speed, d = p.d_coeff, w0 = p.omega0;
    MomentCoefficients m;
    m.k = kz(z, p);
    m.a = em4 * std::sqrt(d * w / (4.0 * c)) * z - std::log(2.0);
    m.b = ep4 * std::sqrt(std::pow(w0, 4) * d / (64.0 * c * c * c * w));
    m.c = ep4 * std::sqrt(w0 * w0 * d / (16.0 * c * w)) * z - I * w0 / (2.0 * w);
    m.d = ep4 * std::sqrt(c * d / (64.0 * w)) * z * z - I * c * z / (4.0 * w) -
          std::polar(1.0, 3.0 * pi / 4.0) * std::sqrt(c * c * c / (4.0 * d * w * w * w));
    if (omega < 0.0) conj_all(m);
    return m;
}

cplx mean_refocused_harmonic(Vec2 x_off, double omega, const TrParams& p, const RegimeSpec& r) {
    if (!r.strongly_scattering)
        throw RegimeInvalid("mean_refocused_harmonic needs the strongly scattering regime; "
                            "use mean_refocused_weak");
    const MomentCoefficients m = coefficients(p.big_l, omega, p, r);
    return std::exp(-m.a) * p.r0 * p.r0 / (4.0 * m.e) * std::exp(-m.g * norm2(x_off));
}

cplx mean_refocused_small_offset(Vec2 x_off, const TrParams& p, const RegimeSpec& r) {
    const double ar = p.a_r();
    const double bl = beta_of(p) * p.big_l;
    if (r.variant == Variant::LargeElements)
        return 1.0 / (1.0 + ar) * std::exp(-bl * (1.0 + ar / 4.0) / (1.0 + ar) * norm2(x_off));
    const double q = std::pow(p.c_speed * p.big_l / (p.omega0 * p.rho0 * p.r0), 2);
    const double den = 1.0 + ar + q;
    const double ex = bl * (1.0 + ar / 4.0) + (1.0 + ar) / (4.0 * p.rho0 * p.rho0);
    return 1.0 / den * std::exp(-ex / den * norm2(x_off));
}

cplx mean_refocused_large_offset(Vec2 x_off, double omega, const TrParams& p) {
    const double w = std::abs(omega);
    const double c = p.c_speed, l = p.big_l;
    const cplx v = 2.0 * std::exp(-em4 * std::sqrt(p.d_coeff * w / (4.0 * c)) * l) /
                   (1.0 + I * l * c / (w * p.r0 * p.r0)) *
                   std::exp(-ep4 * p.omega0 * p.omega0 / (8.0 * c * c) *
                            std::sqrt(p.d_coeff * c / w) * norm2(x_off));
    return omega < 0.0 ? std::conj(v) : v;
}

double mean_radius_squared(const TrParams& p, const RegimeSpec& r) {
    const double ar = p.a_r();
    const double bl2 = 2.0 * beta_of(p) * p.big_l * (1.0 + ar / 4.0);
    if (r.variant == Variant::LargeElements) return (1.0 + ar) / bl2;
    const double q = std::pow(p.c_speed * p.big_l / (p.omega0 * p.rho0 * p.r0), 2);
    return (1.0 + ar + q) / (bl2 + (1.0 + ar) / (2.0 * p.rho0 * p.rho0));
}

cplx mean_refocused_weak(Vec2 x_off, Vec2 y_off, double omega, const TrParams& p,
                         const RegimeSpec& r) {
    if (r.variant == Variant::LargeElements) return std::exp(-norm2(y_off) / (p.r0 * p.r0));
    const double c = p.c_speed, l = p.big_l, w0 = p.omega0;
    const double tau = l * c / w0;
    const cplx alpha = p.rho0 * p.rho0 - I * omega * c * l / (w0 * w0);
    const cplx q = 1.0 + std::pow(c * l / (w0 * p.rho0 * p.r0), 2) -
                   I * omega * c * l / (w0 * w0 * p.rho0 * p.rho0);
    const double xy = x_off.x * y_off.x + x_off.y * y_off.y;
    const cplx ex = (p.r0 * p.r0 * norm2(x_off) / 2.0 - 2.0 * I * tau * xy + 2.0 * alpha * norm2(y_off)) /
                    (2.0 * p.rho0 * p.rho0 * p.r0 * p.r0 * q);
    return std::exp(-ex) / q;
}

double variance_harmonic(const TrParams& p) { return 1.0 / ((1.0 + p.a_r()) * (1.0 + p.a_rho())); }

SnrBranch snr_branch(const TrParams& p) {
    const double dl = p.d_coeff * std::pow(p.big_l, 3) / 12.0;
    if (p.rho0 * p.rho0 > dl) return SnrBranch::LargeElements;
    if (p.r0 * p.r0 > dl) return SnrBranch::Intermediate;
    return SnrBranch::ManyElements;
}

std::string SnrReport::describe() const {
    std::ostringstream os;
    os << "branch=" << static_cast<int>(branch) << " band=";
    switch (band) {
        case BandRegime::Narrow: os << "narrow"; break;
        case BandRegime::Intermediate: os << "intermediate"; break;
        case BandRegime::Wide: os << "wide"; break;
        case BandRegime::Harmonic: os << "harmonic"; break;
    }
    os << " DL3/12r0^2=" << a_r << " DL3/12rho0^2=" << a_rho << " beta=" << beta;
    return os.str();
}

SnrReport snr_harmonic(double omega, const TrParams& p) {
    const RegimeSpec le{Variant::LargeElements, true};
    const MomentCoefficients m = coefficients(p.big_l, omega, p, le);
    SnrReport rep;
    rep.a_r = p.a_r();
    rep.a_rho = p.a_rho();
    rep.branch = snr_branch(p);
    rep.band = BandRegime::Harmonic;
    rep.beta = p.d_coeff * std::abs(omega) * p.big_l * p.big_l / p.c_speed;
    rep.snr = std::exp(-2.0 * m.a.real()) * std::pow(p.r0, 4) / (16.0 * std::norm(m.e)) *
              (1.0 + rep.a_r) * (1.0 + rep.a_rho);
    if (rep.beta < 1.0) {
        rep.asymptote = (1.0 + rep.a_rho) / (1.0 + rep.a_r);
    } else {
        const double lc = p.big_l * p.c_speed / (omega * p.r0 * p.r0);
        rep.asymptote = 2.0 * std::exp(-std::sqrt(p.d_coeff * std::abs(omega) / (2.0 * p.c_speed)) * p.big_l) /
                        (1.0 + lc * lc) * (1.0 + rep.a_r) * (1.0 + rep.a_rho);
    }
    return rep;
}

std::pair<double, double> hat_a_hat_h(double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("hat_a_hat_h: s must be >= 0");
    const double y = std::sqrt(2.0 * s);
    const double ey = std::exp(-y);
    const double a = 4.0 * ey / (2.0 * std::cos(y) * ey + 1.0 + ey * ey);
    if (s == 0.0) return {a, 1.0};
    const PsiValues v = psi(std::sqrt(s));
    return {a, (v.d - 3.0 * v.c + 3.0 * v.b).real()};
}

SnrReport snr_broadband(double bandwidth, const TrParams& p) {
    if (!(bandwidth >= 0.0)) throw std::invalid_argument("snr_broadband: B must be >= 0");
    SnrReport rep;
    rep.a_r = p.a_r();
    rep.a_rho = p.a_rho();
    rep.branch = snr_branch(p);
    const double beta = p.d_coeff * bandwidth * p.big_l * p.big_l / (4.0 * p.c_speed);
    rep.beta = beta;
    const double ar = rep.a_r, arho = rep.a_rho;
    auto f = [&](double s) {
        const auto [ah, hh] = hat_a_hat_h(beta * s);
        return ah * (1.0 + ar) * (1.0 + ar) * std::exp(-s * s) / ((1.0 + arho * hh) * (1.0 + ar * hh));
    };
    // e^{-s^2} is below 1e-21 past s = 7; split where Ahat(beta s) changes scale
    std::vector<double> cuts = {0.0};
    if (beta > 0.0)
        for (double c : {0.1, 1.0, 10.0, 100.0})
            if (c / beta < 7.0 && c / beta > cuts.back()) cuts.push_back(c / beta);
    cuts.push_back(7.0);
    double integral = 0.0;
    const double tol = 1e-8 / static_cast<double>(cuts.size() - 1);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        integral += quad::gauss_kronrod<double>(f, cuts[i], cuts[i + 1], tol, 1e-12).value;
    integral *= 2.0 / std::sqrt(pi);
    rep.snr = 1.0 / integral;

    if (beta < 0.1) {
        rep.band = BandRegime::Narrow;
        rep.asymptote = (1.0 + arho) / (1.0 + ar);
    } else if (beta > 10.0) {
        rep.band = BandRegime::Wide;
        const auto k = oracle::quadrature_constants();
        switch (rep.branch) {
            case SnrBranch::LargeElements: rep.asymptote = beta / k[0]; break;
            case SnrBranch::Intermediate: rep.asymptote = beta / k[1] * arho; break;
            case SnrBranch::ManyElements: rep.asymptote = beta / k[2] * (p.r0 * p.r0) / (p.rho0 * p.rho0); break;
        }
    } else {
        rep.band = BandRegime::Intermediate;
        rep.asymptote = rep.snr;
    }
    return rep;
}

cplx mean_refocused_broadband(double t, Vec2 x_off, double bandwidth, const TrParams& p,
                              const RegimeSpec& r) {
    if (!r.strongly_scattering)
        throw RegimeInvalid("mean_refocused_broadband needs the strongly scattering regime");
    return mean_refocused_small_offset(x_off, p, r) * std::exp(-bandwidth * bandwidth * t * t / 2.0);
}

MemoryBandwidth memory_bandwidth(const TrParams& p) {
    const double u = p.c_speed / (p.d_coeff * p.big_l * p.big_l);
    return {3.0 * u, 4.0 * u, 8.0 * u};
}

}  // namespace spk
