#include "speckle/medium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "speckle/numerics.hpp"
#include "speckle/rng.hpp"

namespace spk {

namespace {
constexpr double pi = std::numbers::pi;

double interp_table(const MediumModel& m, double k) {
    const auto& ks = m.table_k;
    const auto& cs = m.table_chat;
    if (k >= ks.back()) return 0.0;
    const auto it = std::upper_bound(ks.begin(), ks.end(), k);
    const std::size_t j = static_cast<std::size_t>(it - ks.begin());
    const double t = (k - ks[j - 1]) / (ks[j] - ks[j - 1]);
    return (1.0 - t) * cs[j - 1] + t * cs[j];
}

// (2 pi)^-1 int Chat(k) k^p J0(k r) dk over the table, piecewise
double radial_moment(const MediumModel& m, int p, double r) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < m.table_k.size(); ++j) {
        auto f = [&](double k) {
            const double j0 = r == 0.0 ? 1.0 : std::cyl_bessel_j(0.0, k * r);
            return interp_table(m, k) * std::pow(k, p) * j0;
        };
        acc += quad::gauss_kronrod<double>(f, m.table_k[j], m.table_k[j + 1], 1e-14, 1e-12).value;
    }
    return acc / (2.0 * pi);
}
}  // namespace

double GridSpec::wavenumber(int i) const {
    const int m = i < n / 2 ? i : i - n;
    return 2.0 * pi * m / extent;
}

void GridSpec::validate() const {
    if (n < 32 || (n & (n - 1)) != 0)
        throw std::invalid_argument("grid n must be a power of two >= 32, got " + std::to_string(n));
    if (!(extent > 0.0)) throw std::invalid_argument("grid extent must be > 0");
}

MediumModel MediumModel::gaussian(double c0, double lc) {
    MediumModel m;
    m.family = CovarianceFamily::Gaussian;
    m.c0 = c0;
    m.lc = lc;
    m.validate();
    return m;
}

MediumModel MediumModel::tabulated(std::vector<double> k, std::vector<double> chat, double lc) {
    MediumModel m;
    m.family = CovarianceFamily::Tabulated;
    m.table_k = std::move(k);
    m.table_chat = std::move(chat);
    m.lc = lc;
    m.validate();
    m.c0 = radial_moment(m, 1, 0.0);
    return m;
}

void MediumModel::validate() const {
    if (!(lc > 0.0)) throw std::invalid_argument("medium lc must be > 0");
    if (family == CovarianceFamily::Gaussian) {
        if (!(c0 >= 0.0)) throw std::invalid_argument("medium C0 must be >= 0");
        return;
    }
    if (table_k.size() < 2 || table_k.size() != table_chat.size())
        throw std::invalid_argument("tabulated spectrum needs >= 2 matching (k, Chat) samples");
    if (table_k.front() != 0.0) throw std::invalid_argument("tabulated spectrum must start at k = 0");
    for (std::size_t i = 1; i < table_k.size(); ++i)
        if (!(table_k[i] > table_k[i - 1]))
            throw std::invalid_argument("tabulated k must be strictly increasing");
    for (std::size_t i = 0; i < table_chat.size(); ++i)
        if (table_chat[i] < 0.0)
            throw NonPositiveSpectrum("tabulated spectrum is negative at k = " +
                                      std::to_string(table_k[i]));
}

double covariance(const MediumModel& m, Vec2 x) {
    if (m.family == CovarianceFamily::Gaussian) return m.c0 * std::exp(-norm2(x) / (m.lc * m.lc));
    return radial_moment(m, 1, std::sqrt(norm2(x)));
}

double spectral_covariance(const MediumModel& m, Vec2 k) {
    if (m.family == CovarianceFamily::Gaussian)
        return m.c0 * pi * m.lc * m.lc * std::exp(-m.lc * m.lc * norm2(k) / 4.0);
    return interp_table(m, std::sqrt(norm2(k)));
}

double covariance_at_origin(const MediumModel& m) {
    return m.family == CovarianceFamily::Gaussian ? m.c0 : radial_moment(m, 1, 0.0);
}

double diffusion_coefficient(const MediumModel& m) {
    if (m.family == CovarianceFamily::Gaussian) return 4.0 * m.c0 / (m.lc * m.lc);
    // the k^3 integrand must have died out before the table ends
    const std::size_t last = m.table_k.size() - 1;
    double peak = 0.0;
    for (std::size_t i = 0; i <= last; ++i)
        peak = std::max(peak, m.table_chat[i] * std::pow(m.table_k[i], 3));
    const double tail = m.table_chat[last - 1] * std::pow(m.table_k[last - 1], 3);
    if (peak == 0.0 || tail > 1e-6 * peak)
        throw DivergentMoment("tabulated spectrum does not decay fast enough for |k|^2 moment");
    return radial_moment(m, 3, 0.0);
}

ScatteringScales derived_scales(const MediumModel& m, double omega0, double c_speed, double big_l) {
    if (!(omega0 > 0.0 && c_speed > 0.0 && big_l > 0.0))
        throw std::invalid_argument("derived_scales: omega0, c0 and L must be > 0");
    ScatteringScales s;
    const double c00 = covariance_at_origin(m);
    s.ell_sca = 8.0 * c_speed * c_speed / (omega0 * omega0 * c00);
    s.d_coeff = diffusion_coefficient(m);
    s.ell_par = 3.0 / s.d_coeff;
    s.xc_of_l = std::sqrt(3.0) * c_speed / (std::sqrt(s.d_coeff) * omega0 * std::sqrt(big_l));
    s.omega_spec = 3.0 * c_speed / (s.d_coeff * big_l * big_l);
    s.b_c = 4.0 * c_speed / (s.d_coeff * big_l * big_l);
    const double lambda = 2.0 * pi * c_speed / omega0;
    s.paraxial_flag = m.lc >= lambda && s.ell_par < s.ell_sca;
    return s;
}

ScreenFilter make_screen_filter(const MediumModel& m, const GridSpec& grid, double dz) {
    grid.validate();
    if (grid.spacing() > m.lc / 2.0)
        throw GridTooCoarse("grid spacing " + std::to_string(grid.spacing()) + " exceeds lc/2 = " +
                            std::to_string(m.lc / 2.0));
    if (grid.extent < 8.0 * m.lc)
        throw GridTooCoarse("grid extent " + std::to_string(grid.extent) + " is below 8 lc");
    if (dz < 0.0) throw std::invalid_argument("screen dz must be >= 0");
    ScreenFilter f;
    f.grid = grid;
    f.dz = dz;
    const int n = grid.n;
    f.amp.assign(grid.size(), 0.0);
    const double peak = spectral_covariance(m, {0.0, 0.0});
    for (int i = 0; i < n; ++i) {
        if (i == n / 2) continue;  // unpaired Nyquist modes stay empty so Re/Im decouple
        for (int j = 0; j < n; ++j) {
            if (j == n / 2) continue;
            const double ch = spectral_covariance(m, {grid.wavenumber(j), grid.wavenumber(i)});
            if (ch <= 1e-20 * peak || dz == 0.0) continue;
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            f.amp[idx] = std::sqrt(dz * ch) / grid.extent;
            f.active.push_back(static_cast<std::uint32_t>(idx));
        }
    }
    return f;
}

std::array<PhaseScreen, 2> synthesize_screen_pair(const ScreenFilter& f, const ScreenStream& stream,
                                                  std::uint64_t pair) {
    const auto key = rng::key_from_seed(stream.master_seed);
    CVec buf(f.grid.size(), cplx(0.0, 0.0));
    const double inv_sqrt2 = std::sqrt(0.5);
    for (std::uint32_t idx : f.active) {
        const rng::Counter ctr = {idx, static_cast<std::uint32_t>(pair),
                                  static_cast<std::uint32_t>(stream.realization),
                                  static_cast<std::uint32_t>(stream.realization >> 32)};
        const auto g = rng::gaussian_pair(ctr, key);
        buf[idx] = f.amp[idx] * inv_sqrt2 * cplx(g[0], g[1]);
    }
    fft::backward(buf.data(), f.grid.n);
    std::array<PhaseScreen, 2> out;
    const double s2 = std::sqrt(2.0);
    for (auto& ps : out) {
        ps.dz = f.dz;
        ps.grid = f.grid;
        ps.values.resize(f.grid.size());
    }
    // fft index 0 is x = 0; shift so that grid index n/2 holds the origin
    const int n = f.grid.n;
    for (int i = 0; i < n; ++i) {
        const int si = (i + n / 2) % n;
        for (int j = 0; j < n; ++j) {
            const int sj = (j + n / 2) % n;
            const cplx v = buf[static_cast<std::size_t>(i) * n + j];
            const std::size_t o = static_cast<std::size_t>(si) * n + sj;
            out[0].values[o] = s2 * v.real();
            out[1].values[o] = s2 * v.imag();
        }
    }
    return out;
}

std::array<PhaseScreen, 2> synthesize_screen_pair(const MediumModel& m, const GridSpec& grid,
                                                  double dz, const ScreenStream& stream,
                                                  std::uint64_t pair) {
    return synthesize_screen_pair(make_screen_filter(m, grid, dz), stream, pair);
}

PhaseScreen synthesize_screen(const MediumModel& m, const GridSpec& grid, double dz,
                              const ScreenStream& stream, std::uint64_t slab) {
    auto pair = synthesize_screen_pair(m, grid, dz, stream, slab / 2);
    return std::move(pair[slab % 2]);
}

}  // namespace spk
