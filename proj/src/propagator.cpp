#include "speckle/propagator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "speckle/kernels.hpp"

namespace spk {

namespace {
constexpr double pi = 3.14159265358979323846;

double wrap_k2(const GridSpec& g, int i, int j) {
    const double kx = g.wavenumber(j), ky = g.wavenumber(i);
    return kx * kx + ky * ky;
}

void fill_diffraction(CVec& out, const GridSpec& g, double k, double dz) {
    const int n = g.n;
    out.resize(g.size());
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double ph = -wrap_k2(g, i, j) * dz / (2.0 * k);
            out[static_cast<std::size_t>(i) * n + j] = norm * cplx(std::cos(ph), std::sin(ph));
        }
}
}  // namespace

ComplexField::ComplexField(const GridSpec& g, double wavenumber, double depth)
    : grid(g), values(g.size(), cplx(0.0, 0.0)), k(wavenumber), z(depth) {}

double ComplexField::l2_norm_sq() const {
    const double h = grid.spacing();
    return kernels::norm2(values.data(), values.size()) * h * h;
}

double ComplexField::l2_norm() const { return std::sqrt(l2_norm_sq()); }

bool ComplexField::finite() const {
    for (const auto& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

double PropagationPlan::dz_cap(const MediumModel& m, const GridSpec& g, double omega0,
                               double c_speed) {
    const double c0 = covariance_at_origin(m);
    const double ell_sca = c0 > 0.0 ? 8.0 * c_speed * c_speed / (omega0 * omega0 * c0)
                                    : std::numeric_limits<double>::infinity();
    const double h = g.spacing();
    const double diff = omega0 * h * h * g.n / (4.0 * pi * c_speed);
    return std::min(ell_sca / 10.0, diff);
}

PropagationPlan PropagationPlan::for_distance(double big_l, const MediumModel& m,
                                              const GridSpec& g, double omega0, double c_speed) {
    PropagationPlan p;
    p.big_l = big_l;
    const double cap = dz_cap(m, g, omega0, c_speed);
    p.n_slabs = std::max(1, static_cast<int>(std::ceil(big_l / cap * (1.0 - 1e-12))));
    return p;
}

void PropagationPlan::validate(const MediumModel& m, const GridSpec& g, double omega0,
                               double c_speed) const {
    if (!(big_l > 0.0) || n_slabs < 1)
        throw std::invalid_argument("propagation plan needs L > 0 and n_slabs >= 1");
    const double cap = dz_cap(m, g, omega0, c_speed);
    if (dz() > cap * (1.0 + 1e-12))
        throw std::invalid_argument("slab dz = " + std::to_string(dz()) + " exceeds cap " +
                                    std::to_string(cap) + "; need n_slabs >= " +
                                    std::to_string(static_cast<int>(std::ceil(big_l / cap))));
}

void SourceSpec::validate(const GridSpec& g) const {
    if (!(sigma_src > 0.0)) throw std::invalid_argument("source radius must be > 0");
    if (!spectral && sigma_src < 2.0 * g.spacing() * (1.0 - 1e-12))
        throw std::invalid_argument("source radius " + std::to_string(sigma_src) +
                                    " below two grid spacings");
}

ComplexField make_source(const GridSpec& g, const SourceSpec& s, double k) {
    g.validate();
    s.validate(g);
    ComplexField f(g, k);
    const int n = g.n;
    const double norm = s.amplitude / (2.0 * pi * s.sigma_src * s.sigma_src);
    if (!s.spectral) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double dx = g.coord(j) - s.center.x, dy = g.coord(i) - s.center.y;
                f.at(i, j) = norm * std::exp(-(dx * dx + dy * dy) / (2.0 * s.sigma_src * s.sigma_src));
            }
        return f;
    }
    // samples of the band-limited Gaussian; index 0 sits at x = -extent/2
    const double e2 = g.extent * g.extent;
    for (int i = 0; i < n; ++i) {
        if (i == n / 2) continue;
        for (int j = 0; j < n; ++j) {
            if (j == n / 2) continue;
            const double kx = g.wavenumber(j), ky = g.wavenumber(i);
            const double mag = s.amplitude * std::exp(-0.5 * (kx * kx + ky * ky) * s.sigma_src * s.sigma_src) / e2;
            const double ph = -(kx * (s.center.x + 0.5 * g.extent) + ky * (s.center.y + 0.5 * g.extent));
            f.at(i, j) = mag * cplx(std::cos(ph), std::sin(ph));
        }
    }
    fft::backward(f.values.data(), n);
    return f;
}

ScreenSet ScreenSet::generate(const ScreenFilter& f, const ScreenStream& s, int n_slabs) {
    ScreenSet out;
    out.stream = s;
    out.grid = f.grid;
    out.dz = f.dz;
    out.slabs.reserve(n_slabs);
    for (int p = 0; 2 * p < n_slabs; ++p) {
        auto pair = synthesize_screen_pair(f, s, static_cast<std::uint64_t>(p));
        out.slabs.push_back(std::move(pair[0].values));
        if (2 * p + 1 < n_slabs) out.slabs.push_back(std::move(pair[1].values));
    }
    return out;
}

PhaseScreen ScreenSet::screen(int slab) const {
    PhaseScreen p;
    p.values = slabs.at(slab);
    p.dz = dz;
    p.grid = grid;
    return p;
}

Stepper::Stepper(const GridSpec& g, double k, double dz, double absorber_fraction)
    : grid_(g), k_(k), dz_(dz) {
    g.validate();
    if (!(k > 0.0)) throw std::invalid_argument("wavenumber must be > 0");
    fill_diffraction(half_, g, k, 0.5 * dz);
    fill_diffraction(full_, g, k, dz);
    if (absorber_fraction > 0.0) {
        const int n = g.n;
        const double w = absorber_fraction * g.extent;
        std::vector<double> prof(n);
        for (int i = 0; i < n; ++i) {
            const double edge = 0.5 * g.extent - std::abs(g.coord(i) + 0.5 * g.spacing());
            const double t = std::clamp((w - edge) / w, 0.0, 1.0);
            prof[i] = t * t;
        }
        absorber_.resize(g.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                absorber_[static_cast<std::size_t>(i) * n + j] = std::exp(-0.5 * (prof[i] + prof[j]));
    }
}

void Stepper::apply_kernel(ComplexField& f, const CVec& kernel) {
    fft::forward(f.values.data(), grid_.n);
    kernels::cmul(f.values.data(), kernel.data(), kernel.size());
    fft::backward(f.values.data(), grid_.n);
}

void Stepper::absorb(ComplexField& f) const {
    if (absorber_.empty()) return;
    for (std::size_t i = 0; i < absorber_.size(); ++i) f.values[i] *= absorber_[i];
}

void Stepper::diffract(ComplexField& f, double dz) {
    CVec kern;
    fill_diffraction(kern, grid_, k_, dz);
    apply_kernel(f, kern);
    f.z += dz;
}

void Stepper::step(ComplexField& f, const double* screen) {
    apply_kernel(f, half_);
    kernels::apply_phase(f.values.data(), screen, 0.5 * k_, f.values.size());
    apply_kernel(f, half_);
    absorb(f);
    f.z += dz_;
}

void Stepper::step(ComplexField& f, const PhaseScreen& s) {
    if (!(f.grid == grid_) || !(s.grid == grid_) || f.values.size() != grid_.size() ||
        s.values.size() != grid_.size())
        throw GridMismatch("field, screen and stepper grids differ");
    if (std::abs(s.dz - dz_) > 1e-12 * std::max(1.0, dz_))
        throw GridMismatch("screen dz does not match the stepper");
    step(f, s.values.data());
}

void Stepper::run(ComplexField& f, const ScreenSet& screens, const PropagateOptions& opt) {
    if (!(f.grid == grid_) || !(screens.grid == grid_))
        throw GridMismatch("field, screens and stepper grids differ");
    const int ns = static_cast<int>(screens.slabs.size());
    if (ns == 0) return;
    const int every = std::max(1, ns / std::max(1, opt.checkpoints));
    apply_kernel(f, half_);
    for (int s = 0; s < ns; ++s) {
        const int idx = opt.direction == Direction::Forward ? s : ns - 1 - s;
        kernels::apply_phase(f.values.data(), screens.slabs[idx].data(), 0.5 * k_, f.values.size());
        absorb(f);
        if (opt.check_leak && ((s + 1) % every == 0 || s + 1 == ns)) {
            // with an absorber the watched band is the one just inside it
            const double frac =
                absorber_.empty()
                    ? frame_energy_fraction(f, opt.frame_fraction)
                    : frame_energy_fraction(f, opt.frame_fraction + opt.absorber_fraction) -
                          frame_energy_fraction(f, opt.absorber_fraction);
            if (frac > opt.leak_fraction)
                throw BoundaryLeak("energy fraction " + std::to_string(frac) +
                                   " in the outer frame at slab " + std::to_string(s + 1) + "/" +
                                   std::to_string(ns));
        }
        apply_kernel(f, s + 1 == ns ? half_ : full_);
    }
    f.z += ns * dz_;
}

double frame_energy_fraction(const ComplexField& f, double frame_fraction) {
    const int n = f.grid.n;
    const int w = std::max(1, static_cast<int>(std::lround(frame_fraction * n / 2.0)));
    double edge = 0.0, total = 0.0;
    for (int i = 0; i < n; ++i) {
        const bool row_edge = i < w || i >= n - w;
        const cplx* row = f.values.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double a = std::norm(row[j]);
            total += a;
            if (row_edge || j < w || j >= n - w) edge += a;
        }
    }
    return total > 0.0 ? edge / total : 0.0;
}

ComplexField step(const ComplexField& field, const PhaseScreen& screen) {
    if (!(field.grid == screen.grid)) throw GridMismatch("field and screen grids differ");
    ComplexField out = field;
    Stepper st(field.grid, field.k, screen.dz);
    st.step(out, screen);
    return out;
}

ComplexField propagate(ComplexField field, const ScreenSet& screens, const PropagateOptions& opt) {
    Stepper st(field.grid, field.k, screens.dz, opt.absorber_fraction);
    st.run(field, screens, opt);
    return field;
}

ComplexField propagate(const SourceSpec& source, const MediumModel& m, const PropagationPlan& plan,
                       const GridSpec& g, double k, const ScreenStream& realization,
                       const PropagateOptions& opt) {
    // plan caps are stated at the propagation frequency (c0 = 1 units of k)
    plan.validate(m, g, k, 1.0);
    const ScreenFilter filt = make_screen_filter(m, g, plan.dz());
    const ScreenSet screens = ScreenSet::generate(filt, realization, plan.n_slabs);
    return propagate(make_source(g, source, k), screens, opt);
}

ComplexField green_field(Vec2 y, double rho, const MediumModel& m, const PropagationPlan& plan,
                         const GridSpec& g, double k, const ScreenStream& realization,
                         const PropagateOptions& opt) {
    if (rho < 2.0 * g.spacing() * (1.0 - 1e-12))
        throw std::invalid_argument("green_field smoothing radius below two grid spacings");
    SourceSpec s;
    s.center = y;
    s.sigma_src = rho;
    return propagate(s, m, plan, g, k, realization, opt);
}

cplx fresnel_gaussian(Vec2 x, double w, double k, double z) {
    const cplx q(1.0, z / (k * w * w));
    return std::exp(-norm2(x) / (2.0 * w * w * q)) / q;
}

void gaussian_smooth(ComplexField& f, double rho) {
    const GridSpec& g = f.grid;
    const int n = g.n;
    fft::forward(f.values.data(), n);
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            f.at(i, j) *= norm * std::exp(-0.5 * wrap_k2(g, i, j) * rho * rho);
    fft::backward(f.values.data(), n);
}

namespace {
template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "SPKL writer assumes little endian");
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("truncated SPKL stream");
    return v;
}
}  // namespace

void write_spkl(std::ostream& os, const ComplexField& f) {
    os.write("SPKL", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.n));
    put<double>(os, f.grid.extent);
    put<double>(os, f.k);
    put<double>(os, f.z);
    for (const auto& v : f.values) {
        put<double>(os, v.real());
        put<double>(os, v.imag());
    }
}

ComplexField read_spkl(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SPKL", 4) != 0) throw std::runtime_error("not an SPKL stream");
    const auto version = get<std::uint32_t>(is);
    if (version != 1) throw std::runtime_error("unsupported SPKL version " + std::to_string(version));
    GridSpec g;
    g.n = static_cast<int>(get<std::uint32_t>(is));
    g.extent = get<double>(is);
    const double k = get<double>(is);
    const double z = get<double>(is);
    ComplexField f(g, k, z);
    for (auto& v : f.values) {
        const double re = get<double>(is);
        v = cplx(re, get<double>(is));
    }
    return f;
}

void write_spkl(const std::string& path, const ComplexField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_spkl(os, f);
}

ComplexField read_spkl(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_spkl(is);
}

}  // namespace spk
