#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "speckle/errors.hpp"
#include "speckle/fft.hpp"
#include "speckle/medium.hpp"

namespace spk {

struct ComplexField {
    GridSpec grid;
    CVec values;
    double k = 1.0;  // omega / c0
    double z = 0.0;

    ComplexField() = default;
    ComplexField(const GridSpec& g, double wavenumber, double depth = 0.0);

    // sum |v|^2 h^2
    double l2_norm_sq() const;
    double l2_norm() const;
    bool finite() const;
    cplx& at(int i, int j) { return values[static_cast<std::size_t>(i) * grid.n + j]; }
    const cplx& at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.n + j]; }
};

struct PropagationPlan {
    double big_l = 1.0;
    int n_slabs = 1;

    double dz() const { return big_l / n_slabs; }
    // largest dz allowed for this grid and frequency
    static double dz_cap(const MediumModel& m, const GridSpec& g, double omega0, double c_speed);
    // smallest slab count meeting the cap
    static PropagationPlan for_distance(double big_l, const MediumModel& m, const GridSpec& g,
                                        double omega0, double c_speed);
    void validate(const MediumModel& m, const GridSpec& g, double omega0, double c_speed) const;
};

struct SourceSpec {
    Vec2 center;
    double sigma_src = 0.0;
    double amplitude = 1.0;  // integral of the source over the plane
    // Build the Gaussian directly from its band-limited spectrum. This is the
    // only way to use sigma_src below two grid spacings.
    bool spectral = false;

    void validate(const GridSpec& g) const;
};

ComplexField make_source(const GridSpec& g, const SourceSpec& s, double k);

// Screens for one realization, stored unscaled (the B increments). Shared by
// all frequencies that see the same medium.
struct ScreenSet {
    ScreenStream stream;
    GridSpec grid;
    double dz = 0.0;
    std::vector<RVec> slabs;

    static ScreenSet generate(const ScreenFilter& f, const ScreenStream& s, int n_slabs);
    PhaseScreen screen(int slab) const;
};

enum class Direction { Forward, Reverse };

struct PropagateOptions {
    Direction direction = Direction::Forward;
    // boundary monitor: leak threshold on the energy fraction in the outer frame
    double leak_fraction = 0.01;
    double frame_fraction = 0.10;
    int checkpoints = 8;
    bool check_leak = true;
    // optional absorbing frame: width as fraction of extent, 0 disables
    double absorber_fraction = 0.0;
};

// Reusable split-step integrator for one (grid, k, dz). Owns its workspace, so
// one instance per worker.
class Stepper {
public:
    Stepper(const GridSpec& g, double k, double dz, double absorber_fraction = 0.0);

    // half diffraction, screen phase (k/2) * dB, half diffraction
    void step(ComplexField& f, const PhaseScreen& s);
    void step(ComplexField& f, const double* screen);
    // runs all slabs; consecutive half diffractions are fused
    void run(ComplexField& f, const ScreenSet& screens, const PropagateOptions& opt);
    void diffract(ComplexField& f, double dz);

    double k() const { return k_; }
    double dz() const { return dz_; }
    const GridSpec& grid() const { return grid_; }

private:
    void apply_kernel(ComplexField& f, const CVec& kernel);
    void absorb(ComplexField& f) const;

    GridSpec grid_;
    double k_;
    double dz_;
    CVec half_;
    CVec full_;
    RVec absorber_;
};

// fraction of the L2 energy inside the outer frame
double frame_energy_fraction(const ComplexField& f, double frame_fraction = 0.10);

ComplexField step(const ComplexField& field, const PhaseScreen& screen);

ComplexField propagate(const SourceSpec& source, const MediumModel& m, const PropagationPlan& plan,
                       const GridSpec& g, double k, const ScreenStream& realization,
                       const PropagateOptions& opt = {});
ComplexField propagate(ComplexField field, const ScreenSet& screens, const PropagateOptions& opt = {});

// Field at z = L of a Gaussian source exp(-|x-y|^2/2rho^2)/(2 pi rho^2).
ComplexField green_field(Vec2 y, double rho, const MediumModel& m, const PropagationPlan& plan,
                         const GridSpec& g, double k, const ScreenStream& realization,
                         const PropagateOptions& opt = {});

// Gaussian beam exp(-|x|^2/(2 w^2)) after free propagation over z; closed form.
cplx fresnel_gaussian(Vec2 x, double w, double k, double z);

// (2 pi rho^2)^-1 exp(-|x|^2/2rho^2) convolution, spectral
void gaussian_smooth(ComplexField& f, double rho);

void write_spkl(std::ostream& os, const ComplexField& f);
ComplexField read_spkl(std::istream& is);
void write_spkl(const std::string& path, const ComplexField& f);
ComplexField read_spkl(const std::string& path);

}  // namespace spk
