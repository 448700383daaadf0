#pragma once

#include <complex>
#include <cstddef>
#include <string_view>

namespace spk::kernels {

using cplx = std::complex<double>;

enum class Isa { Scalar, Avx2 };

// Pointwise a[i] *= b[i].
void cmul(cplx* a, const cplx* b, std::size_t n);
// a[i] *= exp(i * scale * phase[i]).
void apply_phase(cplx* a, const double* phase, double scale, std::size_t n);
// sum |a[i]|^2
double norm2(const cplx* a, std::size_t n);
// sum w[i] * conj(a[i]) * b[i]
cplx wdot(const double* w, const cplx* a, const cplx* b, std::size_t n);

Isa active_isa();
std::string_view isa_name(Isa isa);
// Forces a specific implementation; returns false if the CPU lacks it.
bool set_isa(Isa isa);

namespace scalar {
void cmul(cplx* a, const cplx* b, std::size_t n);
void apply_phase(cplx* a, const double* phase, double scale, std::size_t n);
double norm2(const cplx* a, std::size_t n);
cplx wdot(const double* w, const cplx* a, const cplx* b, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool available();
void cmul(cplx* a, const cplx* b, std::size_t n);
void apply_phase(cplx* a, const double* phase, double scale, std::size_t n);
double norm2(const cplx* a, std::size_t n);
cplx wdot(const double* w, const cplx* a, const cplx* b, std::size_t n);
}  // namespace avx2

}  // namespace spk::kernels
