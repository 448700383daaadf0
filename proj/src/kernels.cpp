#include "speckle/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace spk::kernels {

namespace scalar {

void cmul(cplx* a, const cplx* b, std::size_t n) {
    auto* pa = reinterpret_cast<double*>(a);
    const auto* pb = reinterpret_cast<const double*>(b);
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = pa[2 * i], ai = pa[2 * i + 1];
        const double br = pb[2 * i], bi = pb[2 * i + 1];
        pa[2 * i] = ar * br - ai * bi;
        pa[2 * i + 1] = ai * br + ar * bi;
    }
}

void apply_phase(cplx* a, const double* phase, double scale, std::size_t n) {
    auto* pa = reinterpret_cast<double*>(a);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = scale * phase[i];
        const double c = std::cos(t), s = std::sin(t);
        const double ar = pa[2 * i], ai = pa[2 * i + 1];
        pa[2 * i] = ar * c - ai * s;
        pa[2 * i + 1] = ai * c + ar * s;
    }
}

double norm2(const cplx* a, std::size_t n) {
    const auto* p = reinterpret_cast<const double*>(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) acc += p[i] * p[i];
    return acc;
}

cplx wdot(const double* w, const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += w[i] * (ar * br + ai * bi);
        im += w[i] * (ar * bi - ai * br);
    }
    return {re, im};
}

}  // namespace scalar

namespace {

using CmulFn = void (*)(cplx*, const cplx*, std::size_t);
using PhaseFn = void (*)(cplx*, const double*, double, std::size_t);
using NormFn = double (*)(const cplx*, std::size_t);
using DotFn = cplx (*)(const double*, const cplx*, const cplx*, std::size_t);

struct Table {
    Isa isa;
    CmulFn cmul;
    PhaseFn phase;
    NormFn norm;
    DotFn dot;
};

const Table scalar_table{Isa::Scalar, scalar::cmul, scalar::apply_phase, scalar::norm2,
                         scalar::wdot};
const Table avx2_table{Isa::Avx2, avx2::cmul, avx2::apply_phase, avx2::norm2, avx2::wdot};

const Table* pick_default() {
    const char* env = std::getenv("SPKL_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_table;
    return avx2::available() ? &avx2_table : &scalar_table;
}

std::atomic<const Table*>& current() {
    static std::atomic<const Table*> t{pick_default()};
    return t;
}

}  // namespace

void cmul(cplx* a, const cplx* b, std::size_t n) { current().load()->cmul(a, b, n); }
void apply_phase(cplx* a, const double* phase, double scale, std::size_t n) {
    current().load()->phase(a, phase, scale, n);
}
double norm2(const cplx* a, std::size_t n) { return current().load()->norm(a, n); }
cplx wdot(const double* w, const cplx* a, const cplx* b, std::size_t n) {
    return current().load()->dot(w, a, b, n);
}

Isa active_isa() { return current().load()->isa; }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool set_isa(Isa isa) {
    if (isa == Isa::Avx2) {
        if (!avx2::available()) return false;
        current().store(&avx2_table);
    } else {
        current().store(&scalar_table);
    }
    return true;
}

}  // namespace spk::kernels
