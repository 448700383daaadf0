// Built with -mavx2 only. Callers reach these through the dispatch table in
// kernels.cpp, which checks cpu support first.
#include <immintrin.h>

#include <cmath>

#include "speckle/kernels.hpp"

namespace spk::kernels::avx2 {

namespace {

// fdlibm kernel coefficients for sin/cos on [-pi/4, pi/4]
constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;
constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

constexpr double INV_PIO2 = 6.36619772367581382433e-01;
constexpr double PIO2_1 = 1.57079632673412561417e+00;
constexpr double PIO2_2 = 6.07710050630396597660e-11;
constexpr double PIO2_3 = 2.02226624871116645580e-21;
constexpr double MAGIC = 6755399441055744.0;  // 1.5 * 2^52
// beyond this the three-term reduction loses accuracy; fall back to libm
constexpr double REDUCE_LIMIT = 1.0e6;

inline __m256d bcast(double v) { return _mm256_set1_pd(v); }

inline void sincos4(__m256d t, __m256d& s_out, __m256d& c_out) {
    const __m256d y = _mm256_add_pd(_mm256_mul_pd(t, bcast(INV_PIO2)), bcast(MAGIC));
    const __m256d n = _mm256_sub_pd(y, bcast(MAGIC));
    __m256d r = _mm256_sub_pd(t, _mm256_mul_pd(n, bcast(PIO2_1)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(n, bcast(PIO2_2)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(n, bcast(PIO2_3)));

    const __m256d z = _mm256_mul_pd(r, r);
    __m256d ps = _mm256_add_pd(bcast(S5), _mm256_mul_pd(z, bcast(S6)));
    ps = _mm256_add_pd(bcast(S4), _mm256_mul_pd(z, ps));
    ps = _mm256_add_pd(bcast(S3), _mm256_mul_pd(z, ps));
    ps = _mm256_add_pd(bcast(S2), _mm256_mul_pd(z, ps));
    ps = _mm256_add_pd(bcast(S1), _mm256_mul_pd(z, ps));
    const __m256d sn = _mm256_add_pd(r, _mm256_mul_pd(_mm256_mul_pd(z, r), ps));

    __m256d pc = _mm256_add_pd(bcast(C5), _mm256_mul_pd(z, bcast(C6)));
    pc = _mm256_add_pd(bcast(C4), _mm256_mul_pd(z, pc));
    pc = _mm256_add_pd(bcast(C3), _mm256_mul_pd(z, pc));
    pc = _mm256_add_pd(bcast(C2), _mm256_mul_pd(z, pc));
    pc = _mm256_add_pd(bcast(C1), _mm256_mul_pd(z, pc));
    const __m256d hz = _mm256_mul_pd(bcast(0.5), z);
    const __m256d w = _mm256_sub_pd(bcast(1.0), hz);
    // 1 - hz + z^2 p, with the rounding of (1 - hz) compensated
    const __m256d corr = _mm256_sub_pd(_mm256_sub_pd(bcast(1.0), w), hz);
    const __m256d cs =
        _mm256_add_pd(w, _mm256_add_pd(_mm256_mul_pd(_mm256_mul_pd(z, z), pc), corr));

    const __m256i q = _mm256_castpd_si256(y);
    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i two = _mm256_set1_epi64x(2);
    const __m256d swap =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
    const __m256d ssign = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(q, two), 62));
    const __m256d csign = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_and_si256(_mm256_add_epi64(q, one), two), 62));

    const __m256d s = _mm256_blendv_pd(sn, cs, swap);
    const __m256d c = _mm256_blendv_pd(cs, sn, swap);
    s_out = _mm256_xor_pd(s, ssign);
    c_out = _mm256_xor_pd(c, csign);
}

// (a0 a1) * (b0 b1) for two packed complex numbers per register
inline __m256d cmul2(__m256d a, __m256d b) {
    const __m256d br = _mm256_movedup_pd(b);
    const __m256d bi = _mm256_permute_pd(b, 0xF);
    const __m256d t1 = _mm256_mul_pd(a, br);
    const __m256d t2 = _mm256_mul_pd(_mm256_permute_pd(a, 0x5), bi);
    return _mm256_addsub_pd(t1, t2);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

bool available() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
}

void cmul(cplx* a, const cplx* b, std::size_t n) {
    auto* pa = reinterpret_cast<double*>(a);
    const auto* pb = reinterpret_cast<const double*>(b);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(pa + 2 * i);
        const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        _mm256_storeu_pd(pa + 2 * i, cmul2(va, vb));
    }
    if (i < n) scalar::cmul(a + i, b + i, n - i);
}

void apply_phase(cplx* a, const double* phase, double scale, std::size_t n) {
    auto* pa = reinterpret_cast<double*>(a);
    const __m256d vs = bcast(scale);
    const __m256d limit = bcast(REDUCE_LIMIT);
    const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(_mm256_loadu_pd(phase + i), vs);
        const __m256d big = _mm256_cmp_pd(_mm256_and_pd(t, absmask), limit, _CMP_GT_OQ);
        if (_mm256_movemask_pd(big) != 0) {
            scalar::apply_phase(a + i, phase + i, scale, 4);
            continue;
        }
        __m256d s, c;
        sincos4(t, s, c);
        const __m256d c01 = _mm256_permute4x64_pd(c, 0x50);
        const __m256d c23 = _mm256_permute4x64_pd(c, 0xFA);
        const __m256d s01 = _mm256_permute4x64_pd(s, 0x50);
        const __m256d s23 = _mm256_permute4x64_pd(s, 0xFA);
        const __m256d a01 = _mm256_loadu_pd(pa + 2 * i);
        const __m256d a23 = _mm256_loadu_pd(pa + 2 * i + 4);
        const __m256d r01 = _mm256_addsub_pd(_mm256_mul_pd(a01, c01),
                                             _mm256_mul_pd(_mm256_permute_pd(a01, 0x5), s01));
        const __m256d r23 = _mm256_addsub_pd(_mm256_mul_pd(a23, c23),
                                             _mm256_mul_pd(_mm256_permute_pd(a23, 0x5), s23));
        _mm256_storeu_pd(pa + 2 * i, r01);
        _mm256_storeu_pd(pa + 2 * i + 4, r23);
    }
    if (i < n) scalar::apply_phase(a + i, phase + i, scale, n - i);
}

double norm2(const cplx* a, std::size_t n) {
    const auto* p = reinterpret_cast<const double*>(a);
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(p + 2 * i);
        const __m256d y = _mm256_loadu_pd(p + 2 * i + 4);
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(x, x));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(y, y));
    }
    double r = hsum(_mm256_add_pd(acc0, acc1));
    if (i < n) r += scalar::norm2(a + i, n - i);
    return r;
}

cplx wdot(const double* w, const cplx* a, const cplx* b, std::size_t n) {
    const auto* pa = reinterpret_cast<const double*>(a);
    const auto* pb = reinterpret_cast<const double*>(b);
    // accumulate [ar*br, ai*bi] and [ar*bi, ai*br] separately
    __m256d accd = _mm256_setzero_pd(), accx = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vw = _mm256_permute4x64_pd(
            _mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0x50);
        const __m256d va = _mm256_mul_pd(_mm256_loadu_pd(pa + 2 * i), vw);
        const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        accd = _mm256_add_pd(accd, _mm256_mul_pd(va, vb));
        accx = _mm256_add_pd(accx, _mm256_mul_pd(va, _mm256_permute_pd(vb, 0x5)));
    }
    alignas(32) double d[4], x[4];
    _mm256_store_pd(d, accd);
    _mm256_store_pd(x, accx);
    cplx r{d[0] + d[1] + d[2] + d[3], (x[0] - x[1]) + (x[2] - x[3])};
    if (i < n) r += scalar::wdot(w + i, a + i, b + i, n - i);
    return r;
}

}  // namespace spk::kernels::avx2
