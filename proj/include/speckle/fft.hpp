#pragma once

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <string>
#include <vector>

namespace spk {

using cplx = std::complex<double>;

template <class T, std::size_t Align = 64>
struct AlignedAllocator {
    using value_type = T;
    template <class U>
    struct rebind {
        using other = AlignedAllocator<U, Align>;
    };
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U, Align>&) {}
    T* allocate(std::size_t n) {
        const std::size_t bytes = ((n * sizeof(T) + Align - 1) / Align) * Align;
        void* p = std::aligned_alloc(Align, bytes == 0 ? Align : bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { std::free(p); }
    template <class U>
    bool operator==(const AlignedAllocator<U, Align>&) const { return true; }
    template <class U>
    bool operator!=(const AlignedAllocator<U, Align>&) const { return false; }
};

using CVec = std::vector<cplx, AlignedAllocator<cplx>>;
using RVec = std::vector<double, AlignedAllocator<double>>;

enum class PlanEffort { Estimate, Measure };

namespace fft {

// Global planner settings. Changing effort after the first plan was built has
// no effect on cached plans.
void set_effort(PlanEffort effort);
PlanEffort effort();
bool import_wisdom(const std::string& path);
bool export_wisdom(const std::string& path);

// Unnormalized in-place 2D transforms of an n x n row-major array. Data must
// come from AlignedAllocator. forward uses exp(-i k x).
void forward(cplx* data, int n);
void backward(cplx* data, int n);

}  // namespace fft
}  // namespace spk
