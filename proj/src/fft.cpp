#include "speckle/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace spk::fft {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::map<int, PlanPair>& cache() {
    static std::map<int, PlanPair> c;
    return c;
}

PlanEffort g_effort = PlanEffort::Estimate;

const PlanPair& plans_for(int n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = cache().find(n);
    if (it != cache().end()) return it->second;
    CVec scratch(static_cast<std::size_t>(n) * n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = g_effort == PlanEffort::Measure ? FFTW_MEASURE : FFTW_ESTIMATE;
    PlanPair pp;
    pp.fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, flags);
    pp.bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, flags);
    return cache().emplace(n, pp).first->second;
}

}  // namespace

void set_effort(PlanEffort e) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    g_effort = e;
}

PlanEffort effort() { return g_effort; }

bool import_wisdom(const std::string& path) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    return fftw_import_wisdom_from_filename(path.c_str()) != 0;
}

bool export_wisdom(const std::string& path) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    return fftw_export_wisdom_to_filename(path.c_str()) != 0;
}

void forward(cplx* data, int n) {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_for(n).fwd, p, p);
}

void backward(cplx* data, int n) {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_for(n).bwd, p, p);
}

}  // namespace spk::fft
