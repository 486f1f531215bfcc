#include "blhomlab/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>

namespace blhomlab::fft {

namespace {

// Plans are cached per grid size and executed under a lock: FFTW planning is
// not thread-safe and the shared in/out buffers must not be raced.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    int n1 = 0, n2 = 0;

    ~PlanPair() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (real) fftw_free(real);
        if (spec) fftw_free(spec);
    }
};

std::mutex g_mutex;
std::map<std::pair<int, int>, PlanPair>& cache() {
    static std::map<std::pair<int, int>, PlanPair> c;
    return c;
}

PlanPair& plan_for(int n1, int n2) {
    auto key = std::make_pair(n1, n2);
    auto it = cache().find(key);
    if (it != cache().end()) return it->second;
    PlanPair& p = cache()[key];
    p.n1 = n1;
    p.n2 = n2;
    p.real = fftw_alloc_real(static_cast<size_t>(n1) * n2);
    p.spec = fftw_alloc_complex(static_cast<size_t>(n1) * (n2 / 2 + 1));
    p.fwd = fftw_plan_dft_r2c_2d(n1, n2, p.real, p.spec, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_c2r_2d(n1, n2, p.spec, p.real, FFTW_ESTIMATE);
    return p;
}

} // namespace

void forward2(int n1, int n2, const double* in, std::complex<double>* out) {
    std::lock_guard<std::mutex> lock(g_mutex);
    PlanPair& p = plan_for(n1, n2);
    std::memcpy(p.real, in, sizeof(double) * n1 * n2);
    fftw_execute(p.fwd);
    std::memcpy(out, p.spec, sizeof(fftw_complex) * n1 * (n2 / 2 + 1));
}

void inverse2(int n1, int n2, const std::complex<double>* in, double* out) {
    std::lock_guard<std::mutex> lock(g_mutex);
    PlanPair& p = plan_for(n1, n2);
    std::memcpy(p.spec, in, sizeof(fftw_complex) * n1 * (n2 / 2 + 1));
    fftw_execute(p.bwd);
    const double scale = 1.0 / (static_cast<double>(n1) * n2);
    const size_t total = static_cast<size_t>(n1) * n2;
    for (size_t i = 0; i < total; ++i) out[i] = p.real[i] * scale;
}

} // namespace blhomlab::fft
