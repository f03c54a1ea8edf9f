#include "causalcal/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace causalcal::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::sum, scalar::axpy};

Table pick(Isa isa) {
    if (isa == Isa::Avx2) return Table{avx2::dot, avx2::sum, avx2::axpy};
    return kScalar;
}

std::atomic<Isa> g_isa{avx2::supported() ? Isa::Avx2 : Isa::Scalar};

}  // namespace

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (isa == Isa::Avx2 && !avx2::supported())
        throw std::invalid_argument("kernels: AVX2 not supported on this machine");
    g_isa.store(isa, std::memory_order_relaxed);
}

double dot(const double* a, const double* b, std::size_t n) {
    return pick(active_isa()).dot(a, b, n);
}

double sum(const double* a, std::size_t n) { return pick(active_isa()).sum(a, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    pick(active_isa()).axpy(alpha, x, y, n);
}

}  // namespace causalcal::kernels
