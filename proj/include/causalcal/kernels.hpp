#pragma once

#include <cstddef>

// Hot arithmetic inner loops (column dot products and accumulations behind
// correlation-matrix construction and SEM column updates). Scalar reference
// implementations plus AVX2 variants; the fastest supported ISA is selected
// once at runtime. Results may differ between ISAs in the last bits
// (different summation order), which is why the dispatch is overridable and
// equivalence-tested rather than assumed bit-identical.
namespace causalcal::kernels {

enum class Isa { Scalar, Avx2 };

// Reference kernels; these define the semantics.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool supported();
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

Isa active_isa();
void force_isa(Isa isa);  // throws std::invalid_argument if unsupported here

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

}  // namespace causalcal::kernels
