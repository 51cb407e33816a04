#pragma once

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2/FMA variant chosen at runtime. Both variants perform the same fused
// multiply-add sequence, so their results agree bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mrf::simd {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);

/// Best instruction set supported by this build and this CPU.
Isa detected_isa();

/// Instruction set used by the dispatching entry points. Defaults to
/// detected_isa() unless MRF_FORCE_SCALAR is set in the environment.
Isa active_isa();

/// Overrides the active instruction set; throws ConfigError when unsupported.
void set_active_isa(Isa isa);

/// Semi-Lagrangian relaxation table. For node i and control c the candidate is
///   cost[c*nodes + i] + sum_k weight[(c*corners + k)*nodes + i] * v[index[...]]
/// Inactive corners carry weight 0 and any valid index.
struct RelaxStencil {
  std::size_t nodes = 0;
  std::size_t controls = 0;
  std::size_t corners = 0;
  std::vector<double> cost;
  std::vector<std::int32_t> index;
  std::vector<double> weight;

  void resize(std::size_t n, std::size_t c, std::size_t k);
  std::size_t slot(std::size_t c, std::size_t k, std::size_t i) const {
    return (c * corners + k) * nodes + i;
  }
};

/// Jacobi update of nodes [begin, end): v_out[i] = min_c candidate(i, c).
/// Returns max |v_out[i] - v_in[i]| over the range.
double relax_jacobi(const RelaxStencil& stencil, std::span<const double> v_in,
                    std::span<double> v_out, std::size_t begin, std::size_t end);

/// Batched minimized Hamiltonian over n points:
///   out[i] = min_c p0 * lagr[c*n + i] + sum_d covec[d*n + i] * flow[(c*dim + d)*n + i]
void min_hamiltonian_batch(std::size_t n, std::size_t controls, std::size_t dim, double p0,
                           std::span<const double> lagr, std::span<const double> flow,
                           std::span<const double> covec, std::span<double> out);

/// Largest element; -infinity for an empty span.
double max_element(std::span<const double> values);

namespace scalar {
double relax_jacobi(const RelaxStencil& stencil, const double* v_in, double* v_out,
                    std::size_t begin, std::size_t end);
void min_hamiltonian_batch(std::size_t n, std::size_t controls, std::size_t dim, double p0,
                           const double* lagr, const double* flow, const double* covec,
                           double* out);
double max_element(const double* values, std::size_t n);
}  // namespace scalar

#ifdef MRF_HAVE_AVX2
namespace avx2 {
double relax_jacobi(const RelaxStencil& stencil, const double* v_in, double* v_out,
                    std::size_t begin, std::size_t end);
void min_hamiltonian_batch(std::size_t n, std::size_t controls, std::size_t dim, double p0,
                           const double* lagr, const double* flow, const double* covec,
                           double* out);
double max_element(const double* values, std::size_t n);
}  // namespace avx2
#endif

}  // namespace mrf::simd
