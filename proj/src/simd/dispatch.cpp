#include <atomic>
#include <cstdlib>

#include "mrf/errors.hpp"
#include "mrf/simd/kernels.hpp"

namespace mrf::simd {

namespace {

Isa probe() {
#ifdef MRF_HAVE_AVX2
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

Isa initial_active() {
  const char* force = std::getenv("MRF_FORCE_SCALAR");
  if (force != nullptr && force[0] != '\0' && force[0] != '0') return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{initial_active()};
  return slot;
}

}  // namespace

const char* to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) {
    throw ConfigError("AVX2 kernels are not available on this build or CPU");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

void RelaxStencil::resize(std::size_t n, std::size_t c, std::size_t k) {
  nodes = n;
  controls = c;
  corners = k;
  cost.assign(n * c, 0.0);
  index.assign(n * c * k, 0);
  weight.assign(n * c * k, 0.0);
}

double relax_jacobi(const RelaxStencil& stencil, std::span<const double> v_in,
                    std::span<double> v_out, std::size_t begin, std::size_t end) {
  if (v_in.size() < stencil.nodes || v_out.size() < stencil.nodes || end > stencil.nodes ||
      begin > end) {
    throw ConfigError("relax_jacobi: range or buffer size mismatch");
  }
#ifdef MRF_HAVE_AVX2
  if (active_isa() == Isa::avx2) {
    return avx2::relax_jacobi(stencil, v_in.data(), v_out.data(), begin, end);
  }
#endif
  return scalar::relax_jacobi(stencil, v_in.data(), v_out.data(), begin, end);
}

void min_hamiltonian_batch(std::size_t n, std::size_t controls, std::size_t dim, double p0,
                           std::span<const double> lagr, std::span<const double> flow,
                           std::span<const double> covec, std::span<double> out) {
  if (controls == 0) throw ConfigError("control set is empty");
  if (lagr.size() < n * controls || flow.size() < n * controls * dim || covec.size() < n * dim ||
      out.size() < n) {
    throw ConfigError("min_hamiltonian_batch: buffer size mismatch");
  }
#ifdef MRF_HAVE_AVX2
  if (active_isa() == Isa::avx2) {
    avx2::min_hamiltonian_batch(n, controls, dim, p0, lagr.data(), flow.data(), covec.data(),
                                out.data());
    return;
  }
#endif
  scalar::min_hamiltonian_batch(n, controls, dim, p0, lagr.data(), flow.data(), covec.data(),
                                out.data());
}

double max_element(std::span<const double> values) {
#ifdef MRF_HAVE_AVX2
  if (active_isa() == Isa::avx2) return avx2::max_element(values.data(), values.size());
#endif
  return scalar::max_element(values.data(), values.size());
}

}  // namespace mrf::simd
