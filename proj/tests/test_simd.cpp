#include <doctest.h>

#include <cstring>
#include <random>

#include "mrf/simd/kernels.hpp"

using namespace mrf::simd;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

RelaxStencil random_stencil(std::mt19937_64& rng, std::size_t n, std::size_t c, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> idx(0, static_cast<std::int32_t>(n - 1));
  RelaxStencil s;
  s.resize(n, c, k);
  for (auto& v : s.cost) v = u(rng);
  for (auto& v : s.index) v = idx(rng);
  for (auto& v : s.weight) v = u(rng) < 0.1 ? 0.0 : u(rng);
  return s;
}

}  // namespace

TEST_CASE("scalar and avx2 relaxation agree bit for bit") {
  if (detected_isa() != Isa::avx2) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
#ifdef MRF_HAVE_AVX2
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 3u, 4u, 17u, 256u, 1001u}) {
    const auto s = random_stencil(rng, n, 3, 4);
    std::vector<double> v(n);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (auto& x : v) x = u(rng);
    std::vector<double> a(n), b(n);
    const double da = scalar::relax_jacobi(s, v.data(), a.data(), 0, n);
    const double db = avx2::relax_jacobi(s, v.data(), b.data(), 0, n);
    CHECK(same_bits(a, b));
    CHECK(da == db);
    if (n > 5) {
      std::vector<double> c(n, 0.0), d(n, 0.0);
      scalar::relax_jacobi(s, v.data(), c.data(), 2, n - 1);
      avx2::relax_jacobi(s, v.data(), d.data(), 2, n - 1);
      CHECK(same_bits(c, d));
    }
  }
#endif
}

TEST_CASE("scalar and avx2 hamiltonian batches agree bit for bit") {
  if (detected_isa() != Isa::avx2) return;
#ifdef MRF_HAVE_AVX2
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (std::size_t n : {1u, 5u, 8u, 63u, 500u}) {
    for (std::size_t dim : {1u, 2u, 3u}) {
      const std::size_t controls = 4;
      std::vector<double> lagr(controls * n), flow(controls * dim * n), covec(dim * n);
      for (auto& x : lagr) x = std::fabs(u(rng));
      for (auto& x : flow) x = u(rng);
      for (auto& x : covec) x = u(rng);
      std::vector<double> a(n), b(n);
      scalar::min_hamiltonian_batch(n, controls, dim, 0.7, lagr.data(), flow.data(), covec.data(), a.data());
      avx2::min_hamiltonian_batch(n, controls, dim, 0.7, lagr.data(), flow.data(), covec.data(), b.data());
      CHECK(same_bits(a, b));
    }
  }
  for (std::size_t n : {0u, 1u, 7u, 64u, 999u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    CHECK(scalar::max_element(v.data(), n) == avx2::max_element(v.data(), n));
  }
#endif
}

TEST_CASE("dispatch honours the active instruction set") {
  const Isa before = active_isa();
  set_active_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  std::vector<double> v{1.0, 5.0, -2.0};
  CHECK(max_element(v) == 5.0);
  set_active_isa(before);
  CHECK(std::string(to_string(Isa::avx2)) == "avx2");
}
