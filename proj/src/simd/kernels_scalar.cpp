#include <cmath>
#include <limits>

#include "mrf/simd/kernels.hpp"

namespace mrf::simd::scalar {

double relax_jacobi(const RelaxStencil& st, const double* v_in, double* v_out, std::size_t begin,
                    std::size_t end) {
  double change = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    double best = 0.0;
    for (std::size_t c = 0; c < st.controls; ++c) {
      double cand = st.cost[c * st.nodes + i];
      for (std::size_t k = 0; k < st.corners; ++k) {
        const std::size_t s = st.slot(c, k, i);
        cand = std::fma(st.weight[s], v_in[st.index[s]], cand);
      }
      best = (c == 0 || cand < best) ? cand : best;
    }
    v_out[i] = best;
    const double diff = std::fabs(best - v_in[i]);
    change = diff > change ? diff : change;
  }
  return change;
}

void min_hamiltonian_batch(std::size_t n, std::size_t controls, std::size_t dim, double p0,
                           const double* lagr, const double* flow, const double* covec,
                           double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    for (std::size_t c = 0; c < controls; ++c) {
      double acc = p0 * lagr[c * n + i];
      for (std::size_t d = 0; d < dim; ++d) {
        acc = std::fma(covec[d * n + i], flow[(c * dim + d) * n + i], acc);
      }
      best = (c == 0 || acc < best) ? acc : best;
    }
    out[i] = best;
  }
}

double max_element(const double* values, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = values[i] > m ? values[i] : m;
  return m;
}

}  // namespace mrf::simd::scalar
