// Shared helpers for the test binaries.
#ifndef CATO_TESTS_SUPPORT_HPP
#define CATO_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>

#include "cato/bench.hpp"
#include "cato/model.hpp"
#include "cato/types.hpp"

namespace cato::testing {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

// One default-parameter user pinned at a given distance (deterministic,
// no random placement) — convenient for single-user checks.
inline UserProfile default_user(double dist_m, double c_total = 2.0e9) {
  Instance inst = generate_instance(1, 1);
  UserProfile u = inst.users[0];
  const double pl_db = 128.1 + 37.6 * std::log10(dist_m / 1000.0);
  u.beta_lin = std::pow(10.0, -pl_db / 10.0);
  u.c_total = c_total;
  u.c_local = 0.1 * c_total;
  u.c_offloadable = 0.9 * c_total;
  return u;
}

inline SystemConfig default_config() { return generate_instance(1, 1).config; }

inline double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cato::testing

#endif
