#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace iwgvem {

// All randomness in the library flows from a single user seed through
// derive_seed; engines are never shared between work units, so results do
// not depend on scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a path of stream indices (person, iteration, ...) into a seed.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t idx : path) s = splitmix64(s ^ splitmix64(idx));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(seed, path));
}

inline Eigen::VectorXd standard_normal_vector(int n, std::mt19937_64& eng) {
  std::normal_distribution<double> z;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = z(eng);
  return v;
}

// n draws of mu + L z with z iid standard normal; one draw per row.
Eigen::MatrixXd sample_mvn_rows(const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& chol_l, int n,
                                std::mt19937_64& eng);

}  // namespace iwgvem
