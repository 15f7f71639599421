#include "iwgvem/rng.hpp"

namespace iwgvem {

Eigen::MatrixXd sample_mvn_rows(const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& chol_l, int n,
                                std::mt19937_64& eng) {
  const int k = static_cast<int>(mu.size());
  std::normal_distribution<double> z;
  Eigen::MatrixXd out(n, k);
  Eigen::VectorXd zv(k);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < k; ++d) zv[d] = z(eng);
    out.row(i) = (mu + chol_l * zv).transpose();
  }
  return out;
}

}  // namespace iwgvem
