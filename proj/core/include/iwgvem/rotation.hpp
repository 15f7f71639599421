#pragma once

#include <Eigen/Dense>
#include <vector>

namespace iwgvem {

// Rotated loading pattern with loadings = input * transform and factor
// correlation phi (identity for orthogonal rotations). loadings * phi *
// loadings' always reproduces input * input'.
struct RotationResult {
  Eigen::MatrixXd loadings;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd transform;
};

// Orthogonal varimax rotation: Kaiser row normalization, then pairwise
// column rotations until a full sweep improves the criterion by less than
// tol.
RotationResult varimax(const Eigen::MatrixXd& loadings, double tol = 1e-10,
                       int max_sweeps = 100);

// Oblique promax rotation: varimax first, then a least squares fit of the
// normalized loadings to their element-wise signed |.|^power target; the
// transform columns are scaled so phi has unit diagonal.
RotationResult promax(const Eigen::MatrixXd& loadings, int power = 4);

// Column permutation and sign flips minimizing the squared distance of
// the loadings to a target, applied consistently to loadings and phi.
struct AlignedSolution {
  Eigen::MatrixXd loadings;
  Eigen::MatrixXd phi;
  std::vector<int> perm;   // output column c comes from input column perm[c]
  Eigen::VectorXd signs;
};
AlignedSolution align_to_truth(const Eigen::MatrixXd& loadings,
                               const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& truth);

}  // namespace iwgvem
