#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace drsf {

struct Embedding {
  Eigen::MatrixXd points;  // n x k, rows unit-normalized (zero rows stay zero)
};

struct ClusterLabels {
  Eigen::VectorXi labels;
  int k = 0;
};

struct SymmetricEig {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // matching columns, orthonormal
};

// L = I - D^{-1/2} S D^{-1/2}; exactly symmetric by construction.
Eigen::MatrixXd normalized_laplacian(const Eigen::Ref<const Eigen::MatrixXd>& similarity);

// Cyclic Jacobi; sweeps until every off-diagonal magnitude is below
// 1e-12 * ||A||_F.
SymmetricEig symmetric_eig(const Eigen::Ref<const Eigen::MatrixXd>& matrix);

// First k eigenvectors of an already-decomposed Laplacian, row-normalized.
Embedding embed_from_eig(const SymmetricEig& eig, int k);

Embedding spectral_embed(const Eigen::Ref<const Eigen::MatrixXd>& similarity, int k);

ClusterLabels kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, int k,
                     std::uint64_t seed);

ClusterLabels spectral_cluster(const Eigen::Ref<const Eigen::MatrixXd>& similarity, int k,
                               std::uint64_t seed);

double silhouette_score(const Eigen::Ref<const Eigen::MatrixXd>& points,
                        const ClusterLabels& labels);

}  // namespace drsf
