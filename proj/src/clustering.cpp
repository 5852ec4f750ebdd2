#include "drsf/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "drsf/rng.hpp"

namespace drsf {

Eigen::MatrixXd normalized_laplacian(const Eigen::Ref<const Eigen::MatrixXd>& similarity) {
  const Eigen::Index n = similarity.rows();
  if (similarity.cols() != n) throw std::invalid_argument("similarity must be square");
  Eigen::VectorXd inv_sqrt_degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double degree = similarity.row(i).sum();
    if (!(degree > 0.0)) throw std::invalid_argument("zero-degree row in similarity");
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  Eigen::MatrixXd laplacian(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    laplacian(i, i) = 1.0 - similarity(i, i) * inv_sqrt_degree[i] * inv_sqrt_degree[i];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double value = -similarity(i, j) * inv_sqrt_degree[i] * inv_sqrt_degree[j];
      laplacian(i, j) = value;
      laplacian(j, i) = value;
    }
  }
  return laplacian;
}

SymmetricEig symmetric_eig(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("matrix must be square");
  if (n == 0) throw std::invalid_argument("empty matrix");
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("matrix is not symmetric");

  Eigen::MatrixXd a = matrix;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  const double tol = 1e-12 * matrix.norm();

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off_max = 0.0;
    for (Eigen::Index p = 0; p + 1 < n; ++p)
      for (Eigen::Index r = p + 1; r < n; ++r)
        off_max = std::max(off_max, std::abs(a(p, r)));
    if (off_max <= tol) break;

    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index r = p + 1; r < n; ++r) {
        const double apq = a(p, r);
        if (std::abs(apq) <= tol) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p), aqq = a(r, r);
        a(p, p) = app - t * apq;
        a(r, r) = aqq + t * apq;
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == r) continue;
          const double akp = a(k, p), akq = a(k, r);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, r) = s * akp + c * akq;
          a(r, k) = a(k, r);
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double qkp = q(k, p), qkq = q(k, r);
          q(k, p) = c * qkp - s * qkq;
          q(k, r) = s * qkp + c * qkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymmetricEig result;
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    result.eigenvalues[j] = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    result.eigenvectors.col(j) = q.col(order[static_cast<std::size_t>(j)]);
  }
  return result;
}

Embedding embed_from_eig(const SymmetricEig& eig, int k) {
  const Eigen::Index n = eig.eigenvectors.rows();
  if (k < 1 || k > n) throw std::invalid_argument("embedding dimension out of range");
  Embedding embedding;
  embedding.points = eig.eigenvectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.points.row(i).norm();
    if (norm > 0.0) embedding.points.row(i) /= norm;
  }
  return embedding;
}

Embedding spectral_embed(const Eigen::Ref<const Eigen::MatrixXd>& similarity, int k) {
  if (k < 2 || k >= similarity.rows())
    throw std::invalid_argument("cluster count out of range");
  return embed_from_eig(symmetric_eig(normalized_laplacian(similarity)), k);
}

namespace {

Eigen::Index count_distinct_rows(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), 0);
  const auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (points(a, j) < points(b, j)) return true;
      if (points(a, j) > points(b, j)) return false;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  Eigen::Index distinct = points.rows() > 0 ? 1 : 0;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (row_less(order[i - 1], order[i])) ++distinct;
  return distinct;
}

double lloyd(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, Rng& rng,
             Eigen::VectorXi& labels) {
  const Eigen::Index n = points.rows();

  // k-means++ seeding
  Eigen::MatrixXd centroids(k, points.cols());
  Eigen::VectorXd dist2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  const Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      dist2[i] = std::min(dist2[i], (points.row(i) - centroids.row(c - 1)).squaredNorm());
    const double total = dist2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (u < acc) { pick = i; break; }
      }
    }
    if (pick < 0) {  // round-off or coincident points: first farthest point
      dist2.maxCoeff(&pick);
    }
    centroids.row(c) = points.row(pick);
  }

  labels.setConstant(n, -1);
  double inertia = 0.0;
  for (int iter = 0; iter < 300; ++iter) {
    // assignment
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) { best_d = d; best = c; }
      }
      if (labels[i] != best) { labels[i] = best; changed = true; }
      inertia += best_d;
    }
    if (!changed && iter > 0) break;

    // update, reseeding empty clusters on the farthest point
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(i);
      counts[labels[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / counts[c];
      } else {
        Eigen::Index farthest = 0;
        double worst = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (points.row(i) - centroids.row(labels[i])).squaredNorm();
          if (d > worst) { worst = d; farthest = i; }
        }
        centroids.row(c) = points.row(farthest);
      }
    }
  }
  return inertia;
}

}  // namespace

ClusterLabels kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, int k,
                     std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw std::invalid_argument("empty input");
  if (k < 1) throw std::invalid_argument("cluster count must be positive");
  if (static_cast<Eigen::Index>(k) > count_distinct_rows(points))
    throw std::invalid_argument("too many clusters");

  ClusterLabels best;
  best.k = k;
  double best_inertia = std::numeric_limits<double>::infinity();
  Eigen::VectorXi labels(n);
  for (int restart = 0; restart < 10; ++restart) {
    Rng rng(seed, stream::kKmeans, static_cast<std::uint64_t>(restart));
    const double inertia = lloyd(points, k, rng, labels);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best.labels = labels;
    }
  }
  return best;
}

ClusterLabels spectral_cluster(const Eigen::Ref<const Eigen::MatrixXd>& similarity, int k,
                               std::uint64_t seed) {
  return kmeans(spectral_embed(similarity, k).points, k, seed);
}

double silhouette_score(const Eigen::Ref<const Eigen::MatrixXd>& points,
                        const ClusterLabels& labels) {
  const Eigen::Index n = points.rows();
  if (labels.labels.size() != n) throw std::invalid_argument("label length mismatch");
  if (labels.k < 2) throw std::invalid_argument("silhouette needs at least two clusters");
  std::vector<int> sizes(static_cast<std::size_t>(labels.k), 0);
  for (Eigen::Index i = 0; i < n; ++i) sizes[static_cast<std::size_t>(labels.labels[i])] += 1;
  if (std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; }) < 2)
    throw std::invalid_argument("silhouette needs at least two clusters");

  double total = 0.0;
  std::vector<double> sum_by_cluster(static_cast<std::size_t>(labels.k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = labels.labels[i];
    if (sizes[static_cast<std::size_t>(own)] == 1) continue;  // singleton contributes 0
    std::fill(sum_by_cluster.begin(), sum_by_cluster.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_by_cluster[static_cast<std::size_t>(labels.labels[j])] +=
          (points.row(i) - points.row(j)).norm();
    }
    const double a = sum_by_cluster[static_cast<std::size_t>(own)] /
                     (sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < labels.k; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sum_by_cluster[static_cast<std::size_t>(c)] /
                          sizes[static_cast<std::size_t>(c)]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

}  // namespace drsf
