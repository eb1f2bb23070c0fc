#include <Eigen/Dense>
#include <cstdio>
#include <ostream>

#include "relcl/pipeline.hpp"

namespace relcl {

Matrix principal_axes_2d(const Matrix& z) {
  const std::size_t n = z.rows(), d = z.cols();
  Matrix out(n, 2);
  if (n == 0 || d == 0) return out;
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z(i, j);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // eigenvalues ascend
  for (Eigen::Index a = 0; a < 2 && a < static_cast<Eigen::Index>(d); ++a) {
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 1 - a);
    for (Eigen::Index j = 0; j < axis.size(); ++j) {
      if (std::abs(axis(j)) > 1e-12) {
        if (axis(j) < 0) axis = -axis;
        break;
      }
    }
    const Eigen::VectorXd proj = x * axis;
    for (std::size_t i = 0; i < n; ++i) out(i, static_cast<std::size_t>(a)) = proj(static_cast<Eigen::Index>(i));
  }
  return out;
}

void export_embeddings(const Model& model, const Corpus& corpus, const std::vector<PairInstance>& pairs,
                       bool full_vectors, std::ostream& out) {
  const std::size_t d = model.config.model_dim;
  out << "index,document_id,subject,object,label,pc1,pc2";
  if (full_vectors) {
    for (std::size_t j = 0; j < d; ++j) out << ",v" << j;
  }
  out << "\n";
  if (pairs.empty()) return;
  const Matrix z = embed_pairs(model, corpus, pairs);
  const Matrix pc = principal_axes_2d(z);
  char buf[64];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairInstance& p = pairs[i];
    std::string label;
    for (RelationId r : p.labels) label += (label.empty() ? "" : "|") + corpus.inventory.name(r);
    if (label.empty()) label = corpus.inventory.name(corpus.inventory.na());
    out << i << "," << p.document_id << "," << p.subject << "," << p.object << "," << label;
    for (std::size_t a = 0; a < 2; ++a) {
      std::snprintf(buf, sizeof(buf), ",%.9g", pc(i, a));
      out << buf;
    }
    if (full_vectors) {
      for (std::size_t j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof(buf), ",%.9g", z(i, j));
        out << buf;
      }
    }
    out << "\n";
  }
}

}  // namespace relcl
