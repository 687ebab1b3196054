// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/embedding.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "adnt/errors.hpp"
#include "adnt/trainer.hpp"

namespace adnt {

Pca fit_pca(const Matrix& data, std::size_t num_components) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n < 2) throw ContractError("pca: need at least two rows");
  if (num_components == 0 || num_components > d) {
    throw ConfigError("pca: cannot extract " + std::to_string(num_components) + " components from " +
                      std::to_string(d) + " columns");
  }
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      data.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("pca: eigen decomposition failed");

  Pca pca;
  pca.mean = Matrix(1, d);
  for (std::size_t j = 0; j < d; ++j) pca.mean(0, j) = mean(static_cast<Eigen::Index>(j));
  pca.components = Matrix(num_components, d);
  // Eigenvalues come in increasing order.
  for (std::size_t c = 0; c < num_components; ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    if (v(largest) < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) pca.components(c, j) = v(static_cast<Eigen::Index>(j));
    pca.variance.push_back(std::max(0.0, solver.eigenvalues()(col)));
  }
  return pca;
}

Matrix pca_project(const Pca& pca, const Matrix& data) {
  if (data.cols() != pca.mean.cols()) {
    throw DimensionError("pca: data has " + std::to_string(data.cols()) + " columns, fitted on " +
                         std::to_string(pca.mean.cols()));
  }
  Matrix out(data.rows(), pca.components.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < pca.components.rows(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < data.cols(); ++j) acc += (data(r, j) - pca.mean(0, j)) * pca.components(c, j);
      out(r, c) = acc;
    }
  }
  return out;
}

void write_embeddings_csv(const Dataset& dataset, const Checkpoint& checkpoint, const std::filesystem::path& path,
                          std::size_t num_components) {
  std::vector<Matrix> features;
  std::size_t total = 0;
  for (std::size_t g = 0; g < dataset.num_domains(); ++g) {
    features.push_back(domain_features(dataset, checkpoint, g));
    total += features.back().rows();
  }
  const std::size_t d = features.front().cols();
  Matrix all(total, d);
  std::size_t row = 0;
  for (const Matrix& f : features) {
    std::copy(f.values().begin(), f.values().end(), all.values().begin() + static_cast<std::ptrdiff_t>(row * d));
    row += f.rows();
  }
  const Pca pca = fit_pca(all, num_components);
  const Matrix projected = pca_project(pca, all);

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "domain,label";
  for (std::size_t c = 0; c < num_components; ++c) out << ",pc" << c + 1;
  for (std::size_t j = 0; j < d; ++j) out << ",h" << j;
  out << '\n';
  row = 0;
  for (std::size_t g = 0; g < dataset.num_domains(); ++g) {
    const DomainData& domain = dataset.domains[g];
    const bool labeled = g != dataset.target_index() || dataset.target_labeled;
    for (std::size_t i = 0; i < domain.labels.size(); ++i, ++row) {
      out << domain.id << ',' << (labeled ? std::to_string(domain.labels[i]) : std::string("-1"));
      for (std::size_t c = 0; c < num_components; ++c) out << ',' << format_number(projected(row, c));
      for (std::size_t j = 0; j < d; ++j) out << ',' << format_number(all(row, j));
      out << '\n';
    }
  }
}

}  // namespace adnt
