//
// Copyright 2026 The lrm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "lrm/linalg.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace lrm {

bool is_finite(const Matrix& m) { return m.allFinite(); }

double norm_l1_induced(const Matrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

double norm_l2_colmax(const Matrix& m) {
  return std::sqrt(m.cwiseAbs2().colwise().sum().maxCoeff());
}

double norm_linf_induced(const Matrix& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double norm_frobenius(const Matrix& m) { return m.norm(); }

double spectral_norm(const Matrix& m) {
  Eigen::BDCSVD<Matrix> solver(m);
  return solver.singularValues().size() > 0 ? solver.singularValues()(0) : 0.0;
}

SvdSummary svd(const Matrix& m) {
  Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdSummary out;
  out.singular_values = solver.singularValues();
  const double largest =
      out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
    if (out.singular_values(i) > kRankRelTol * largest) ++rank;
  }
  out.rank = rank;
  out.u = solver.matrixU().leftCols(rank);
  out.v = solver.matrixV().leftCols(rank).transpose();
  return out;
}

double condition_number(const Matrix& m) {
  const SvdSummary s = svd(m);
  if (s.rank == 0) {
    throw std::domain_error("condition_number: zero matrix has no rank");
  }
  return s.singular_values(0) / s.singular_values(s.rank - 1);
}

double coherence(const Matrix& m) {
  const SvdSummary s = svd(m);
  if (s.rank == 0) {
    throw std::domain_error("coherence: zero matrix has no right factor");
  }
  return std::sqrt(s.v.cwiseAbs2().colwise().sum().maxCoeff());
}

Matrix pseudo_inverse(const Matrix& m) {
  const SvdSummary s = svd(m);
  if (s.rank == 0) return Matrix::Zero(m.cols(), m.rows());
  const Vector inv = s.singular_values.head(s.rank).cwiseInverse();
  return s.v.transpose() * inv.asDiagonal() * s.u.transpose();
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token, const std::string& path) {
  size_t begin = 0;
  size_t end = token.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(token[begin])))
    ++begin;
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(token[end - 1])))
    --end;
  double value = 0.0;
  const auto res =
      std::from_chars(token.data() + begin, token.data() + end, value);
  if (res.ec != std::errc() || res.ptr != token.data() + end || begin == end) {
    throw std::runtime_error(path + ": not a decimal literal: '" +
                             std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    throw std::runtime_error(path + ": non-finite entry");
  }
  return value;
}

}  // namespace

Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    size_t pos = 0;
    while (true) {
      const size_t comma = line.find(',', pos);
      const size_t len = (comma == std::string::npos ? line.size() : comma) - pos;
      row.push_back(parse_double(std::string_view(line).substr(pos, len), path));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

void save_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lrm
