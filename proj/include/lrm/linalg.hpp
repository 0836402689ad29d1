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

#ifndef LRM_LINALG_HPP
#define LRM_LINALG_HPP

#include <Eigen/Dense>
#include <string>

namespace lrm {

// Dense, row-major, double-precision matrices throughout. Matrices are
// treated as immutable values once built; all operations here are pure.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A singular value counts toward the numerical rank iff it exceeds
// kRankRelTol times the largest singular value.
inline constexpr double kRankRelTol = 1e-9;

// Thin SVD m = u * diag(singular_values.head(rank)) * v, truncated at the
// numerical rank. v is rank x n (rows are right singular vectors), so
// u^T u = I and v v^T = I.
struct SvdSummary {
  Vector singular_values;  // all min(rows, cols) values, descending
  Eigen::Index rank = 0;
  Matrix u;  // m x rank
  Matrix v;  // rank x n
};

bool is_finite(const Matrix& m);

// Induced 1-norm: maximum absolute column sum.
double norm_l1_induced(const Matrix& m);
// Maximum column Euclidean norm (the "2,inf" entrywise-column norm).
double norm_l2_colmax(const Matrix& m);
// Induced inf-norm: maximum absolute row sum.
double norm_linf_induced(const Matrix& m);
double norm_frobenius(const Matrix& m);
// Largest singular value.
double spectral_norm(const Matrix& m);

SvdSummary svd(const Matrix& m);

// Ratio of the largest singular value to the smallest one above the rank
// threshold. Always >= 1; throws std::domain_error for the zero matrix.
double condition_number(const Matrix& m);

// Maximum column Euclidean norm of the SVD right factor v; in (0, 1].
// Throws std::domain_error for the zero matrix.
double coherence(const Matrix& m);

// Moore-Penrose pseudo-inverse via the rank-truncated SVD.
Matrix pseudo_inverse(const Matrix& m);

// Shortest decimal rendering that round-trips the exact double.
std::string format_double(double value);

// CSV: one row per line, comma-separated decimal literals, no header.
// Written with format_double, so files round-trip bit-exactly and identical
// matrices produce identical bytes.
Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const Matrix& m, const std::string& path);

}  // namespace lrm

#endif  // LRM_LINALG_HPP
