#pragma once

#include "covfmm/errors.hpp"
#include "covfmm/random.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

//
// Dense symmetric kernels the rest of the library is built on.  Everything
// here delegates to Eigen (full decompositions; the problem sizes are a few
// thousand at most, so there is no need for iterative solvers).  Results are
// deterministic for fixed inputs: single threaded, no randomized pivoting.
//

// relative asymmetry above which a matrix stops counting as symmetric
inline constexpr double kSymmetryTol = 1e-12;

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, vectors.col(k) pairs with values[k]
};

struct TruncatedSvd {
  Vector singular_values;  // descending, length p
  Matrix left;             // rows x p
  Matrix right;            // cols x p
};

bool is_symmetric(const Matrix& m, double tol = kSymmetryTol);

// Throws ContractViolation if m is not square symmetric.
EigenDecomposition sym_eig(const Matrix& m);

// Leading p singular triplets.  Sign convention: the largest-magnitude entry
// of each right singular vector is made positive (ties broken by the lowest
// index), and the matching left vector is flipped with it, so factors are
// reproducible across runs.  Throws ArgumentError unless 1 <= p <= min(dims).
TruncatedSvd truncated_svd(const Matrix& m, Index p);

// Inverse of a symmetric positive definite matrix via Cholesky.  The result
// is rebuilt from its lower triangle so it is symmetric exactly.  Throws
// DefinitenessError (with the index of the first non-positive pivot) when the
// factorization breaks down.
Matrix spd_invert(const Matrix& m);

// Lower Cholesky factor of an SPD matrix; same error contract as spd_invert.
Matrix spd_cholesky(const Matrix& m);

// n samples from N(0, m), one per column.  Each sample consumes exactly
// m.rows() normal draws from rng in index order, so for m = I the columns
// equal the raw draws.
Matrix chol_sample(const Matrix& m, RandomStream& rng, Index n);

// lambda_max / lambda_min of a symmetric matrix; DefinitenessError when
// lambda_min <= 0.
double condition_number(const Matrix& m);

}  // namespace covfmm
