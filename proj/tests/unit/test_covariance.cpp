#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <doctest.h>

#include "covfmm/covariance.hpp"
#include "covfmm/experiment.hpp"
#include "covfmm/linalg.hpp"

using namespace covfmm;
using doctest::Approx;

namespace {

// small coastal strip, spacings comparable to the lengthscales in use
ObservationSet strip(int n) {
  ObservationSet obs;
  for (int i = 0; i < n; ++i) {
    obs.lat_deg.push_back(54.0 + 0.07 * i);
    obs.lon_deg.push_back(-6.0 + 0.11 * i);
  }
  return obs;
}

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name) : path("covfmm_test_" + name) {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("method names round trip") {
  CHECK(to_string(ReconditionMethod::RidgeRegression) == "rr");
  CHECK(to_string(ReconditionMethod::MinimumEigenvalue) == "me");
  CHECK(to_string(ReconditionMethod::None) == "none");
  for (ReconditionMethod m :
       {ReconditionMethod::None, ReconditionMethod::RidgeRegression,
        ReconditionMethod::MinimumEigenvalue})
    CHECK(recondition_method_from(to_string(m)) == m);
  CHECK_THROWS_AS(recondition_method_from("tikhonov"), ArgumentError);
}

TEST_CASE("covariance scales the correlation by the stddev dyad") {
  const ObservationSet obs = strip(6);
  Vector sd(6);
  for (Index i = 0; i < 6; ++i) sd[i] = 0.5 + 0.1 * static_cast<double>(i);
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Soar, 80.0, sd);
  const Matrix c = build_correlation(obs, CorrelationKind::Soar, 80.0);
  for (Index i = 0; i < 6; ++i) {
    CHECK(r.matrix(i, i) == Approx(sd[i] * sd[i]).epsilon(1e-15));
    for (Index j = 0; j < 6; ++j)
      CHECK(r.matrix(i, j) == Approx(sd[i] * sd[j] * c(i, j)).epsilon(1e-15));
  }
  CHECK(r.kind == CorrelationKind::Soar);
  CHECK(r.lengthscale_km == 80.0);
  CHECK_FALSE(r.inverse);
  CHECK_FALSE(r.recondition.applied);
  CHECK(is_symmetric(r.matrix, 0.0));

  // scalar overload broadcasts
  const CovarianceModel uni = build_covariance(obs, CorrelationKind::Soar, 80.0, 2.0);
  CHECK(uni.matrix(0, 0) == Approx(4.0).epsilon(1e-15));
  CHECK(uni.stddev.size() == 6);

  Vector bad(2);
  bad << 1.0, 1.0;
  CHECK_THROWS_AS(build_covariance(obs, CorrelationKind::Soar, 80.0, bad),
                  ArgumentError);
  CHECK_THROWS_AS(build_covariance(obs, CorrelationKind::Soar, 80.0, -1.0),
                  ArgumentError);
}

TEST_CASE("ridge regression shift matches the closed form on a 2x2 example") {
  // eigenvalues of [[1, 0.9], [0.9, 1]] are 1.9 and 0.1, condition 19;
  // requesting kappa = 4 needs delta = (1.9 - 0.1 * 4) / 3 = 0.5
  CovarianceModel model;
  model.matrix = Matrix{{1.0, 0.9}, {0.9, 1.0}};
  model.stddev = Vector::Ones(2);
  const CovarianceModel rec = recondition_rr(model, 4.0);
  CHECK(rec.recondition.applied);
  CHECK(rec.recondition.method == ReconditionMethod::RidgeRegression);
  CHECK(rec.recondition.kappa_requested == 4.0);
  CHECK(rec.recondition.delta == Approx(0.5).epsilon(1e-12));
  CHECK(rec.matrix(0, 0) == Approx(1.5).epsilon(1e-12));
  CHECK(rec.matrix(0, 1) == 0.9);  // off-diagonal untouched
  CHECK(condition_number(rec.matrix) == Approx(4.0).epsilon(1e-10));

  // already satisfied: returned unchanged
  const CovarianceModel same = recondition_rr(model, 100.0);
  CHECK_FALSE(same.recondition.applied);
  CHECK(same.recondition.delta == 0.0);
  CHECK((same.matrix - model.matrix).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(recondition_rr(model, 1.0), ArgumentError);
  CHECK_THROWS_AS(recondition_rr(model, 0.5), ArgumentError);
}

TEST_CASE("minimum eigenvalue method clamps the small eigenvalues") {
  // same 2x2: threshold T = 1.9 / 4, eigenvalues become (1.9, 0.475)
  CovarianceModel model;
  model.matrix = Matrix{{1.0, 0.9}, {0.9, 1.0}};
  model.stddev = Vector::Ones(2);
  const CovarianceModel rec = recondition_me(model, 4.0);
  CHECK(rec.recondition.applied);
  CHECK(rec.recondition.floor == Approx(0.475).epsilon(1e-12));
  const EigenDecomposition eig = sym_eig(rec.matrix);
  CHECK(eig.values.minCoeff() == Approx(0.475).epsilon(1e-10));
  CHECK(eig.values.maxCoeff() == Approx(1.9).epsilon(1e-10));
  CHECK(condition_number(rec.matrix) == Approx(4.0).epsilon(1e-10));
  // eigenvector basis unchanged: off-diagonal shrinks, trace grows
  CHECK(rec.matrix(0, 1) == Approx((1.9 - 0.475) / 2.0).epsilon(1e-10));
  CHECK(rec.matrix(0, 0) == Approx((1.9 + 0.475) / 2.0).epsilon(1e-10));

  const CovarianceModel same = recondition_me(model, 19.0001);
  CHECK_FALSE(same.recondition.applied);
  CHECK_THROWS_AS(recondition_me(model, 0.9), ArgumentError);
}

TEST_CASE("both methods land the condition number on the request") {
  const ObservationSet obs = strip(24);
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Soar, 80.0);
  const double kappa0 = condition_number(r.matrix);
  REQUIRE(kappa0 > 2000.0);  // dense coastal strip is genuinely ill conditioned
  for (double kappa : {100.0, 1000.0}) {
    const CovarianceModel rr = recondition_rr(r, kappa);
    const CovarianceModel me = recondition_me(r, kappa);
    CHECK(condition_number(rr.matrix) == Approx(kappa).epsilon(1e-6));
    CHECK(condition_number(me.matrix) == Approx(kappa).epsilon(1e-6));
  }
}

TEST_CASE("inverse weighting inverts and flags the model") {
  const ObservationSet obs = strip(12);
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Foar, 60.0, 1.2);
  const CovarianceModel a = inverse_weighting(r);
  CHECK(a.inverse);
  CHECK_FALSE(r.inverse);
  const Matrix prod = a.matrix * r.matrix;
  CHECK((prod - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(is_symmetric(a.matrix, 0.0));  // exactly symmetric by construction
  CHECK_THROWS_AS(inverse_weighting(a), ArgumentError);  // double inversion
}

TEST_CASE("singular value interlacing holds for arbitrary sub-matrices") {
  // singular values of any row/column selection are bounded by the parent's
  const ObservationSet obs = strip(20);
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Soar, 100.0);
  const CovarianceModel a = inverse_weighting(recondition_rr(r, 500.0));
  const Vector parent = truncated_svd(a.matrix, 20).singular_values;
  RandomStream rng(split_seed(0xC0FFEE));
  // draw a random subset of rows and of columns (distinct indices; repeats
  // would inflate the sub-matrix norm and void the bound)
  const auto pick = [&rng](Index count) {
    std::vector<int> pool(20);
    for (int i = 0; i < 20; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index k = 0; k < count; ++k) {
      const auto j = k + static_cast<Index>(
                             rng.uniform_int(static_cast<std::uint64_t>(20 - k)));
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(count));
    return pool;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const Index nr = 1 + static_cast<Index>(rng.uniform_int(19));
    const Index nc = 1 + static_cast<Index>(rng.uniform_int(19));
    const std::vector<int> rows = pick(nr);
    const std::vector<int> cols = pick(nc);
    Matrix sub(nr, nc);
    for (Index i = 0; i < nr; ++i)
      for (Index j = 0; j < nc; ++j)
        sub(i, j) = a.matrix(rows[static_cast<std::size_t>(i)],
                             cols[static_cast<std::size_t>(j)]);
    const Vector sv = truncated_svd(sub, std::min(nr, nc)).singular_values;
    for (Index k = 0; k < sv.size(); ++k)
      CHECK(sv[k] <= parent[k] * (1.0 + 1e-12));
  }
}

TEST_CASE("covariance container round trips bit exactly") {
  const ObservationSet obs = strip(9);
  CovarianceModel r = build_covariance(obs, CorrelationKind::Matern52, 120.0, 1.3);
  r = recondition_me(r, 50.0);
  const TempPath tmp("cov_roundtrip.bin");
  save_covariance(r, tmp.path);
  const CovarianceModel back = load_covariance(tmp.path);
  CHECK((back.matrix - r.matrix).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.stddev - r.stddev).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.kind == r.kind);
  CHECK(back.lengthscale_km == r.lengthscale_km);
  CHECK(back.recondition.method == r.recondition.method);
  CHECK(back.recondition.kappa_requested == r.recondition.kappa_requested);
  CHECK(back.recondition.floor == r.recondition.floor);
  CHECK(back.recondition.applied == r.recondition.applied);
  CHECK(back.inverse == r.inverse);

  CHECK_THROWS_AS(load_covariance("no_such_file.bin"), SerializationError);
}

TEST_CASE("loading rejects a truncated container") {
  const ObservationSet obs = strip(5);
  const CovarianceModel r = build_covariance(obs, CorrelationKind::Soar, 80.0);
  const TempPath tmp("cov_truncated.bin");
  save_covariance(r, tmp.path);
  std::string bytes;
  {
    FILE* f = std::fopen(tmp.path.c_str(), "rb");
    REQUIRE(f != nullptr);
    char buf[4096];
    const std::size_t got = std::fread(buf, 1, sizeof buf, f);
    std::fclose(f);
    bytes.assign(buf, got);
  }
  {
    FILE* f = std::fopen(tmp.path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(bytes.data(), 1, bytes.size() - 7, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_covariance(tmp.path), SerializationError);
}

}  // TEST_SUITE
