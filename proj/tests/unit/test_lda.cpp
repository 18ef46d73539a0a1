#include <doctest.h>

#include "helpers.hpp"
#include "medeeg/error.hpp"
#include "medeeg/lda.hpp"

using namespace medeeg;

namespace {

struct Sample {
  Matrix x;
  std::vector<int> y;
};

Sample blobs(int per_class, const Vector& m0, const Vector& m1, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sd);
  const auto d = m0.size();
  Sample s{Matrix(2 * per_class, d), {}};
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    for (Eigen::Index j = 0; j < d; ++j) s.x(i, j) = (label ? m1(j) : m0(j)) + n(rng);
    s.y.push_back(label);
  }
  return s;
}

}  // namespace

TEST_CASE("1-D midpoint threshold") {
  std::mt19937_64 rng(30);
  const auto s = blobs(100, Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), 0.1, rng);
  const auto m = lda::fit_lda(s.x, s.y);
  CHECK(std::abs(m.threshold) <= 0.05);
  CHECK(lda::classify(m, m.mean1) == 1);
  CHECK(lda::classify(m, m.mean0) == 0);
}

TEST_CASE("no signal gives chance accuracy") {
  std::mt19937_64 rng(31);
  const auto train = blobs(200, Vector::Zero(3), Vector::Zero(3), 1.0, rng);
  const auto m = lda::fit_lda(train.x, train.y);
  const auto fresh = blobs(500, Vector::Zero(3), Vector::Zero(3), 1.0, rng);
  int ok = 0;
  for (Eigen::Index i = 0; i < fresh.x.rows(); ++i)
    ok += lda::classify(m, fresh.x.row(i).transpose()) == fresh.y[static_cast<std::size_t>(i)];
  CHECK(ok / 1000.0 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("predictions are invariant under invertible linear maps") {
  std::mt19937_64 rng(32);
  Vector m1(3);
  m1 << 0.5, -0.3, 0.2;
  const auto s = blobs(20, Vector::Zero(3), m1, 0.5, rng);
  Matrix a = testutil::gaussian(3, 3, rng);
  a += 3 * Matrix::Identity(3, 3);
  const Matrix xt = s.x * a.transpose();
  const auto m = lda::fit_lda(s.x, s.y);
  const auto mt = lda::fit_lda(xt, s.y);
  for (Eigen::Index i = 0; i < s.x.rows(); ++i)
    CHECK(lda::classify(m, s.x.row(i).transpose()) == lda::classify(mt, xt.row(i).transpose()));
}

TEST_CASE("projection is affine and ties go to class 0") {
  std::mt19937_64 rng(33);
  const auto s = blobs(30, Vector::Zero(2), Vector::Ones(2), 0.3, rng);
  const auto m = lda::fit_lda(s.x, s.y);
  const Vector x = testutil::gaussian(2, 1, rng);
  const Vector y = testutil::gaussian(2, 1, rng);
  CHECK(lda::project(m, x + y) == doctest::Approx(lda::project(m, x) + lda::project(m, y)).epsilon(1e-12));
  CHECK(lda::project(m, Vector::Zero(2)) == 0.0);
  CHECK(lda::project(m, m.mean1) > m.threshold);
  // a point exactly on the threshold
  const Vector on = m.direction * (m.threshold / m.direction.squaredNorm());
  CHECK(lda::project(m, on) == doctest::Approx(m.threshold));
  {
    lda::LdaModel t = m;
    t.threshold = lda::project(t, on);
    CHECK(lda::classify(t, on) == 0);
  }
}

TEST_CASE("separable blobs generalize") {
  std::mt19937_64 rng(34);
  Vector m1(2);
  m1 << 4.0, 0.0;
  const auto train = blobs(50, Vector::Zero(2), m1, 0.1, rng);
  const auto m = lda::fit_lda(train.x, train.y);
  const auto test = blobs(200, Vector::Zero(2), m1, 0.1, rng);
  int ok = 0;
  for (Eigen::Index i = 0; i < test.x.rows(); ++i)
    ok += lda::classify(m, test.x.row(i).transpose()) == test.y[static_cast<std::size_t>(i)];
  CHECK(ok >= 396);
}

TEST_CASE("lda errors") {
  const Matrix x = Matrix::Ones(4, 2);
  const std::vector<int> one{1, 1, 1, 1};
  try {
    lda::fit_lda(x, one);
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
  const std::vector<int> short_labels{0, 1};
  CHECK_THROWS_AS(lda::fit_lda(x, short_labels), Error);
  // constant features are handled by the ridge
  const std::vector<int> mixed{0, 1, 0, 1};
  CHECK_NOTHROW(lda::fit_lda(x, mixed));
}
