#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "medeeg/csp.hpp"
#include "medeeg/error.hpp"
#include "medeeg/lda.hpp"
#include "medeeg/lstm.hpp"

using namespace medeeg;
using lstm::ScalarSequence;

namespace {

std::vector<ScalarSequence> constant_sequences(int per_class, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, spread);
  std::vector<ScalarSequence> out;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    ScalarSequence s;
    s.label = label;
    for (int t = 0; t < 4; ++t) s.values.push_back((label ? 1.0 : -1.0) + n(rng));
    out.push_back(s);
  }
  return out;
}

double train_accuracy(const lstm::LstmModel& m, const std::vector<ScalarSequence>& seqs) {
  int ok = 0;
  for (const auto& s : seqs) ok += (lstm::predict_lstm(m, s) > 0.5 ? 1 : 0) == s.label;
  return ok / static_cast<double>(seqs.size());
}

}  // namespace

TEST_CASE("sub-epochs and sequences") {
  std::mt19937_64 rng(40);
  const auto set = testutil::planted_epochs(6, 256, 25, Vector::Unit(6, 0), 2.0, rng);
  const auto subs = lstm::split_subepochs(set);
  CHECK(subs.size() == 200);
  CHECK(subs.epoch_len() == 64);
  CHECK(subs[3].uid == set[0].uid);

  const auto med = subs.of_class(Condition::Meditation);
  const auto rest = subs.of_class(Condition::Rest);
  const auto bank = csp::fit_csp(csp::class_covariance(med), csp::class_covariance(rest), 0.0, 3);
  const auto lda = lda::fit_lda(csp::log_variance_features(subs.epochs(), bank), subs.labels());
  const auto seqs = lstm::build_sequences(set, bank, lda);
  CHECK(seqs.size() == 50);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    CHECK(seqs[i].values.size() == 4);
    CHECK(seqs[i].uid == set[i].uid);
    CHECK(seqs[i].label == set[i].label_bit());
  }

  // one epoch of four identical windows gives a constant sequence
  Matrix block = testutil::gaussian(6, 64, rng);
  Matrix rep(6, 256);
  for (int k = 0; k < 4; ++k) rep.middleCols(64 * k, 64) = block;
  EpochSet one(6, 256);
  one.push_back(make_epoch(rep, Condition::Rest, "S", 0, 0));
  const auto s = lstm::build_sequences(one, bank, lda);
  REQUIRE(s.size() == 1);
  for (double v : s[0].values) CHECK(v == doctest::Approx(s[0].values[0]).epsilon(1e-12));

  EpochSet odd(6, 100);
  odd.push_back(make_epoch(testutil::gaussian(6, 100, rng), Condition::Rest, "S", 0, 0));
  try {
    lstm::split_subepochs(odd);
    FAIL("expected LengthNotDivisible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthNotDivisible);
  }
}

TEST_CASE("zero model predicts one half") {
  const lstm::LstmModel m(5);
  ScalarSequence s;
  s.values = {3.0, -2.0, 0.5, 7.0};
  CHECK(lstm::predict_lstm(m, s) == 0.5);
}

TEST_CASE("analytic gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed);
    auto m = lstm::LstmModel::initialized(3, seed);
    m.params() += 0.3 * testutil::gaussian(m.params().size(), 1, rng);
    std::vector<ScalarSequence> seqs;
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 4; ++i) seqs.push_back({{n(rng), n(rng), n(rng)}, i % 2, "S", 0});
    const auto lg = lstm::loss_and_gradient(m, seqs);
    const double h = 1e-5;
    for (Eigen::Index p = 0; p < m.params().size(); ++p) {
      auto plus = m, minus = m;
      plus.params()(p) += h;
      minus.params()(p) -= h;
      const double fd = (lstm::loss_and_gradient(plus, seqs).loss - lstm::loss_and_gradient(minus, seqs).loss) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(lg.grad(p)), 1e-6});
      CHECK(std::abs(fd - lg.grad(p)) / scale <= 1e-4);
    }
  }
}

TEST_CASE("training separates constant sequences") {
  std::mt19937_64 rng(41);
  const auto seqs = constant_sequences(200, 0.0, rng);
  lstm::TrainConfig cfg;
  cfg.hidden = 16;
  cfg.seed = 3;
  lstm::TrainLog log;
  const auto m = lstm::train_lstm(seqs, cfg, &log);
  CHECK(train_accuracy(m, seqs) >= 0.99);
  CHECK(log.epoch_loss.size() == 20);
  CHECK(log.epoch_loss.front() < log.initial_loss);
  double p1 = 0.0;
  for (const auto& s : seqs)
    if (s.label == 1) p1 += lstm::predict_lstm(m, s);
  CHECK(p1 / 200.0 >= 0.9);
  for (double p : lstm::predict_lstm(m, std::span(seqs))) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("identical inputs with mixed labels stay at chance") {
  std::vector<ScalarSequence> seqs;
  for (int i = 0; i < 100; ++i) seqs.push_back({{0.3, 0.3, 0.3, 0.3}, i % 2, "S", 0});
  lstm::TrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 5;
  const auto m = lstm::train_lstm(seqs, cfg);
  const double acc = train_accuracy(m, seqs);
  CHECK(acc >= 0.4);
  CHECK(acc <= 0.6);
}

TEST_CASE("training is reproducible and rejects one class") {
  std::mt19937_64 rng(42);
  const auto seqs = constant_sequences(30, 0.5, rng);
  lstm::TrainConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 3;
  cfg.seed = 9;
  CHECK(lstm::train_lstm(seqs, cfg).params() == lstm::train_lstm(seqs, cfg).params());

  std::vector<ScalarSequence> ones;
  for (int i = 0; i < 5; ++i) ones.push_back({{1, 1, 1, 1}, 1, "S", 0});
  try {
    lstm::train_lstm(ones, cfg);
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
}

TEST_CASE("model blob round trip") {
  auto m = lstm::LstmModel::initialized(4, 7);
  m.input_shift = 0.25;
  m.input_scale = 2.0;
  std::stringstream buf;
  lstm::save_lstm(m, buf);
  const auto back = lstm::load_lstm(buf);
  CHECK(back.hidden() == 4);
  CHECK(back.input_shift == 0.25);
  CHECK((back.params() - m.params()).cwiseAbs().maxCoeff() < 1e-6);

  std::stringstream junk("not a model");
  CHECK_THROWS_AS(lstm::load_lstm(junk), Error);
}
