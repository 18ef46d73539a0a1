#include "medeeg/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "medeeg/dsp.hpp"
#include "medeeg/error.hpp"

namespace medeeg::synth {
namespace {

// Thin Q factor with columns signed so that diag(R) > 0, which keeps Q close
// to the input when the input is already nearly orthonormal.
Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

dsp::SosFilter band_filter(const SynthParams& p) {
  const BandDef band = band_def(p.band);
  dsp::FilterSpec spec;
  if (std::abs(band.hi_hz - p.fs / 2.0) <= 1e-9) {
    spec.kind = dsp::FilterKind::HighPass;
    spec.lo_hz = band.lo_hz;
  } else {
    spec.kind = dsp::FilterKind::BandPass;
    spec.lo_hz = band.lo_hz;
    spec.hi_hz = band.hi_hz;
  }
  return dsp::design(spec, p.fs);
}

// Band-limited Gaussian rows rescaled to exactly the requested variance.
Matrix band_limited(Eigen::Index rows, Eigen::Index n, const dsp::SosFilter& filter, std::mt19937_64& rng,
                    const Vector& variance) {
  Matrix out = dsp::filtfilt_rows(filter, gaussian(rows, n, rng), Exec::Serial);
  center_rows(out);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double v = out.row(i).squaredNorm() / static_cast<double>(n);
    out.row(i) *= std::sqrt(variance(i) / v);
  }
  return out;
}

Recording make_recording(const SynthParams& p, const Matrix& mixing, Condition cond, std::uint64_t seed,
                         const std::string& id) {
  const auto n = p.samples_per_condition();
  const auto filter = band_filter(p);
  std::mt19937_64 rng(seed);
  Vector source_var = Vector::Ones(p.n_sources);
  if (cond == Condition::Meditation) source_var.head(p.n_discriminative).setConstant(p.class_variance_ratio);
  const Matrix sources = band_limited(p.n_sources, n, filter, rng, source_var);
  const Matrix noise = band_limited(p.n_channels, n, filter, rng, Vector::Constant(p.n_channels, p.noise_power));
  Recording rec;
  rec.subject_id = id;
  rec.condition = cond;
  rec.sample_rate_hz = p.fs;
  rec.data = mixing * sources + noise;
  return rec;
}

}  // namespace

void SynthParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidParams, what); };
  if (n_subjects < 1) bad("n_subjects must be positive");
  if (n_channels < 2 || n_channels > 65535) bad("n_channels must be in [2, 65535]");
  if (!(fs > 0.0)) bad("fs must be positive");
  if (!(minutes_per_condition > 0.0)) bad("minutes_per_condition must be positive");
  if (n_sources < 1 || n_sources > n_channels) bad("n_sources must be in [1, n_channels]");
  if (n_discriminative < 0 || n_discriminative > n_sources) bad("n_discriminative must be in [0, n_sources]");
  if (!(class_variance_ratio >= 1.0)) bad("class_variance_ratio must be >= 1");
  if (!(subject_jitter >= 0.0)) bad("subject_jitter must be >= 0");
  if (!(noise_power > 0.0)) bad("noise_power must be positive");
  if (band_def(band).hi_hz > fs / 2.0 + 1e-9) throw Error(ErrorCode::EdgeAboveNyquist, "band above fs/2");
  if (samples_per_condition() < 256) bad("recordings shorter than one 256-sample epoch");
}

Eigen::Index SynthParams::samples_per_condition() const {
  return static_cast<Eigen::Index>(std::llround(minutes_per_condition * 60.0 * fs));
}

Matrix base_mixing(const SynthParams& p) {
  std::mt19937_64 rng(mix_seed(p.seed, 0));
  return orthonormalize(gaussian(p.n_channels, p.n_sources, rng));
}

Matrix subject_mixing(const SynthParams& p, std::uint64_t subject_seed) {
  const Matrix base = base_mixing(p);
  if (p.subject_jitter == 0.0) return base;
  std::mt19937_64 rng(mix_seed(subject_seed, 0));
  return orthonormalize(base + p.subject_jitter * gaussian(p.n_channels, p.n_sources, rng));
}

std::uint64_t subject_seed(const SynthParams& p, std::size_t i) { return mix_seed(p.seed, 1000 + i); }

std::string subject_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02zu", i + 1);
  return buf;
}

GeneratedSubject generate_subject(const SynthParams& p, std::uint64_t seed, const std::string& id) {
  p.validate();
  GeneratedSubject g;
  g.mixing = subject_mixing(p, seed);
  g.meditation = make_recording(p, g.mixing, Condition::Meditation, mix_seed(seed, 1), id);
  g.rest = make_recording(p, g.mixing, Condition::Rest, mix_seed(seed, 2), id);
  return g;
}

CohortDataset generate_cohort(const SynthParams& p, Exec exec) {
  p.validate();
  if (p.n_subjects < 2) throw Error(ErrorCode::InvalidParams, "a cohort needs at least 2 subjects");
  CohortDataset cohort;
  cohort.band = band_def(p.band);
  cohort.subjects.resize(static_cast<std::size_t>(p.n_subjects));
  const auto n = static_cast<long>(p.n_subjects);
  auto one = [&](long i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto id = subject_name(idx);
    auto g = generate_subject(p, subject_seed(p, idx), id);
    cohort.subjects[idx] = SubjectData{id, std::move(g.meditation), std::move(g.rest)};
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) one(i);
  } else {
    for (long i = 0; i < n; ++i) one(i);
  }
  return cohort;
}

}  // namespace medeeg::synth
