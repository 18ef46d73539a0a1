#include "medeeg/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "medeeg/error.hpp"

namespace medeeg::dsp {
namespace {

using cplx = std::complex<double>;

void check_edges(const FilterSpec& spec, double fs) {
  const double nyq = fs / 2.0;
  auto inside = [&](double f) { return f > 0.0 && f < nyq; };
  switch (spec.kind) {
    case FilterKind::BandPass:
      if (spec.hi_hz > nyq) throw Error(ErrorCode::EdgeAboveNyquist, "upper edge above fs/2");
      if (spec.hi_hz == nyq) throw Error(ErrorCode::EdgeAboveNyquist, "upper edge at fs/2; use a high-pass");
      if (!inside(spec.lo_hz) || !(spec.lo_hz < spec.hi_hz))
        throw Error(ErrorCode::InvalidParams, "band-pass edges must satisfy 0 < lo < hi < fs/2");
      break;
    case FilterKind::HighPass:
    case FilterKind::Notch:
      if (spec.lo_hz >= nyq) throw Error(ErrorCode::EdgeAboveNyquist, "edge at or above fs/2");
      if (!inside(spec.lo_hz)) throw Error(ErrorCode::InvalidParams, "edge must be positive");
      break;
  }
  if (spec.kind != FilterKind::Notch && (spec.order < 2 || spec.order % 2 != 0))
    throw Error(ErrorCode::InvalidParams, "filter order must be even and >= 2");
  if (spec.kind == FilterKind::Notch && !(spec.q > 0.0)) throw Error(ErrorCode::InvalidParams, "q must be positive");
}

// Butterworth prototype poles in the left half plane, unit cutoff.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double f_hz, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f_hz / fs); }

// Groups digital poles into conjugate pairs (upper half plane representative).
std::vector<cplx> upper_poles(const std::vector<cplx>& poles) {
  std::vector<cplx> out;
  for (auto p : poles)
    if (p.imag() > 0.0) out.push_back(p);
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
  return out;
}

cplx response(const SosFilter& filter, double w) {
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h{1.0, 0.0};
  for (const auto& s : filter.sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

void normalize_gain(SosFilter& filter, double w_ref) {
  const double g = std::abs(response(filter, w_ref));
  const double per_section = std::pow(g, 1.0 / static_cast<double>(filter.sections.size()));
  for (auto& s : filter.sections) {
    s.b0 /= per_section;
    s.b1 /= per_section;
    s.b2 /= per_section;
  }
}

// Transposed direct form II state that a constant input x = 1 would settle to.
struct State {
  double z1{0.0}, z2{0.0};
};

std::vector<State> steady_state(const SosFilter& filter) {
  std::vector<State> zi;
  double x = 1.0;
  for (const auto& s : filter.sections) {
    const double denom = 1.0 + s.a1 + s.a2;
    const double y = std::abs(denom) > 1e-300 ? x * (s.b0 + s.b1 + s.b2) / denom : 0.0;
    State st;
    st.z2 = s.b2 * x - s.a2 * y;
    st.z1 = y - s.b0 * x;
    zi.push_back(st);
    x = y;
  }
  return zi;
}

void run_cascade(const SosFilter& filter, std::vector<double>& x, std::vector<State> state) {
  for (std::size_t k = 0; k < filter.sections.size(); ++k) {
    const auto& s = filter.sections[k];
    auto [z1, z2] = state[k];
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

std::vector<State> scaled(const std::vector<State>& unit, double x0) {
  std::vector<State> out = unit;
  for (auto& s : out) {
    s.z1 *= x0;
    s.z2 *= x0;
  }
  return out;
}

}  // namespace

SosFilter design(const FilterSpec& spec, double fs) {
  check_edges(spec, fs);
  SosFilter filter;

  if (spec.kind == FilterKind::Notch) {
    const double w0 = 2.0 * std::numbers::pi * spec.lo_hz / fs;
    const double bw = w0 / spec.q;
    const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
    const double c = std::cos(w0);
    filter.sections.push_back({gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0});
    filter.n_poles = 2;
    return filter;
  }

  const auto proto = prototype_poles(spec.order);
  std::vector<cplx> digital;
  double w_ref = 0.0;
  cplx zero_a, zero_b;  // the two zeros of every section

  if (spec.kind == FilterKind::BandPass) {
    const double w1 = prewarp(spec.lo_hz, fs);
    const double w2 = prewarp(spec.hi_hz, fs);
    const double bw = w2 - w1;
    const double w0 = std::sqrt(w1 * w2);
    for (auto p : proto) {
      const cplx lp = p * (bw / 2.0);
      const cplx root = std::sqrt(lp * lp - w0 * w0);
      digital.push_back(bilinear(lp + root, fs));
      digital.push_back(bilinear(lp - root, fs));
    }
    zero_a = 1.0;   // analog zeros at s = 0
    zero_b = -1.0;  // analog zeros at infinity
    w_ref = 2.0 * std::atan(w0 / (2.0 * fs));
  } else {
    const double wc = prewarp(spec.lo_hz, fs);
    for (auto p : proto) digital.push_back(bilinear(wc / p, fs));
    zero_a = 1.0;
    zero_b = 1.0;
    w_ref = std::numbers::pi;
  }

  for (auto p : upper_poles(digital)) {
    Biquad s{};
    s.b0 = 1.0;
    s.b1 = -(zero_a + zero_b).real();
    s.b2 = (zero_a * zero_b).real();
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    filter.sections.push_back(s);
  }
  filter.n_poles = static_cast<int>(digital.size());
  normalize_gain(filter, w_ref);
  return filter;
}

double magnitude(const SosFilter& filter, double f_hz, double fs) {
  return std::abs(response(filter, 2.0 * std::numbers::pi * f_hz / fs));
}

std::vector<double> filter_forward(const SosFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_cascade(filter, y, std::vector<State>(filter.sections.size()));
  return y;
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(3 * static_cast<std::size_t>(filter.n_poles), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state(filter);
  run_cascade(filter, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(filter, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Matrix filtfilt_rows(const SosFilter& filter, const Matrix& data, Exec exec) {
  Matrix out(data.rows(), data.cols());
  const auto rows = data.rows();
  auto one = [&](Eigen::Index r) {
    std::vector<double> row(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index c = 0; c < data.cols(); ++c) row[static_cast<std::size_t>(c)] = data(r, c);
    const auto y = filtfilt(filter, row);
    for (Eigen::Index c = 0; c < data.cols(); ++c) out(r, c) = y[static_cast<std::size_t>(c)];
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < rows; ++r) one(r);
  } else {
    for (Eigen::Index r = 0; r < rows; ++r) one(r);
  }
  return out;
}

Recording bandpass(const Recording& rec, const BandDef& band, Exec exec) {
  const double nyq = rec.sample_rate_hz / 2.0;
  if (band.hi_hz > nyq + 1e-9) throw Error(ErrorCode::EdgeAboveNyquist, "band upper edge above fs/2");
  FilterSpec spec;
  if (std::abs(band.hi_hz - nyq) <= 1e-9) {
    spec.kind = FilterKind::HighPass;
    spec.lo_hz = band.lo_hz;
  } else {
    spec.kind = FilterKind::BandPass;
    spec.lo_hz = band.lo_hz;
    spec.hi_hz = band.hi_hz;
  }
  const auto filter = design(spec, rec.sample_rate_hz);
  Recording out = rec;
  out.data = filtfilt_rows(filter, rec.data, exec);
  return out;
}

Recording notch(const Recording& rec, double f0_hz, double q, Exec exec) {
  FilterSpec spec;
  spec.kind = FilterKind::Notch;
  spec.lo_hz = f0_hz;
  spec.q = q;
  const auto filter = design(spec, rec.sample_rate_hz);
  Recording out = rec;
  out.data = filtfilt_rows(filter, rec.data, exec);
  return out;
}

}  // namespace medeeg::dsp
