#pragma once

#include <vector>

#include "medeeg/core.hpp"
#include "medeeg/exec.hpp"

namespace medeeg::dsp {

enum class FilterKind { BandPass, HighPass, Notch };

struct FilterSpec {
  FilterKind kind{FilterKind::BandPass};
  double lo_hz{0.0};  // the only edge for HighPass; center for Notch
  double hi_hz{0.0};  // BandPass upper edge; unused otherwise
  int order{4};       // analog prototype order, even
  double q{30.0};     // Notch quality factor
  bool zero_phase{true};
};

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

struct SosFilter {
  std::vector<Biquad> sections;
  int n_poles{0};
};

/// Designs the cascade for spec at sample rate fs. Butterworth for BandPass and
/// HighPass, second-order IIR notch for Notch.
SosFilter design(const FilterSpec& spec, double fs);

/// Complex-free magnitude response |H(e^{jw})| at frequency f_hz.
double magnitude(const SosFilter& filter, double f_hz, double fs);

/// Single forward pass with zero initial state.
std::vector<double> filter_forward(const SosFilter& filter, std::span<const double> x);

/// Forward-backward filtering with odd reflection padding of 3 * n_poles
/// samples and steady-state initial conditions. Output length equals input.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

/// Applies filtfilt to every channel of data.
Matrix filtfilt_rows(const SosFilter& filter, const Matrix& data, Exec exec = Exec::Parallel);

/// Zero-phase band-pass into band. HighGamma, whose upper edge sits at
/// Nyquist, becomes a high-pass at its lower edge.
Recording bandpass(const Recording& rec, const BandDef& band, Exec exec = Exec::Parallel);

/// Zero-phase notch at f0_hz with quality factor q.
Recording notch(const Recording& rec, double f0_hz = 50.0, double q = 30.0, Exec exec = Exec::Parallel);

}  // namespace medeeg::dsp
