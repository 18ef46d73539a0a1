#pragma once

#include <cstdint>
#include <string>

#include "medeeg/core.hpp"
#include "medeeg/exec.hpp"

namespace medeeg::synth {

// Linear mixing model: x(t) = M_s s(t) + n(t). The first n_discriminative
// sources have variance class_variance_ratio during meditation and 1 at rest;
// every other source has unit variance in both. M_s is the cohort's base
// orthonormal mixing perturbed by subject_jitter and re-orthonormalized.
struct SynthParams {
  int n_subjects{12};
  int n_channels{24};
  double fs{kCanonicalRate};
  double minutes_per_condition{6.0};
  int n_sources{6};
  int n_discriminative{1};
  double class_variance_ratio{6.0};
  double subject_jitter{0.1};
  double noise_power{0.1};
  Band band{Band::Beta};
  std::uint64_t seed{0};

  void validate() const;
  Eigen::Index samples_per_condition() const;
};

struct GeneratedSubject {
  Recording meditation;
  Recording rest;
  Matrix mixing;  // n_channels x n_sources, orthonormal columns
};

Matrix base_mixing(const SynthParams& params);
Matrix subject_mixing(const SynthParams& params, std::uint64_t subject_seed);

/// Seed of subject i, derived from the cohort seed.
std::uint64_t subject_seed(const SynthParams& params, std::size_t i);
std::string subject_name(std::size_t i);

GeneratedSubject generate_subject(const SynthParams& params, std::uint64_t subject_seed,
                                  const std::string& subject_id = "S00");

CohortDataset generate_cohort(const SynthParams& params, Exec exec = Exec::Parallel);

}  // namespace medeeg::synth
