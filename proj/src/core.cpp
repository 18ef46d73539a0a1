#include "medeeg/core.hpp"

#include <cmath>

#include "medeeg/error.hpp"

namespace medeeg {

std::array<BandDef, 4> band_definitions() {
  return {{
      {Band::Alpha, 8.0, 13.0},
      {Band::Beta, 13.0, 25.0},
      {Band::LowGamma, 25.0, 45.0},
      {Band::HighGamma, 45.0, 64.0},
  }};
}

BandDef band_def(Band band) { return band_definitions()[static_cast<std::size_t>(band)]; }

std::string_view to_string(Band band) {
  switch (band) {
    case Band::Alpha: return "Alpha";
    case Band::Beta: return "Beta";
    case Band::LowGamma: return "LowGamma";
    case Band::HighGamma: return "HighGamma";
  }
  return "?";
}

Band parse_band(std::string_view name) {
  for (const auto& b : band_definitions())
    if (to_string(b.name) == name) return b.name;
  throw Error(ErrorCode::InvalidParams, "unknown band '" + std::string(name) + "'");
}

std::string_view to_string(Condition c) { return c == Condition::Meditation ? "meditation" : "rest"; }

Condition parse_condition(std::string_view name) {
  if (name == "meditation") return Condition::Meditation;
  if (name == "rest") return Condition::Rest;
  throw Error(ErrorCode::InvalidParams, "unknown condition '" + std::string(name) + "'");
}

void Recording::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw Error(ErrorCode::InvalidParams, "sample rate must be positive");
  if (data.rows() == 0 || data.cols() == 0) throw Error(ErrorCode::InvalidParams, "empty recording");
  if (!data.allFinite()) throw Error(ErrorCode::InvalidParams, "recording contains NaN or Inf");
}

void center_rows(Matrix& m) {
  if (m.cols() == 0) return;
  m.colwise() -= m.rowwise().mean();
}

Epoch make_epoch(Matrix data, Condition label, std::string subject_id, std::size_t parent_index, EpochUid uid) {
  center_rows(data);
  return Epoch{std::make_shared<const Matrix>(std::move(data)), label, std::move(subject_id), parent_index, uid};
}

void EpochSet::push_back(Epoch e) {
  if (epochs_.empty() && n_channels_ == 0 && epoch_len_ == 0) {
    n_channels_ = e.data().rows();
    epoch_len_ = e.data().cols();
  }
  if (e.data().rows() != n_channels_ || e.data().cols() != epoch_len_)
    throw Error(ErrorCode::DimensionMismatch, "epoch shape differs from set shape");
  epochs_.push_back(std::move(e));
}

void EpochSet::append(const EpochSet& other) {
  for (const auto& e : other) push_back(e);
}

std::size_t EpochSet::count(Condition c) const {
  std::size_t n = 0;
  for (const auto& e : epochs_) n += (e.label == c);
  return n;
}

std::vector<int> EpochSet::labels() const {
  std::vector<int> out;
  out.reserve(epochs_.size());
  for (const auto& e : epochs_) out.push_back(e.label_bit());
  return out;
}

EpochSet EpochSet::subset(std::span<const std::size_t> indices) const {
  EpochSet out(n_channels_, epoch_len_);
  out.epochs_.reserve(indices.size());
  for (auto i : indices) {
    if (i >= epochs_.size()) throw Error(ErrorCode::UnknownEpoch, "subset index out of range");
    out.epochs_.push_back(epochs_[i]);
  }
  return out;
}

std::vector<Epoch> EpochSet::of_class(Condition c) const {
  std::vector<Epoch> out;
  for (const auto& e : epochs_)
    if (e.label == c) out.push_back(e);
  return out;
}

EpochSet slice_epochs(const Recording& rec, Eigen::Index epoch_len, Eigen::Index stride,
                      std::uint32_t subject_ordinal) {
  if (epoch_len < 2 || stride < 1) throw Error(ErrorCode::InvalidParams, "epoch_len >= 2 and stride >= 1 required");
  if (rec.n_samples() < epoch_len)
    throw Error(ErrorCode::TooShort, "recording has " + std::to_string(rec.n_samples()) +
                                         " samples, epoch needs " + std::to_string(epoch_len));
  const Eigen::Index n = (rec.n_samples() - epoch_len) / stride + 1;
  EpochSet set(rec.n_channels(), epoch_len);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint32_t>(i);
    set.push_back(make_epoch(rec.data.middleCols(i * stride, epoch_len), rec.condition, rec.subject_id,
                             idx, make_uid(subject_ordinal, rec.condition, idx)));
  }
  return set;
}

void CohortDataset::validate() const {
  if (subjects.empty()) throw Error(ErrorCode::InvalidParams, "cohort has no subjects");
  const auto channels = subjects.front().meditation.n_channels();
  for (const auto& s : subjects) {
    for (const Recording* r : {&s.meditation, &s.rest}) {
      r->validate();
      if (r->n_channels() != channels)
        throw Error(ErrorCode::DimensionMismatch, "subject " + s.subject_id + " has a different channel count");
      if (r->sample_rate_hz != subjects.front().meditation.sample_rate_hz)
        throw Error(ErrorCode::InvalidParams, "mixed sample rates in cohort");
    }
    if (s.meditation.condition != Condition::Meditation || s.rest.condition != Condition::Rest)
      throw Error(ErrorCode::InvalidParams, "subject " + s.subject_id + " has mislabeled recordings");
    const double ratio = static_cast<double>(s.meditation.n_samples()) / static_cast<double>(s.rest.n_samples());
    if (ratio < 0.8 || ratio > 1.25)
      throw Error(ErrorCode::InvalidParams, "subject " + s.subject_id + " class balance ratio out of [0.8, 1.25]");
  }
}

EpochSet CohortDataset::subject_epochs(std::size_t i, Eigen::Index epoch_len) const {
  const auto& s = subjects.at(i);
  const auto ordinal = static_cast<std::uint32_t>(i);
  EpochSet set = slice_epochs(s.meditation, epoch_len, epoch_len, ordinal);
  set.append(slice_epochs(s.rest, epoch_len, epoch_len, ordinal));
  return set;
}

}  // namespace medeeg
