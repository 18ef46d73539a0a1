#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace medeeg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kCanonicalRate = 128.0;

enum class Band { Alpha, Beta, LowGamma, HighGamma };

struct BandDef {
  Band name{Band::Alpha};
  double lo_hz{0.0};
  double hi_hz{0.0};
};

/// The four analysis bands, in ascending order.
std::array<BandDef, 4> band_definitions();
BandDef band_def(Band band);
std::string_view to_string(Band band);
Band parse_band(std::string_view name);

enum class Condition : std::uint8_t { Rest = 0, Meditation = 1 };

/// Binary class label: Meditation = 1, Rest = 0.
constexpr int label_of(Condition c) { return c == Condition::Meditation ? 1 : 0; }
std::string_view to_string(Condition c);
Condition parse_condition(std::string_view name);

// Continuous multi-channel recording of one subject in one condition.
// data is channels x samples.
struct Recording {
  std::string subject_id;
  Condition condition{Condition::Rest};
  double sample_rate_hz{kCanonicalRate};
  Matrix data;

  Eigen::Index n_channels() const { return data.rows(); }
  Eigen::Index n_samples() const { return data.cols(); }

  // Throws InvalidParams on non-positive rate, empty data or non-finite values.
  void validate() const;
};

// Globally unique id of an epoch inside a cohort: (subject ordinal, condition,
// parent window). Used by the cross-validation leakage audit.
using EpochUid = std::uint64_t;

constexpr EpochUid make_uid(std::uint32_t subject_ordinal, Condition c, std::uint32_t parent_index) {
  return (static_cast<EpochUid>(subject_ordinal) << 32) |
         (static_cast<EpochUid>(label_of(c)) << 31) | parent_index;
}

// Epoch samples are immutable and shared, so fold workers can hold subsets of
// a cohort without copying the underlying data.
struct Epoch {
  std::shared_ptr<const Matrix> samples;  // channels x L, mean-removed per channel
  Condition label{Condition::Rest};
  std::string subject_id;
  std::size_t parent_index{0};
  EpochUid uid{0};

  const Matrix& data() const { return *samples; }
  int label_bit() const { return label_of(label); }
};

/// Builds an epoch, centering data per channel.
Epoch make_epoch(Matrix data, Condition label, std::string subject_id, std::size_t parent_index, EpochUid uid);

/// Removes the per-channel mean in place.
void center_rows(Matrix& m);

class EpochSet {
 public:
  EpochSet() = default;
  EpochSet(Eigen::Index n_channels, Eigen::Index epoch_len)
      : n_channels_(n_channels), epoch_len_(epoch_len) {}

  void push_back(Epoch e);
  void append(const EpochSet& other);

  std::size_t size() const { return epochs_.size(); }
  bool empty() const { return epochs_.empty(); }
  const Epoch& operator[](std::size_t i) const { return epochs_[i]; }
  std::span<const Epoch> epochs() const { return epochs_; }
  Eigen::Index n_channels() const { return n_channels_; }
  Eigen::Index epoch_len() const { return epoch_len_; }

  std::size_t count(Condition c) const;
  bool has_both_labels() const { return count(Condition::Rest) > 0 && count(Condition::Meditation) > 0; }
  std::vector<int> labels() const;

  EpochSet subset(std::span<const std::size_t> indices) const;
  // Epochs with the given label, in order.
  std::vector<Epoch> of_class(Condition c) const;

  auto begin() const { return epochs_.begin(); }
  auto end() const { return epochs_.end(); }

 private:
  std::vector<Epoch> epochs_;
  Eigen::Index n_channels_{0};
  Eigen::Index epoch_len_{0};
};

/// Cuts rec into windows of epoch_len samples every stride samples. Each epoch
/// is mean-centered per channel and labeled with rec.condition. The uid uses
/// subject_ordinal so that epochs from different subjects never collide.
EpochSet slice_epochs(const Recording& rec, Eigen::Index epoch_len, Eigen::Index stride,
                      std::uint32_t subject_ordinal = 0);

struct SubjectData {
  std::string subject_id;
  Recording meditation;
  Recording rest;
};

// Band-limited recordings of a cohort. Pipelines slice their own epoch lengths.
struct CohortDataset {
  std::vector<SubjectData> subjects;
  BandDef band;

  std::size_t size() const { return subjects.size(); }

  // Validates shapes, rates and the per-subject class balance ratio [0.8, 1.25].
  void validate() const;

  /// Both conditions of subject i sliced into non-overlapping epochs.
  EpochSet subject_epochs(std::size_t i, Eigen::Index epoch_len) const;
};

}  // namespace medeeg
