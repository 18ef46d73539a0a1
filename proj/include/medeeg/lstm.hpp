#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "medeeg/adam.hpp"
#include "medeeg/core.hpp"
#include "medeeg/csp.hpp"
#include "medeeg/lda.hpp"

namespace medeeg::lstm {

inline constexpr Eigen::Index kSubEpochLen = 64;

struct ScalarSequence {
  std::vector<double> values;
  int label{0};
  std::string subject_id;
  EpochUid uid{0};  // parent window
};

struct TrainConfig {
  int hidden{200};
  int epochs{20};
  int batch{32};
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed{0};
};

// Single-layer LSTM with a logistic output on the final hidden state.
// Parameters live in one flat vector laid out as
//   W_x (4H x I) | W_h (4H x H) | b (4H) | w_out (H) | b_out (1)
// with column-major matrices and gate blocks ordered input, forget, cell, output.
class LstmModel {
 public:
  LstmModel() = default;
  explicit LstmModel(int hidden, int input = 1);  // all parameters zero

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, forget-gate bias +1.
  static LstmModel initialized(int hidden, std::uint64_t seed, int input = 1);
  static Eigen::Index param_count(int hidden, int input);

  int hidden() const { return hidden_; }
  int input() const { return input_; }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  // Affine standardization applied to raw sequence values before the cell.
  double input_shift{0.0};
  double input_scale{1.0};

 private:
  int hidden_{0};
  int input_{1};
  Vector params_;
};

struct LossGrad {
  double loss{0.0};
  Vector grad;
};

struct TrainLog {
  double initial_loss{0.0};
  std::vector<double> epoch_loss;  // mean training loss of each epoch, after its updates
};

/// Splits every epoch into consecutive sub_len windows, re-centered. Sub-epochs
/// keep the parent's uid and label.
EpochSet split_subepochs(const EpochSet& epochs, Eigen::Index sub_len = kSubEpochLen);

/// One sequence per parent epoch: the LDA projection of the log-variance
/// features of each sub_len sub-epoch, in time order.
std::vector<ScalarSequence> build_sequences(const EpochSet& epochs, const csp::SpatialFilterBank& bank,
                                            const lda::LdaModel& lda, Eigen::Index sub_len = kSubEpochLen);

/// Mean binary cross-entropy over seqs and its gradient with respect to params().
LossGrad loss_and_gradient(const LstmModel& model, std::span<const ScalarSequence> seqs);

LstmModel train_lstm(std::span<const ScalarSequence> seqs, const TrainConfig& cfg, TrainLog* log = nullptr);

double predict_lstm(const LstmModel& model, const ScalarSequence& seq);
std::vector<double> predict_lstm(const LstmModel& model, std::span<const ScalarSequence> seqs);

void save_lstm(const LstmModel& model, std::ostream& out);
LstmModel load_lstm(std::istream& in);

}  // namespace medeeg::lstm
