#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "medeeg/adam.hpp"
#include "medeeg/core.hpp"
#include "medeeg/exec.hpp"

namespace medeeg::svdnn {

inline constexpr Eigen::Index kDefaultWidth = 384;
inline constexpr Eigen::Index kEpochLen = 128;

// Epochs flattened sample-major (column-wise over channels x samples), stacked,
// and cut row-major into rows of `width` values. Every epoch owns a contiguous
// run of rows_per_epoch rows.
struct DesignMatrix {
  Matrix matrix;
  std::vector<std::size_t> row_owner;  // epoch index per row
  std::vector<int> labels;             // per epoch
  std::vector<EpochUid> uids;          // per epoch
  Eigen::Index width{kDefaultWidth};
  Eigen::Index rows_per_epoch{0};

  std::size_t n_epochs() const { return labels.size(); }
};

DesignMatrix build_design_matrix(const EpochSet& epochs, Eigen::Index width = kDefaultWidth);

// Full right-singular spectrum of a design matrix; truncations are cheap views.
struct SvdSpectrum {
  Matrix v;      // width x r
  Vector sigma;  // r, descending
};

struct SvdBasis {
  Matrix v_k;  // width x k, column-orthonormal
  Vector sigma;
  int k{0};
};

SvdSpectrum fit_spectrum(const DesignMatrix& dm);
SvdBasis truncate(const SvdSpectrum& spectrum, int k);

/// Top-k right singular vectors of dm.matrix. Throws KOutOfRange unless
/// 1 <= k <= min(rows, width).
SvdBasis fit_basis(const DesignMatrix& dm, int k);

/// Mean over the epoch's rows of row * V_k.
Vector epoch_features(const DesignMatrix& dm, const SvdBasis& basis, std::size_t epoch_index);

/// epoch_features for every epoch, one row each.
Matrix all_epoch_features(const DesignMatrix& dm, const SvdBasis& basis, Exec exec = Exec::Parallel);

/// First hidden layer width: 64 when the input has more than 128 dimensions, else 32.
inline int first_layer_width(Eigen::Index input_dim) { return input_dim > 128 ? 64 : 32; }

struct NnConfig {
  AdamConfig adam{4e-4, 0.9, 0.999, 1e-8};
  int batch{32};
  int max_epochs{100};
  int patience{10};  // early stop after this many epochs without validation improvement
  std::uint64_t seed{0};
};

// input -> ReLU(h1) -> ReLU(h2) -> logistic. Flat parameter layout:
//   W1 (h1 x in) | b1 | W2 (h2 x h1) | b2 | w3 (h2) | b3, column-major.
class NnModel {
 public:
  NnModel() = default;
  NnModel(int input, int h1, int h2);  // all parameters zero

  /// The architecture for a k-dimensional input: k -> first_layer_width(k) -> 8 -> 1.
  static NnModel for_input(int k);
  /// Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed);

  int input() const { return in_; }
  int hidden1() const { return h1_; }
  int hidden2() const { return h2_; }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  // Per-dimension standardization applied to raw features.
  Vector feature_shift;
  Vector feature_scale;
  double final_train_loss{0.0};
  int epochs_trained{0};

 private:
  int in_{0}, h1_{0}, h2_{0};
  Vector params_;
};

struct LossGrad {
  double loss{0.0};
  Vector grad;
};

/// Mean BCE over the rows of x and its gradient. x is raw (unstandardized).
LossGrad nn_loss_and_gradient(const NnModel& model, const Matrix& x, std::span<const int> labels);

struct Labeled {
  Matrix x;  // one sample per row
  std::vector<int> y;
};

NnModel train_nn(const Labeled& train, const NnConfig& cfg, const Labeled* validation = nullptr);

double predict_nn(const NnModel& model, const Vector& feature);
std::vector<double> predict_nn(const NnModel& model, const Matrix& features);

/// Percentage of rows whose p > 0.5 decision matches the label.
double accuracy_pct(const NnModel& model, const Labeled& data);

struct KSelection {
  int k{0};
  std::vector<std::pair<int, double>> validation_accuracy;  // (k, % correct) in evaluation order
  NnModel model;                                            // trained at the selected k
  SvdBasis basis;
};

/// Fits the basis on train, then for each k trains a network and scores it on
/// val. Highest validation accuracy wins; ties go to the smaller k.
KSelection select_k(const DesignMatrix& train, const DesignMatrix& val, std::span<const int> grid,
                    const NnConfig& cfg);

/// select_k over grid, then a second pass at winner +/- {4, 8}.
KSelection select_k_refined(const DesignMatrix& train, const DesignMatrix& val, std::span<const int> grid,
                            const NnConfig& cfg);

std::vector<int> default_k_grid();

void save_nn(const NnModel& model, const SvdBasis& basis, std::ostream& out);
std::pair<NnModel, SvdBasis> load_nn(std::istream& in);

}  // namespace medeeg::svdnn
