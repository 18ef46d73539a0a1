#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medeeg/core.hpp"
#include "medeeg/exec.hpp"
#include "medeeg/lstm.hpp"
#include "medeeg/svdnn.hpp"

namespace medeeg::cv {

enum class Pipeline { CspLda, CspLdaLstm, SvdNn };
enum class CvMode { IntraSubject10Fold, LeaveOneSubjectOut };

std::string_view to_string(Pipeline p);
std::string_view to_string(CvMode m);
Pipeline parse_pipeline(std::string_view s);
CvMode parse_mode(std::string_view s);  // accepts "intra" / "inter" as well as the enum names

/// Epoch length each pipeline slices its recordings into.
Eigen::Index epoch_len_for(Pipeline p);

struct FoldPlan {
  CvMode mode{CvMode::IntraSubject10Fold};
  std::uint64_t seed{0};
  int n_folds{0};
  std::vector<int> fold_of;  // per epoch (intra) or per subject (LOSO)

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

/// Stratified 10-fold plan over one subject's epochs.
FoldPlan plan_intra(const EpochSet& subject, std::uint64_t seed, int n_folds = 10);

/// One fold per subject.
FoldPlan plan_loso(const CohortDataset& cohort);

struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Stratified random split of train_fold (indices into labels) into train'
/// and a validation part holding `fraction` of each class.
ValidationSplit carve_validation(std::span<const std::size_t> train_fold, std::span<const int> labels,
                                 double fraction, std::uint64_t seed);

struct Seeds {
  std::uint64_t cohort{0};
  std::uint64_t plan{0};
  std::uint64_t train{0};
};

struct Hyperparams {
  double alpha{0.0};
  int n_pairs{10};
  std::vector<int> k_grid = svdnn::default_k_grid();
  bool refine_k{true};
  std::optional<int> fixed_k;  // skips selection when set
  lstm::TrainConfig lstm{};
  svdnn::NnConfig nn{};
};

struct FoldResult {
  std::string subject_id;  // intra: the subject; LOSO: the held-out subject
  int fold{0};
  double accuracy{0.0};  // percent
  std::size_t n_test{0};
  std::size_t n_fit{0};  // epochs that entered any fitted component
  int k{-1};             // SvdNn only
  bool leakage_ok{false};
};

struct KSelectionAudit {
  std::string scope;  // subject id (intra) or "cohort" (LOSO)
  int selected_k{0};
  int selected_in_fold{0};
  std::vector<std::pair<int, double>> validation_accuracy;
  bool frozen_reused{false};  // every later fold in scope used selected_k
};

struct CvReport {
  Pipeline pipeline{Pipeline::CspLda};
  BandDef band;
  CvMode mode{CvMode::IntraSubject10Fold};
  Hyperparams hyperparams;
  Seeds seeds;
  std::vector<FoldResult> folds;
  double mean{0.0};  // percent, arithmetic mean over folds
  double sd{0.0};    // percent, population SD over folds
  std::vector<KSelectionAudit> selections;
  bool leakage_audit_passed{false};
};

struct Summary {
  double mean{0.0};
  double sd{0.0};
};

/// Arithmetic mean and population standard deviation.
Summary summarize(std::span<const double> values);

// Outcome of one fold of one pipeline, including the ids of every epoch that
// was used to fit anything.
struct FoldOutcome {
  double accuracy{0.0};
  std::size_t n_test{0};
  std::vector<EpochUid> fit_uids;
  int k{-1};
  std::optional<svdnn::KSelection> selection;
};

FoldOutcome run_csp_lda_fold(const EpochSet& train, const EpochSet& test, double alpha, int n_pairs);
FoldOutcome run_lstm_fold(const EpochSet& train, const EpochSet& test, int n_pairs, const lstm::TrainConfig& cfg);
/// select = true runs k selection on a validation carve of train; otherwise
/// uses k. The validation carve also drives early stopping.
FoldOutcome run_svdnn_fold(const EpochSet& train, const EpochSet& test, const Hyperparams& hp, bool select, int k,
                           std::uint64_t seed);

/// True when no test uid appears among the fit uids.
bool leakage_free(std::span<const EpochUid> fit_uids, const EpochSet& test);

CvReport run_experiment(const CohortDataset& cohort, Pipeline pipeline, const Hyperparams& hp, CvMode mode,
                        const Seeds& seeds, Exec exec = Exec::Parallel);

/// CSP-LDA over the alpha x n_pairs grid; one report per cell in row-major
/// order (pair counts outer, alphas inner). Covariances are shared per fold.
std::vector<CvReport> grid_sweep(const CohortDataset& cohort, std::span<const double> alphas,
                                 std::span<const int> pair_counts, CvMode mode, const Seeds& seeds,
                                 Exec exec = Exec::Parallel);

/// Alpha values 1e-1 .. 1e-10 followed by 0 (classical CSP).
std::vector<double> default_alphas();
std::vector<int> default_pair_counts();  // 2..10

}  // namespace medeeg::cv
