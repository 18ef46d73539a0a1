#include "medeeg/cv.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <unordered_set>

#include "medeeg/csp.hpp"
#include "medeeg/error.hpp"
#include "medeeg/lda.hpp"

namespace medeeg::cv {
namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<EpochUid> uids_of(const EpochSet& set) {
  std::vector<EpochUid> out;
  out.reserve(set.size());
  for (const auto& e : set) out.push_back(e.uid);
  return out;
}

double percent(std::size_t correct, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

// Runs body(i) for i in [0, n), in parallel when requested, rethrowing the
// first captured exception on the calling thread.
template <typename F>
void for_each_job(std::size_t n, Exec exec, F&& body) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct CspFit {
  csp::ClassCovariance cov1, cov0;
};

CspFit fit_covariances(const EpochSet& train) {
  const auto med = train.of_class(Condition::Meditation);
  const auto rest = train.of_class(Condition::Rest);
  if (med.empty() || rest.empty()) throw Error(ErrorCode::SingleClass, "training fold lacks one class");
  return {csp::class_covariance(med), csp::class_covariance(rest)};
}

// Keeps the first `pairs` filters of each half of a bank's feature columns.
Matrix select_pairs(const Matrix& features, int max_pairs, int pairs) {
  Matrix out(features.rows(), 2 * pairs);
  out.leftCols(pairs) = features.leftCols(pairs);
  out.rightCols(pairs) = features.middleCols(max_pairs, pairs);
  return out;
}

double lda_accuracy(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                    std::span<const int> test_y) {
  const auto model = lda::fit_lda(train_x, train_y);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < test_x.rows(); ++i)
    correct += (lda::classify(model, test_x.row(i).transpose()) == test_y[static_cast<std::size_t>(i)]);
  return percent(correct, static_cast<std::size_t>(test_x.rows()));
}

struct Job {
  std::size_t scope{0};  // subject index (intra) or held-out subject (LOSO)
  int fold{0};
  std::uint64_t seed{0};
};

struct FoldData {
  EpochSet train, test;
};

class Harness {
 public:
  Harness(const CohortDataset& cohort, Eigen::Index epoch_len, CvMode mode, const Seeds& seeds, Exec exec)
      : cohort_(cohort), mode_(mode), seeds_(seeds) {
    cohort.validate();
    sets_.resize(cohort.size());
    for_each_job(cohort.size(), exec, [&](std::size_t i) { sets_[i] = cohort.subject_epochs(i, epoch_len); });
    if (mode == CvMode::IntraSubject10Fold) {
      for (std::size_t s = 0; s < sets_.size(); ++s) {
        plans_.push_back(plan_intra(sets_[s], mix_seed(seeds.plan, s)));
        for (int f = 0; f < plans_.back().n_folds; ++f) jobs_.push_back({s, f, job_seed(s, f)});
      }
    } else {
      plans_.push_back(plan_loso(cohort));
      for (int f = 0; f < plans_.back().n_folds; ++f) jobs_.push_back({static_cast<std::size_t>(f), f, job_seed(0, f)});
    }
  }

  const std::vector<Job>& jobs() const { return jobs_; }

  FoldData data(const Job& job) const {
    FoldData d;
    if (mode_ == CvMode::IntraSubject10Fold) {
      const auto& plan = plans_[job.scope];
      const auto tr = plan.train_indices(job.fold);
      const auto te = plan.test_indices(job.fold);
      d.train = sets_[job.scope].subset(tr);
      d.test = sets_[job.scope].subset(te);
    } else {
      const auto& plan = plans_.front();
      d.train = EpochSet(sets_.front().n_channels(), sets_.front().epoch_len());
      for (std::size_t s = 0; s < sets_.size(); ++s) {
        if (plan.fold_of[s] == job.fold)
          d.test.append(sets_[s]);
        else
          d.train.append(sets_[s]);
      }
    }
    return d;
  }

  std::string subject_of(const Job& job) const { return cohort_.subjects[job.scope].subject_id; }

 private:
  std::uint64_t job_seed(std::size_t scope, int fold) const {
    return mix_seed(seeds_.train, scope * 1024 + static_cast<std::size_t>(fold));
  }

  const CohortDataset& cohort_;
  CvMode mode_;
  Seeds seeds_;
  std::vector<EpochSet> sets_;
  std::vector<FoldPlan> plans_;
  std::vector<Job> jobs_;
};

}  // namespace

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::CspLda: return "CspLda";
    case Pipeline::CspLdaLstm: return "CspLdaLstm";
    case Pipeline::SvdNn: return "SvdNn";
  }
  return "?";
}

std::string_view to_string(CvMode m) {
  return m == CvMode::IntraSubject10Fold ? "IntraSubject10Fold" : "LeaveOneSubjectOut";
}

Pipeline parse_pipeline(std::string_view s) {
  for (auto p : {Pipeline::CspLda, Pipeline::CspLdaLstm, Pipeline::SvdNn})
    if (to_string(p) == s) return p;
  throw Error(ErrorCode::InvalidParams, "unknown pipeline '" + std::string(s) + "'");
}

CvMode parse_mode(std::string_view s) {
  if (s == "intra" || s == "IntraSubject10Fold") return CvMode::IntraSubject10Fold;
  if (s == "inter" || s == "loso" || s == "LeaveOneSubjectOut") return CvMode::LeaveOneSubjectOut;
  throw Error(ErrorCode::InvalidParams, "unknown mode '" + std::string(s) + "'");
}

Eigen::Index epoch_len_for(Pipeline p) { return p == Pipeline::SvdNn ? svdnn::kEpochLen : 256; }

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

FoldPlan plan_intra(const EpochSet& subject, std::uint64_t seed, int n_folds) {
  if (n_folds < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 folds");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < subject.size(); ++i) by_class[subject[i].label_bit()].push_back(i);
  for (const auto& c : by_class)
    if (c.size() < static_cast<std::size_t>(n_folds))
      throw Error(ErrorCode::TooFewEpochs, "each class needs at least " + std::to_string(n_folds) + " epochs");

  FoldPlan plan;
  plan.mode = CvMode::IntraSubject10Fold;
  plan.seed = seed;
  plan.n_folds = n_folds;
  plan.fold_of.assign(subject.size(), -1);
  std::mt19937_64 rng(seed);
  // Round-robin continues across classes so fold sizes differ by at most one.
  std::size_t next = 0;
  for (auto& c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    for (auto i : c) plan.fold_of[i] = static_cast<int>(next++ % static_cast<std::size_t>(n_folds));
  }
  return plan;
}

FoldPlan plan_loso(const CohortDataset& cohort) {
  if (cohort.size() < 2) throw Error(ErrorCode::TooFewSubjects, "leave-one-subject-out needs >= 2 subjects");
  FoldPlan plan;
  plan.mode = CvMode::LeaveOneSubjectOut;
  plan.n_folds = static_cast<int>(cohort.size());
  plan.fold_of.resize(cohort.size());
  std::iota(plan.fold_of.begin(), plan.fold_of.end(), 0);
  return plan;
}

ValidationSplit carve_validation(std::span<const std::size_t> train_fold, std::span<const int> labels,
                                 double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorCode::InvalidParams, "fraction must be in (0, 1)");
  std::vector<std::size_t> by_class[2];
  for (auto i : train_fold) {
    if (i >= labels.size()) throw Error(ErrorCode::UnknownEpoch, "train index out of range");
    by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  }
  for (const auto& c : by_class)
    if (c.size() < 10) throw Error(ErrorCode::TooFewEpochs, "validation carve needs >= 10 samples per class");

  ValidationSplit split;
  std::mt19937_64 rng(seed);
  for (auto& c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(c.size()))));
    split.val.insert(split.val.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.insert(split.train.end(), c.begin() + static_cast<std::ptrdiff_t>(n_val), c.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / n);
  return s;
}

bool leakage_free(std::span<const EpochUid> fit_uids, const EpochSet& test) {
  std::unordered_set<EpochUid> fitted(fit_uids.begin(), fit_uids.end());
  return std::none_of(test.begin(), test.end(), [&](const Epoch& e) { return fitted.count(e.uid) > 0; });
}

FoldOutcome run_csp_lda_fold(const EpochSet& train, const EpochSet& test, double alpha, int n_pairs) {
  const CspFit fit = fit_covariances(train);
  const auto bank = csp::fit_csp(fit.cov1, fit.cov0, alpha, n_pairs);
  FoldOutcome out;
  out.accuracy = lda_accuracy(csp::log_variance_features(train.epochs(), bank), train.labels(),
                              csp::log_variance_features(test.epochs(), bank), test.labels());
  out.n_test = test.size();
  out.fit_uids = uids_of(train);
  return out;
}

FoldOutcome run_lstm_fold(const EpochSet& train, const EpochSet& test, int n_pairs, const lstm::TrainConfig& cfg) {
  const EpochSet sub = lstm::split_subepochs(train);
  const CspFit fit = fit_covariances(sub);
  const auto bank = csp::fit_csp(fit.cov1, fit.cov0, 0.0, n_pairs);
  const auto model_lda = lda::fit_lda(csp::log_variance_features(sub.epochs(), bank), sub.labels());

  const auto train_seqs = lstm::build_sequences(train, bank, model_lda);
  const auto model = lstm::train_lstm(train_seqs, cfg);
  const auto test_seqs = lstm::build_sequences(test, bank, model_lda);
  const auto p = lstm::predict_lstm(model, test_seqs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) correct += ((p[i] > 0.5 ? 1 : 0) == test_seqs[i].label);

  FoldOutcome out;
  out.accuracy = percent(correct, p.size());
  out.n_test = test.size();
  out.fit_uids = uids_of(sub);
  for (const auto& s : train_seqs) out.fit_uids.push_back(s.uid);
  return out;
}

FoldOutcome run_svdnn_fold(const EpochSet& train, const EpochSet& test, const Hyperparams& hp, bool select, int k,
                           std::uint64_t seed) {
  const auto labels = train.labels();
  const auto idx = all_indices(train.size());
  const auto split = carve_validation(idx, labels, 0.10, mix_seed(seed, 7));
  const auto dm_train = svdnn::build_design_matrix(train.subset(split.train));
  const auto dm_val = svdnn::build_design_matrix(train.subset(split.val));

  svdnn::NnConfig cfg = hp.nn;
  cfg.seed = mix_seed(seed, 8);

  FoldOutcome out;
  svdnn::NnModel model;
  svdnn::SvdBasis basis;
  if (select) {
    auto sel = hp.refine_k ? svdnn::select_k_refined(dm_train, dm_val, hp.k_grid, cfg)
                           : svdnn::select_k(dm_train, dm_val, hp.k_grid, cfg);
    model = sel.model;
    basis = sel.basis;
    out.selection = std::move(sel);
  } else {
    basis = svdnn::fit_basis(dm_train, k);
    const svdnn::Labeled tr{svdnn::all_epoch_features(dm_train, basis), dm_train.labels};
    const svdnn::Labeled va{svdnn::all_epoch_features(dm_val, basis), dm_val.labels};
    model = svdnn::train_nn(tr, cfg, &va);
  }

  // Test rows are projected onto the training basis; nothing is fitted here.
  const auto dm_test = svdnn::build_design_matrix(test);
  const svdnn::Labeled te{svdnn::all_epoch_features(dm_test, basis), dm_test.labels};
  out.accuracy = svdnn::accuracy_pct(model, te);
  out.n_test = test.size();
  out.k = basis.k;
  out.fit_uids = dm_train.uids;
  out.fit_uids.insert(out.fit_uids.end(), dm_val.uids.begin(), dm_val.uids.end());
  return out;
}

CvReport run_experiment(const CohortDataset& cohort, Pipeline pipeline, const Hyperparams& hp, CvMode mode,
                        const Seeds& seeds, Exec exec) {
  Harness harness(cohort, epoch_len_for(pipeline), mode, seeds, exec);
  const auto& jobs = harness.jobs();
  std::vector<FoldOutcome> outcomes(jobs.size());

  auto run = [&](std::size_t j, bool select, int k) {
    const FoldData d = harness.data(jobs[j]);
    switch (pipeline) {
      case Pipeline::CspLda: outcomes[j] = run_csp_lda_fold(d.train, d.test, hp.alpha, hp.n_pairs); break;
      case Pipeline::CspLdaLstm: {
        auto cfg = hp.lstm;
        cfg.seed = jobs[j].seed;
        outcomes[j] = run_lstm_fold(d.train, d.test, hp.n_pairs, cfg);
        break;
      }
      case Pipeline::SvdNn: outcomes[j] = run_svdnn_fold(d.train, d.test, hp, select, k, jobs[j].seed); break;
    }
  };

  CvReport report;
  report.pipeline = pipeline;
  report.band = cohort.band;
  report.mode = mode;
  report.hyperparams = hp;
  report.seeds = seeds;

  const bool selecting = pipeline == Pipeline::SvdNn && !hp.fixed_k;
  if (!selecting) {
    for_each_job(jobs.size(), exec, [&](std::size_t j) { run(j, false, hp.fixed_k.value_or(0)); });
  } else {
    // Round one of every scope selects k on its validation carve; the choice
    // is then frozen for the remaining rounds of that scope.
    std::vector<std::size_t> first, rest;
    for (std::size_t j = 0; j < jobs.size(); ++j) (jobs[j].fold == 0 ? first : rest).push_back(j);
    for_each_job(first.size(), exec, [&](std::size_t i) { run(first[i], true, 0); });
    std::vector<int> frozen(jobs.size(), 0);
    for (std::size_t j : first) {
      const auto scope = mode == CvMode::IntraSubject10Fold ? jobs[j].scope : 0;
      for (std::size_t r : rest)
        if ((mode == CvMode::IntraSubject10Fold ? jobs[r].scope : 0) == scope) frozen[r] = outcomes[j].k;
      KSelectionAudit audit;
      audit.scope = mode == CvMode::IntraSubject10Fold ? harness.subject_of(jobs[j]) : "cohort";
      audit.selected_k = outcomes[j].k;
      audit.selected_in_fold = jobs[j].fold;
      audit.validation_accuracy = outcomes[j].selection->validation_accuracy;
      report.selections.push_back(std::move(audit));
    }
    for_each_job(rest.size(), exec, [&](std::size_t i) { run(rest[i], false, frozen[rest[i]]); });
    for (std::size_t a = 0; a < first.size(); ++a) {
      const auto scope = jobs[first[a]].scope;
      bool reused = true;
      for (std::size_t r : rest)
        if ((mode == CvMode::LeaveOneSubjectOut || jobs[r].scope == scope) && outcomes[r].k != outcomes[first[a]].k)
          reused = false;
      report.selections[a].frozen_reused = reused;
    }
  }

  std::vector<double> acc;
  report.leakage_audit_passed = true;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const FoldData d = harness.data(jobs[j]);
    FoldResult fr;
    fr.subject_id = harness.subject_of(jobs[j]);
    fr.fold = jobs[j].fold;
    fr.accuracy = outcomes[j].accuracy;
    fr.n_test = outcomes[j].n_test;
    fr.n_fit = std::unordered_set<EpochUid>(outcomes[j].fit_uids.begin(), outcomes[j].fit_uids.end()).size();
    fr.k = outcomes[j].k;
    fr.leakage_ok = leakage_free(outcomes[j].fit_uids, d.test);
    report.leakage_audit_passed = report.leakage_audit_passed && fr.leakage_ok;
    acc.push_back(fr.accuracy);
    report.folds.push_back(std::move(fr));
  }
  const auto s = summarize(acc);
  report.mean = s.mean;
  report.sd = s.sd;
  return report;
}

std::vector<CvReport> grid_sweep(const CohortDataset& cohort, std::span<const double> alphas,
                                 std::span<const int> pair_counts, CvMode mode, const Seeds& seeds, Exec exec) {
  if (alphas.empty() || pair_counts.empty()) throw Error(ErrorCode::InvalidParams, "sweep grids must be non-empty");
  const int max_pairs = *std::max_element(pair_counts.begin(), pair_counts.end());
  Harness harness(cohort, 256, mode, seeds, exec);
  const auto& jobs = harness.jobs();
  const std::size_t n_cells = alphas.size() * pair_counts.size();
  // acc[job][cell], cells ordered pair count outer, alpha inner.
  std::vector<std::vector<double>> acc(jobs.size(), std::vector<double>(n_cells));
  std::vector<std::vector<EpochUid>> fit_uids(jobs.size());

  for_each_job(jobs.size(), exec, [&](std::size_t j) {
    const FoldData d = harness.data(jobs[j]);
    const CspFit fit = fit_covariances(d.train);
    const auto ytr = d.train.labels();
    const auto yte = d.test.labels();
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      // Banks for fewer pairs are prefixes of each half of the widest bank.
      const auto bank = csp::fit_csp(fit.cov1, fit.cov0, alphas[a], max_pairs);
      const Matrix ftr = csp::log_variance_features(d.train.epochs(), bank);
      const Matrix fte = csp::log_variance_features(d.test.epochs(), bank);
      for (std::size_t p = 0; p < pair_counts.size(); ++p) {
        const int pairs = pair_counts[p];
        acc[j][p * alphas.size() + a] = lda_accuracy(select_pairs(ftr, max_pairs, pairs), ytr,
                                                     select_pairs(fte, max_pairs, pairs), yte);
      }
    }
    fit_uids[j] = uids_of(d.train);
  });

  std::vector<bool> clean(jobs.size());
  std::vector<std::size_t> n_test(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto test = harness.data(jobs[j]).test;
    clean[j] = leakage_free(fit_uids[j], test);
    n_test[j] = test.size();
  }

  std::vector<CvReport> reports;
  for (std::size_t p = 0; p < pair_counts.size(); ++p) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      CvReport r;
      r.pipeline = Pipeline::CspLda;
      r.band = cohort.band;
      r.mode = mode;
      r.hyperparams.alpha = alphas[a];
      r.hyperparams.n_pairs = pair_counts[p];
      r.seeds = seeds;
      r.leakage_audit_passed = true;
      std::vector<double> values;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        FoldResult fr;
        fr.subject_id = harness.subject_of(jobs[j]);
        fr.fold = jobs[j].fold;
        fr.accuracy = acc[j][p * alphas.size() + a];
        fr.n_test = n_test[j];
        fr.n_fit = fit_uids[j].size();
        fr.leakage_ok = clean[j];
        r.leakage_audit_passed = r.leakage_audit_passed && clean[j];
        values.push_back(fr.accuracy);
        r.folds.push_back(std::move(fr));
      }
      const auto s = summarize(values);
      r.mean = s.mean;
      r.sd = s.sd;
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<double> default_alphas() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 0.0};
}

std::vector<int> default_pair_counts() { return {2, 3, 4, 5, 6, 7, 8, 9, 10}; }

}  // namespace medeeg::cv
