#include "medeeg/svdnn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "medeeg/binio.hpp"
#include "medeeg/error.hpp"
#include "medeeg/numerics.hpp"

namespace medeeg::svdnn {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutVecMap = Eigen::Map<Vector>;

struct Offsets {
  Eigen::Index w1, b1, w2, b2, w3, b3, total;
};

Offsets offsets(int in, int h1, int h2) {
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + static_cast<Eigen::Index>(h1) * in;
  o.w2 = o.b1 + h1;
  o.b2 = o.w2 + static_cast<Eigen::Index>(h2) * h1;
  o.w3 = o.b2 + h2;
  o.b3 = o.w3 + h2;
  o.total = o.b3 + 1;
  return o;
}

Matrix standardized_t(const NnModel& m, const Matrix& x) {
  if (x.cols() != m.input()) throw Error(ErrorCode::DimensionMismatch, "feature dimension differs from model input");
  Matrix xt = x.transpose();
  if (m.feature_shift.size() == m.input()) {
    xt.colwise() -= m.feature_shift;
    xt.array().colwise() *= m.feature_scale.array();
  }
  return xt;
}

struct Forward {
  Matrix z1, a1, z2, a2;
  Eigen::RowVectorXd logit;
};

Forward forward(const NnModel& m, const Matrix& xt) {
  const auto o = offsets(m.input(), m.hidden1(), m.hidden2());
  const double* p = m.params().data();
  ConstMap w1(p + o.w1, m.hidden1(), m.input());
  ConstVecMap b1(p + o.b1, m.hidden1());
  ConstMap w2(p + o.w2, m.hidden2(), m.hidden1());
  ConstVecMap b2(p + o.b2, m.hidden2());
  ConstVecMap w3(p + o.w3, m.hidden2());
  Forward f;
  f.z1 = w1 * xt;
  f.z1.colwise() += b1;
  f.a1 = f.z1.cwiseMax(0.0);
  f.z2 = w2 * f.a1;
  f.z2.colwise() += b2;
  f.a2 = f.z2.cwiseMax(0.0);
  f.logit = (w3.transpose() * f.a2).array() + p[o.b3];
  return f;
}

LossGrad loss_grad_t(const NnModel& m, const Matrix& xt, std::span<const int> y) {
  const auto o = offsets(m.input(), m.hidden1(), m.hidden2());
  const double* p = m.params().data();
  ConstMap w2(p + o.w2, m.hidden2(), m.hidden1());
  ConstVecMap w3(p + o.w3, m.hidden2());
  const Forward f = forward(m, xt);
  const auto n = xt.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossGrad r;
  r.grad = Vector::Zero(o.total);
  double* g = r.grad.data();
  Eigen::RowVectorXd dlogit(n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int label = y[static_cast<std::size_t>(j)];
    loss += bce_with_logit(f.logit(j), label);
    dlogit(j) = (logistic(f.logit(j)) - label) * inv_n;
  }
  r.loss = loss * inv_n;

  MutVecMap(g + o.w3, m.hidden2()) = f.a2 * dlogit.transpose();
  g[o.b3] = dlogit.sum();
  Matrix dz2 = (w3 * dlogit).cwiseProduct(Matrix((f.z2.array() > 0.0).cast<double>()));
  MutMap(g + o.w2, m.hidden2(), m.hidden1()) = dz2 * f.a1.transpose();
  MutVecMap(g + o.b2, m.hidden2()) = dz2.rowwise().sum();
  Matrix dz1 = (w2.transpose() * dz2).cwiseProduct(Matrix((f.z1.array() > 0.0).cast<double>()));
  MutMap(g + o.w1, m.hidden1(), m.input()) = dz1 * xt.transpose();
  MutVecMap(g + o.b1, m.hidden1()) = dz1.rowwise().sum();
  return r;
}

void check_both_labels(std::span<const int> y) {
  const bool has1 = std::find(y.begin(), y.end(), 1) != y.end();
  const bool has0 = std::find(y.begin(), y.end(), 0) != y.end();
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "training data needs both labels");
}

Labeled featurize(const DesignMatrix& dm, const SvdBasis& basis) {
  return {all_epoch_features(dm, basis), dm.labels};
}

void check_k(const DesignMatrix& dm, int k) {
  const auto max_k = std::min(dm.matrix.rows(), dm.width);
  if (k < 1 || k > max_k)
    throw Error(ErrorCode::KOutOfRange, "k = " + std::to_string(k) + " outside [1, " + std::to_string(max_k) + "]");
}

struct Evaluator {
  const DesignMatrix& train;
  const DesignMatrix& val;
  const NnConfig& cfg;
  SvdSpectrum spectrum;
  KSelection best;
  double best_acc{-1.0};

  Evaluator(const DesignMatrix& t, const DesignMatrix& v, const NnConfig& c)
      : train(t), val(v), cfg(c), spectrum(fit_spectrum(t)) {
    if (v.width != t.width) throw Error(ErrorCode::DimensionMismatch, "train and validation widths differ");
  }

  bool evaluated(int k) const {
    return std::any_of(best.validation_accuracy.begin(), best.validation_accuracy.end(),
                       [k](const auto& e) { return e.first == k; });
  }

  void evaluate(int k) {
    if (evaluated(k)) return;
    SvdBasis basis = truncate(spectrum, k);
    const Labeled tr = featurize(train, basis);
    const Labeled va = featurize(val, basis);
    NnModel model = train_nn(tr, cfg, &va);
    const double acc = accuracy_pct(model, va);
    best.validation_accuracy.emplace_back(k, acc);
    if (best_acc < 0.0 || acc > best_acc || (acc == best_acc && k < best.k)) {
      best_acc = acc;
      best.k = k;
      best.model = std::move(model);
      best.basis = std::move(basis);
    }
  }
};

}  // namespace

DesignMatrix build_design_matrix(const EpochSet& epochs, Eigen::Index width) {
  if (width < 1) throw Error(ErrorCode::InvalidParams, "width must be positive");
  const Eigen::Index per_epoch = epochs.n_channels() * epochs.epoch_len();
  if (per_epoch % width != 0)
    throw Error(ErrorCode::NotDivisible, std::to_string(epochs.n_channels()) + " x " +
                                             std::to_string(epochs.epoch_len()) + " = " + std::to_string(per_epoch) +
                                             " values per epoch; remainder " + std::to_string(per_epoch % width) +
                                             " modulo width " + std::to_string(width));
  DesignMatrix dm;
  dm.width = width;
  dm.rows_per_epoch = per_epoch / width;
  dm.matrix.resize(dm.rows_per_epoch * static_cast<Eigen::Index>(epochs.size()), width);
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    // Column-major storage of a channels x samples matrix is exactly its
    // column-wise (sample-major) flattening.
    Eigen::Map<const RowMajor> rows(epochs[e].data().data(), dm.rows_per_epoch, width);
    dm.matrix.middleRows(static_cast<Eigen::Index>(e) * dm.rows_per_epoch, dm.rows_per_epoch) = rows;
    dm.row_owner.insert(dm.row_owner.end(), static_cast<std::size_t>(dm.rows_per_epoch), e);
    dm.labels.push_back(epochs[e].label_bit());
    dm.uids.push_back(epochs[e].uid);
  }
  return dm;
}

SvdSpectrum fit_spectrum(const DesignMatrix& dm) {
  if (dm.matrix.rows() == 0) throw Error(ErrorCode::InvalidArgument, "empty design matrix");
  auto r = numerics::svd(dm.matrix, 64, false);
  return {std::move(r.v), std::move(r.sigma)};
}

SvdBasis truncate(const SvdSpectrum& spectrum, int k) {
  if (k < 1 || k > spectrum.v.cols())
    throw Error(ErrorCode::KOutOfRange, "k = " + std::to_string(k) + " outside [1, " + std::to_string(spectrum.v.cols()) + "]");
  return {spectrum.v.leftCols(k), spectrum.sigma.head(k), k};
}

SvdBasis fit_basis(const DesignMatrix& dm, int k) {
  check_k(dm, k);
  return truncate(fit_spectrum(dm), k);
}

Vector epoch_features(const DesignMatrix& dm, const SvdBasis& basis, std::size_t epoch_index) {
  if (epoch_index >= dm.n_epochs()) throw Error(ErrorCode::UnknownEpoch, "epoch " + std::to_string(epoch_index) + " has no rows");
  if (basis.v_k.rows() != dm.width) throw Error(ErrorCode::DimensionMismatch, "basis width differs from design matrix");
  const auto first = static_cast<Eigen::Index>(epoch_index) * dm.rows_per_epoch;
  const Eigen::RowVectorXd mean_row = dm.matrix.middleRows(first, dm.rows_per_epoch).colwise().mean();
  return (mean_row * basis.v_k).transpose();
}

Matrix all_epoch_features(const DesignMatrix& dm, const SvdBasis& basis, Exec exec) {
  const auto n = static_cast<Eigen::Index>(dm.n_epochs());
  Matrix out(n, basis.k);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < n; ++e) out.row(e) = epoch_features(dm, basis, static_cast<std::size_t>(e)).transpose();
  } else {
    for (Eigen::Index e = 0; e < n; ++e) out.row(e) = epoch_features(dm, basis, static_cast<std::size_t>(e)).transpose();
  }
  return out;
}

NnModel::NnModel(int input, int h1, int h2) : in_(input), h1_(h1), h2_(h2) {
  if (input < 1 || h1 < 1 || h2 < 1) throw Error(ErrorCode::InvalidParams, "layer sizes must be positive");
  params_ = Vector::Zero(offsets(input, h1, h2).total);
}

NnModel NnModel::for_input(int k) { return NnModel(k, first_layer_width(k), 8); }

void NnModel::initialize(std::uint64_t seed) {
  const auto o = offsets(in_, h1_, h2_);
  params_.setZero();
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::Index begin, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fan_in) * fan_out; ++i) params_(begin + i) = dist(rng);
  };
  fill(o.w1, in_, h1_);
  fill(o.w2, h1_, h2_);
  fill(o.w3, h2_, 1);
}

LossGrad nn_loss_and_gradient(const NnModel& model, const Matrix& x, std::span<const int> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in count");
  return loss_grad_t(model, standardized_t(model, x), labels);
}

NnModel train_nn(const Labeled& train, const NnConfig& cfg, const Labeled* validation) {
  check_both_labels(train.y);
  if (static_cast<std::size_t>(train.x.rows()) != train.y.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in count");
  if (cfg.batch < 1 || cfg.max_epochs < 0) throw Error(ErrorCode::InvalidParams, "bad NN training config");

  NnModel model = NnModel::for_input(static_cast<int>(train.x.cols()));
  model.initialize(cfg.seed);
  model.feature_shift = train.x.colwise().mean().transpose();
  const Matrix centered = train.x.rowwise() - model.feature_shift.transpose();
  // One scale for every coordinate: per-coordinate scaling would blow the
  // near-null singular directions up to the size of the informative ones.
  const double rms = std::sqrt(centered.squaredNorm() / static_cast<double>(centered.size()));
  model.feature_scale = Vector::Constant(train.x.cols(), rms > 1e-12 ? 1.0 / rms : 1.0);

  const Matrix xt = standardized_t(model, train.x);
  Matrix val_t;
  if (validation) val_t = standardized_t(model, validation->x);

  Adam adam(model.params().size(), cfg.adam);
  std::mt19937_64 rng(mix_seed(cfg.seed, 1));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(xt.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Vector best_params = model.params();
  double best_val = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  int epoch = 0;
  for (; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Matrix xb(xt.rows(), static_cast<Eigen::Index>(stop - start));
      std::vector<int> yb;
      for (std::size_t j = start; j < stop; ++j) {
        xb.col(static_cast<Eigen::Index>(j - start)) = xt.col(order[j]);
        yb.push_back(train.y[static_cast<std::size_t>(order[j])]);
      }
      LossGrad lg = loss_grad_t(model, xb, yb);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
        throw Error(ErrorCode::NonFiniteLoss, "NN loss became non-finite at epoch " + std::to_string(epoch));
      adam.step(model.params(), lg.grad);
    }
    if (validation) {
      const double vl = loss_grad_t(model, val_t, validation->y).loss;
      if (vl < best_val) {
        best_val = vl;
        best_params = model.params();
        stagnant = 0;
      } else if (++stagnant >= cfg.patience) {
        ++epoch;
        break;
      }
    }
  }
  if (validation && std::isfinite(best_val)) model.params() = best_params;
  model.epochs_trained = epoch;
  model.final_train_loss = loss_grad_t(model, xt, train.y).loss;
  return model;
}

std::vector<double> predict_nn(const NnModel& model, const Matrix& features) {
  const Forward f = forward(model, standardized_t(model, features));
  std::vector<double> out;
  for (Eigen::Index j = 0; j < f.logit.size(); ++j) out.push_back(logistic(f.logit(j)));
  return out;
}

double predict_nn(const NnModel& model, const Vector& feature) {
  return predict_nn(model, Matrix(feature.transpose())).front();
}

double accuracy_pct(const NnModel& model, const Labeled& data) {
  if (data.y.empty()) return 0.0;
  const auto p = predict_nn(model, data.x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) correct += ((p[i] > 0.5 ? 1 : 0) == data.y[i]);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(p.size());
}

std::vector<int> default_k_grid() { return {8, 16, 32, 64, 96, 128, 160, 192, 224, 256, 320, 384}; }

KSelection select_k(const DesignMatrix& train, const DesignMatrix& val, std::span<const int> grid, const NnConfig& cfg) {
  if (grid.empty()) throw Error(ErrorCode::InvalidParams, "k grid is empty");
  for (int k : grid) check_k(train, k);
  Evaluator ev(train, val, cfg);
  for (int k : grid) ev.evaluate(k);
  return std::move(ev.best);
}

KSelection select_k_refined(const DesignMatrix& train, const DesignMatrix& val, std::span<const int> grid,
                            const NnConfig& cfg) {
  if (grid.empty()) throw Error(ErrorCode::InvalidParams, "k grid is empty");
  for (int k : grid) check_k(train, k);
  Evaluator ev(train, val, cfg);
  for (int k : grid) ev.evaluate(k);
  const int winner = ev.best.k;
  const auto max_k = static_cast<int>(std::min(train.matrix.rows(), train.width));
  for (int delta : {-8, -4, 4, 8}) {
    const int k = winner + delta;
    if (k >= 1 && k <= max_k) ev.evaluate(k);
  }
  return std::move(ev.best);
}

// Blob layout (little-endian): "MSNN" | version u32 | input u32 | h1 u32 | h2 u32 |
// n_params u32 | params f32[] | feature_shift f32[input] | feature_scale f32[input] |
// width u32 | k u32 | sigma f32[k] | V_k f32[width * k] column-major.
void save_nn(const NnModel& model, const SvdBasis& basis, std::ostream& out) {
  binio::put_magic(out, "MSNN");
  binio::put_uint<std::uint32_t>(out, 1);
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.input()));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.hidden1()));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.hidden2()));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.params().size()));
  for (double v : model.params()) binio::put_f32(out, static_cast<float>(v));
  for (Eigen::Index i = 0; i < model.input(); ++i)
    binio::put_f32(out, static_cast<float>(model.feature_shift.size() ? model.feature_shift(i) : 0.0));
  for (Eigen::Index i = 0; i < model.input(); ++i)
    binio::put_f32(out, static_cast<float>(model.feature_scale.size() ? model.feature_scale(i) : 1.0));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(basis.v_k.rows()));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(basis.k));
  for (Eigen::Index i = 0; i < basis.k; ++i) binio::put_f32(out, static_cast<float>(basis.sigma(i)));
  for (Eigen::Index j = 0; j < basis.v_k.cols(); ++j)
    for (Eigen::Index i = 0; i < basis.v_k.rows(); ++i) binio::put_f32(out, static_cast<float>(basis.v_k(i, j)));
}

std::pair<NnModel, SvdBasis> load_nn(std::istream& in) {
  binio::expect_magic(in, "MSNN");
  if (binio::get_uint<std::uint32_t>(in) != 1) throw Error(ErrorCode::FormatError, "unsupported MSNN version");
  const auto input = static_cast<int>(binio::get_uint<std::uint32_t>(in));
  const auto h1 = static_cast<int>(binio::get_uint<std::uint32_t>(in));
  const auto h2 = static_cast<int>(binio::get_uint<std::uint32_t>(in));
  NnModel m(input, h1, h2);
  const auto n = binio::get_uint<std::uint32_t>(in);
  if (static_cast<Eigen::Index>(n) != m.params().size()) throw Error(ErrorCode::FormatError, "MSNN parameter count mismatch");
  for (std::uint32_t i = 0; i < n; ++i) m.params()(i) = binio::get_f32(in);
  m.feature_shift.resize(input);
  m.feature_scale.resize(input);
  for (int i = 0; i < input; ++i) m.feature_shift(i) = binio::get_f32(in);
  for (int i = 0; i < input; ++i) m.feature_scale(i) = binio::get_f32(in);
  SvdBasis b;
  const auto width = static_cast<Eigen::Index>(binio::get_uint<std::uint32_t>(in));
  b.k = static_cast<int>(binio::get_uint<std::uint32_t>(in));
  if (b.k != input) throw Error(ErrorCode::FormatError, "basis rank differs from network input");
  b.sigma.resize(b.k);
  b.v_k.resize(width, b.k);
  for (int i = 0; i < b.k; ++i) b.sigma(i) = binio::get_f32(in);
  for (Eigen::Index j = 0; j < b.k; ++j)
    for (Eigen::Index i = 0; i < width; ++i) b.v_k(i, j) = binio::get_f32(in);
  return {std::move(m), std::move(b)};
}

}  // namespace medeeg::svdnn
