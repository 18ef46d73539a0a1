#include "medeeg/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "medeeg/binio.hpp"
#include "medeeg/error.hpp"

namespace medeeg::lstm {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutVecMap = Eigen::Map<Vector>;

struct Offsets {
  Eigen::Index wx, wh, b, wout, bout, total;
};

Offsets offsets(int h, int in) {
  Offsets o{};
  o.wx = 0;
  o.wh = o.wx + 4 * h * in;
  o.b = o.wh + 4 * h * h;
  o.wout = o.b + 4 * h;
  o.bout = o.wout + h;
  o.total = o.bout + 1;
  return o;
}

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

// x is T x B of standardized inputs (input size 1).
struct Forward {
  std::vector<Matrix> gates;  // per step: 4H x B, post-activation
  std::vector<Matrix> c;      // per step: H x B (index t+1; c[0] = 0)
  std::vector<Matrix> h;
  Eigen::RowVectorXd logit;
};

Forward forward(const LstmModel& m, const Matrix& x) {
  const int hsz = m.hidden();
  const auto o = offsets(hsz, m.input());
  const double* p = m.params().data();
  ConstMap wx(p + o.wx, 4 * hsz, 1);
  ConstMap wh(p + o.wh, 4 * hsz, hsz);
  ConstVecMap b(p + o.b, 4 * hsz);
  ConstVecMap wout(p + o.wout, hsz);
  const double bout = p[o.bout];

  const auto steps = x.rows();
  const auto batch = x.cols();
  Forward f;
  f.c.assign(1, Matrix::Zero(hsz, batch));
  f.h.assign(1, Matrix::Zero(hsz, batch));
  for (Eigen::Index t = 0; t < steps; ++t) {
    Matrix z = wx * x.row(t);
    z.noalias() += wh * f.h.back();
    z.colwise() += b;
    Matrix g(4 * hsz, batch);
    g.topRows(2 * hsz) = sigmoid(z.topRows(2 * hsz));
    g.middleRows(2 * hsz, hsz) = z.middleRows(2 * hsz, hsz).array().tanh().matrix();
    g.bottomRows(hsz) = sigmoid(z.bottomRows(hsz));
    Matrix c = g.middleRows(hsz, hsz).cwiseProduct(f.c.back()) +
               g.topRows(hsz).cwiseProduct(g.middleRows(2 * hsz, hsz));
    Matrix h = g.bottomRows(hsz).cwiseProduct(Matrix(c.array().tanh()));
    f.gates.push_back(std::move(g));
    f.c.push_back(std::move(c));
    f.h.push_back(std::move(h));
  }
  f.logit = (wout.transpose() * f.h.back()).array() + bout;
  return f;
}

Matrix to_input(const LstmModel& m, std::span<const ScalarSequence> seqs) {
  if (seqs.empty()) return Matrix(0, 0);
  const auto steps = static_cast<Eigen::Index>(seqs.front().values.size());
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "empty sequence");
  Matrix x(steps, static_cast<Eigen::Index>(seqs.size()));
  for (std::size_t j = 0; j < seqs.size(); ++j) {
    if (static_cast<Eigen::Index>(seqs[j].values.size()) != steps)
      throw Error(ErrorCode::DimensionMismatch, "sequences differ in length");
    for (Eigen::Index t = 0; t < steps; ++t)
      x(t, static_cast<Eigen::Index>(j)) = (seqs[j].values[static_cast<std::size_t>(t)] - m.input_shift) * m.input_scale;
  }
  return x;
}

LossGrad batch_loss_grad(const LstmModel& m, const Matrix& x, std::span<const int> y) {
  const int hsz = m.hidden();
  const auto o = offsets(hsz, m.input());
  const double* p = m.params().data();
  ConstMap wh(p + o.wh, 4 * hsz, hsz);
  ConstVecMap wout(p + o.wout, hsz);

  const auto batch = x.cols();
  const auto steps = x.rows();
  const Forward f = forward(m, x);

  LossGrad r;
  r.grad = Vector::Zero(o.total);
  double* gp = r.grad.data();
  MutMap dwx(gp + o.wx, 4 * hsz, 1);
  MutMap dwh(gp + o.wh, 4 * hsz, hsz);
  MutVecMap db(gp + o.b, 4 * hsz);
  MutVecMap dwout(gp + o.wout, hsz);

  const double inv_b = 1.0 / static_cast<double>(batch);
  Eigen::RowVectorXd dlogit(batch);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const int label = y[static_cast<std::size_t>(j)];
    loss += bce_with_logit(f.logit(j), label);
    dlogit(j) = (logistic(f.logit(j)) - label) * inv_b;
  }
  r.loss = loss * inv_b;
  dwout = f.h.back() * dlogit.transpose();
  gp[o.bout] = dlogit.sum();

  Matrix dh = wout * dlogit;
  Matrix dc = Matrix::Zero(hsz, batch);
  Matrix dz(4 * hsz, batch);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Matrix& g = f.gates[static_cast<std::size_t>(t)];
    const auto gi = g.topRows(hsz).array();
    const auto gf = g.middleRows(hsz, hsz).array();
    const auto gg = g.middleRows(2 * hsz, hsz).array();
    const auto go = g.bottomRows(hsz).array();
    const auto tc = f.c[static_cast<std::size_t>(t + 1)].array().tanh();
    const auto& c_prev = f.c[static_cast<std::size_t>(t)].array();

    dc.array() += dh.array() * go * (1.0 - tc.square());
    dz.topRows(hsz) = (dc.array() * gg * gi * (1.0 - gi)).matrix();
    dz.middleRows(hsz, hsz) = (dc.array() * c_prev * gf * (1.0 - gf)).matrix();
    dz.middleRows(2 * hsz, hsz) = (dc.array() * gi * (1.0 - gg.square())).matrix();
    dz.bottomRows(hsz) = (dh.array() * tc * go * (1.0 - go)).matrix();

    dwx.noalias() += dz * x.row(t).transpose();
    dwh.noalias() += dz * f.h[static_cast<std::size_t>(t)].transpose();
    db += dz.rowwise().sum();
    dh.noalias() = wh.transpose() * dz;
    dc = (dc.array() * gf).matrix();
  }
  return r;
}

void check_both_labels(std::span<const ScalarSequence> seqs) {
  bool has0 = false, has1 = false;
  for (const auto& s : seqs) (s.label == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "training sequences need both labels");
}

}  // namespace

Eigen::Index LstmModel::param_count(int hidden, int input) { return offsets(hidden, input).total; }

LstmModel::LstmModel(int hidden, int input) : hidden_(hidden), input_(input) {
  if (hidden < 1 || input != 1) throw Error(ErrorCode::InvalidParams, "LSTM needs hidden >= 1 and scalar input");
  params_ = Vector::Zero(param_count(hidden, input));
}

LstmModel LstmModel::initialized(int hidden, std::uint64_t seed, int input) {
  LstmModel m(hidden, input);
  const auto o = offsets(hidden, input);
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::Index begin, Eigen::Index count, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < count; ++i) m.params_(begin + i) = dist(rng);
  };
  fill(o.wx, 4 * hidden * input, 1.0 / std::sqrt(static_cast<double>(input)));
  fill(o.wh, 4 * hidden * hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
  m.params_.segment(o.b + hidden, hidden).setOnes();
  fill(o.wout, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
  return m;
}

EpochSet split_subepochs(const EpochSet& epochs, Eigen::Index sub_len) {
  if (sub_len < 2 || epochs.epoch_len() % sub_len != 0)
    throw Error(ErrorCode::LengthNotDivisible, "epoch length " + std::to_string(epochs.epoch_len()) +
                                                   " is not a multiple of " + std::to_string(sub_len));
  EpochSet out(epochs.n_channels(), sub_len);
  const auto parts = epochs.epoch_len() / sub_len;
  for (const auto& e : epochs)
    for (Eigen::Index j = 0; j < parts; ++j)
      out.push_back(make_epoch(e.data().middleCols(j * sub_len, sub_len), e.label, e.subject_id, e.parent_index, e.uid));
  return out;
}

std::vector<ScalarSequence> build_sequences(const EpochSet& epochs, const csp::SpatialFilterBank& bank,
                                            const lda::LdaModel& lda, Eigen::Index sub_len) {
  if (sub_len < 2 || epochs.epoch_len() % sub_len != 0)
    throw Error(ErrorCode::LengthNotDivisible, "epoch length " + std::to_string(epochs.epoch_len()) +
                                                   " is not a multiple of " + std::to_string(sub_len));
  if (lda.dim() != bank.n_features()) throw Error(ErrorCode::DimensionMismatch, "LDA dimension differs from bank");
  const auto parts = epochs.epoch_len() / sub_len;
  std::vector<ScalarSequence> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) {
    ScalarSequence s;
    s.label = e.label_bit();
    s.subject_id = e.subject_id;
    s.uid = e.uid;
    for (Eigen::Index j = 0; j < parts; ++j) {
      Matrix sub = e.data().middleCols(j * sub_len, sub_len);
      center_rows(sub);
      s.values.push_back(lda::project(lda, csp::log_variance_features(sub, bank)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

LossGrad loss_and_gradient(const LstmModel& model, std::span<const ScalarSequence> seqs) {
  if (seqs.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  std::vector<int> y;
  for (const auto& s : seqs) y.push_back(s.label);
  return batch_loss_grad(model, to_input(model, seqs), y);
}

LstmModel train_lstm(std::span<const ScalarSequence> seqs, const TrainConfig& cfg, TrainLog* log) {
  check_both_labels(seqs);
  if (cfg.epochs < 0 || cfg.batch < 1) throw Error(ErrorCode::InvalidParams, "bad LSTM training config");

  LstmModel model = LstmModel::initialized(cfg.hidden, cfg.seed);
  double sum = 0.0, sq = 0.0, count = 0.0;
  for (const auto& s : seqs)
    for (double v : s.values) {
      sum += v;
      sq += v * v;
      count += 1.0;
    }
  const double mean = sum / count;
  const double var = std::max(sq / count - mean * mean, 0.0);
  model.input_shift = mean;
  model.input_scale = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;

  const Matrix x_all = to_input(model, seqs);
  std::vector<int> y_all;
  for (const auto& s : seqs) y_all.push_back(s.label);
  if (log) log->initial_loss = batch_loss_grad(model, x_all, y_all).loss;

  Adam adam(model.params().size(), cfg.adam);
  std::mt19937_64 rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Matrix xb(x_all.rows(), static_cast<Eigen::Index>(stop - start));
      std::vector<int> yb;
      for (std::size_t j = start; j < stop; ++j) {
        xb.col(static_cast<Eigen::Index>(j - start)) = x_all.col(static_cast<Eigen::Index>(order[j]));
        yb.push_back(y_all[order[j]]);
      }
      LossGrad lg = batch_loss_grad(model, xb, yb);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
        throw Error(ErrorCode::NonFiniteLoss, "LSTM loss became non-finite at epoch " + std::to_string(epoch) +
                                                  ", batch starting " + std::to_string(start));
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      adam.step(model.params(), lg.grad);
    }
    if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return model;
}

std::vector<double> predict_lstm(const LstmModel& model, std::span<const ScalarSequence> seqs) {
  std::vector<double> out;
  if (seqs.empty()) return out;
  const Forward f = forward(model, to_input(model, seqs));
  for (Eigen::Index j = 0; j < f.logit.size(); ++j) out.push_back(logistic(f.logit(j)));
  return out;
}

double predict_lstm(const LstmModel& model, const ScalarSequence& seq) {
  return predict_lstm(model, std::span<const ScalarSequence>(&seq, 1)).front();
}

// Blob layout: "MLSM" | version u32 | hidden u32 | input u32 | input_shift f32 |
// input_scale f32 | n_params u32 | params f32[n_params], all little-endian.
void save_lstm(const LstmModel& model, std::ostream& out) {
  binio::put_magic(out, "MLSM");
  binio::put_uint<std::uint32_t>(out, 1);
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.hidden()));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.input()));
  binio::put_f32(out, static_cast<float>(model.input_shift));
  binio::put_f32(out, static_cast<float>(model.input_scale));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.params().size()));
  for (double v : model.params()) binio::put_f32(out, static_cast<float>(v));
}

LstmModel load_lstm(std::istream& in) {
  binio::expect_magic(in, "MLSM");
  if (binio::get_uint<std::uint32_t>(in) != 1) throw Error(ErrorCode::FormatError, "unsupported MLSM version");
  const auto hidden = static_cast<int>(binio::get_uint<std::uint32_t>(in));
  const auto input = static_cast<int>(binio::get_uint<std::uint32_t>(in));
  LstmModel m(hidden, input);
  m.input_shift = binio::get_f32(in);
  m.input_scale = binio::get_f32(in);
  const auto n = binio::get_uint<std::uint32_t>(in);
  if (static_cast<Eigen::Index>(n) != m.params().size()) throw Error(ErrorCode::FormatError, "MLSM parameter count mismatch");
  for (std::uint32_t i = 0; i < n; ++i) m.params()(i) = binio::get_f32(in);
  return m;
}

}  // namespace medeeg::lstm
