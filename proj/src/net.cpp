#include "pedloc/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pedloc/errors.hpp"

namespace pedloc {

namespace {

constexpr double kBnEps = 1e-5;

double sign_of(double x) { return (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_target(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ValidationError("invalid target: ground-truth distance must be positive and finite");
  }
}

void linear_forward(const LinearLayer& L, const Eigen::MatrixXd& X, Eigen::MatrixXd& out) {
  out.noalias() = L.W * X;
  out.colwise() += L.b;
}

void bn_forward(const BatchNormLayer& bn, const Eigen::MatrixXd& X, ForwardMode mode,
                BnCache& cache, Eigen::MatrixXd& out) {
  if (mode == ForwardMode::kTrain) {
    cache.mean = X.rowwise().mean();
    Eigen::MatrixXd centered = X.colwise() - cache.mean;
    cache.var = centered.array().square().rowwise().mean();
    cache.inv_std = (cache.var.array() + kBnEps).rsqrt();
    cache.xhat = centered.array().colwise() * cache.inv_std.array();
  } else {
    cache.inv_std = (bn.running_var.array() + kBnEps).rsqrt();
    cache.xhat = (X.colwise() - bn.running_mean).array().colwise() * cache.inv_std.array();
  }
  out = (cache.xhat.array().colwise() * bn.affine.gamma.array()).colwise() +
        bn.affine.beta.array();
}

// linear -> BN -> ReLU -> optional inverted dropout
void unit_forward(const LinearLayer& L, const BatchNormLayer& bn, const Eigen::MatrixXd& X,
                  ForwardMode mode, double p_drop, bool with_dropout, Rng* rng,
                  LayerCache& cache, Eigen::MatrixXd& out) {
  cache.lin_in = X;
  Eigen::MatrixXd h;
  linear_forward(L, X, h);
  Eigen::MatrixXd bn_out;
  bn_forward(bn, h, mode, cache.bn, bn_out);
  cache.relu_out = bn_out.cwiseMax(0.0);

  const bool active = with_dropout && mode != ForwardMode::kEval && p_drop > 0.0;
  if (active) {
    const double scale = 1.0 / (1.0 - p_drop);
    cache.drop_mask.resize(cache.relu_out.rows(), cache.relu_out.cols());
    for (Eigen::Index j = 0; j < cache.drop_mask.cols(); ++j) {
      for (Eigen::Index i = 0; i < cache.drop_mask.rows(); ++i) {
        cache.drop_mask(i, j) = rng->bernoulli(1.0 - p_drop) ? scale : 0.0;
      }
    }
    out = cache.relu_out.cwiseProduct(cache.drop_mask);
  } else {
    cache.drop_mask.resize(0, 0);
    out = cache.relu_out;
  }
}

// Backward through one unit. dY is the gradient at the unit output; returns
// the gradient at the unit input. Assumes a train-mode cache.
Eigen::MatrixXd unit_backward(const LinearLayer& L, const BatchNormLayer& bn,
                              const LayerCache& cache, Eigen::MatrixXd dY,
                              LinearLayer& gL, AffineParams& gBn) {
  if (cache.drop_mask.size() > 0) {
    dY = dY.cwiseProduct(cache.drop_mask);
  }
  dY = dY.cwiseProduct((cache.relu_out.array() > 0.0).cast<double>().matrix());

  // Batch-norm backward with batch statistics.
  const double n = static_cast<double>(dY.cols());
  gBn.gamma = (dY.array() * cache.bn.xhat.array()).rowwise().sum();
  gBn.beta = dY.rowwise().sum();
  Eigen::MatrixXd dxhat = dY.array().colwise() * bn.affine.gamma.array();
  Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
  Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * cache.bn.xhat.array()).rowwise().sum();
  Eigen::MatrixXd dH = n * dxhat;
  dH.colwise() -= sum_dxhat;
  dH.array() -= cache.bn.xhat.array().colwise() * sum_dxhat_xhat.array();
  dH.array().colwise() *= (cache.bn.inv_std.array() / n);

  gL.W.noalias() = dH * cache.lin_in.transpose();
  gL.b = dH.rowwise().sum();
  return L.W.transpose() * dH;
}

void init_linear(LinearLayer& L, int out_dim, int in_dim, Rng& rng) {
  const double limit = std::sqrt(6.0 / in_dim);
  L.W.resize(out_dim, in_dim);
  for (Eigen::Index j = 0; j < L.W.cols(); ++j) {
    for (Eigen::Index i = 0; i < L.W.rows(); ++i) {
      L.W(i, j) = rng.uniform(-limit, limit);
    }
  }
  L.b = Eigen::VectorXd::Zero(out_dim);
}

void init_bn(BatchNormLayer& bn, int dim) {
  bn.affine.gamma = Eigen::VectorXd::Ones(dim);
  bn.affine.beta = Eigen::VectorXd::Zero(dim);
  bn.running_mean = Eigen::VectorXd::Zero(dim);
  bn.running_var = Eigen::VectorXd::Ones(dim);
}

}  // namespace

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kLaplace: return "laplace";
    case LossKind::kGaussian: return "gaussian";
    case LossKind::kL1: return "l1";
  }
  return "unknown";
}

LossKind loss_from_name(const std::string& name) {
  if (name == "laplace") return LossKind::kLaplace;
  if (name == "gaussian") return LossKind::kGaussian;
  if (name == "l1") return LossKind::kL1;
  throw ValidationError("unknown loss '" + name + "' (expected laplace|gaussian|l1)");
}

LocModel LocModel::init(const LocModelConfig& cfg, uint64_t seed) {
  if (cfg.input_dim < 1 || cfg.hidden < 1 || cfg.num_blocks < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  if (!(cfg.p_drop >= 0.0) || !(cfg.p_drop < 1.0)) {
    throw ValidationError("dropout probability must be in [0, 1)");
  }
  Rng rng(seed);
  LocModel m;
  m.cfg = cfg;
  init_linear(m.input_stage, cfg.hidden, cfg.input_dim, rng);
  init_bn(m.input_bn, cfg.hidden);
  m.block_linears.resize(2 * cfg.num_blocks);
  m.block_bns.resize(2 * cfg.num_blocks);
  for (int l = 0; l < 2 * cfg.num_blocks; ++l) {
    init_linear(m.block_linears[l], cfg.hidden, cfg.hidden, rng);
    init_bn(m.block_bns[l], cfg.hidden);
  }
  init_linear(m.head, 2, cfg.hidden, rng);
  return m;
}

int64_t LocModel::parameter_count() const {
  int64_t n = input_stage.W.size() + input_stage.b.size();
  n += input_bn.affine.gamma.size() + input_bn.affine.beta.size();
  for (const auto& L : block_linears) n += L.W.size() + L.b.size();
  for (const auto& bn : block_bns) n += bn.affine.gamma.size() + bn.affine.beta.size();
  n += head.W.size() + head.b.size();
  return n;
}

void LocModel::validate() const {
  const int h = cfg.hidden;
  if (input_stage.W.rows() != h || input_stage.W.cols() != cfg.input_dim ||
      static_cast<int>(block_linears.size()) != 2 * cfg.num_blocks ||
      block_bns.size() != block_linears.size() || head.W.rows() != 2 || head.W.cols() != h) {
    throw ValidationError("model shape does not match its architecture config");
  }
  auto check_bn = [](const BatchNormLayer& bn) {
    if ((bn.running_var.array() <= 0.0).any()) {
      throw ValidationError("batch-norm running variances must be positive");
    }
  };
  check_bn(input_bn);
  for (const auto& bn : block_bns) check_bn(bn);
  if (cfg.input_dim == 34 && cfg.hidden == 256 && cfg.num_blocks == 3) {
    const int64_t n = parameter_count();
    if (n < 350000 || n > 450000) {
      throw ValidationError("architecture drift: parameter count " + std::to_string(n) +
                            " outside [350k, 450k]");
    }
  }
}

double laplace_loss(double x, double mu, double s) {
  check_target(x);
  return std::abs(1.0 - mu / x) * std::exp(-s) + std::log(2.0) + s;
}

double gaussian_loss(double x, double mu, double s) {
  check_target(x);
  const double r = 1.0 - mu / x;
  return 0.5 * r * r * std::exp(-2.0 * s) + s;
}

double l1_loss(double x, double mu) {
  check_target(x);
  return std::abs(x - mu);
}

double loss_value(LossKind kind, double x, double mu, double s) {
  switch (kind) {
    case LossKind::kLaplace: return laplace_loss(x, mu, s);
    case LossKind::kGaussian: return gaussian_loss(x, mu, s);
    case LossKind::kL1: return l1_loss(x, mu);
  }
  throw ValidationError("unknown loss kind");
}

LossGrad loss_gradient(LossKind kind, double x, double mu, double s) {
  check_target(x);
  LossGrad g;
  switch (kind) {
    case LossKind::kLaplace: {
      const double r = 1.0 - mu / x;
      const double inv_b = std::exp(-s);
      g.dmu = -sign_of(r) * inv_b / x;
      g.ds = -std::abs(r) * inv_b + 1.0;
      break;
    }
    case LossKind::kGaussian: {
      const double r = 1.0 - mu / x;
      const double inv_b2 = std::exp(-2.0 * s);
      g.dmu = -r * inv_b2 / x;
      g.ds = -r * r * inv_b2 + 1.0;
      break;
    }
    case LossKind::kL1: {
      g.dmu = sign_of(mu - x);
      g.ds = 0.0;
      break;
    }
  }
  return g;
}

double weight_decay_term(const LocModel& model, double p_drop, int64_t n_data) {
  if (n_data < 1) throw ValidationError("weight decay needs n_data >= 1");
  double sq = 0.0;
  auto add = [&sq](const LinearLayer& L) {
    sq += L.W.squaredNorm() + L.b.squaredNorm();
  };
  add(model.input_stage);
  for (const auto& L : model.block_linears) add(L);
  add(model.head);
  return (1.0 - p_drop) / (2.0 * static_cast<double>(n_data)) * sq;
}

Eigen::MatrixXd forward_batch(const LocModel& model, const Eigen::MatrixXd& X,
                              ForwardMode mode, Rng* rng, ForwardCache* cache) {
  if (X.rows() != model.cfg.input_dim) {
    throw ValidationError("input dimension mismatch: expected " +
                          std::to_string(model.cfg.input_dim) + " rows");
  }
  if (X.cols() < 1) throw ValidationError("empty batch");
  if (!X.allFinite()) throw ValidationError("non-finite network input rejected");
  if (mode == ForwardMode::kTrain && X.cols() < 2) {
    throw ValidationError("train-mode batch normalization requires batch size >= 2");
  }
  const bool dropout_possible = mode != ForwardMode::kEval && model.cfg.p_drop > 0.0;
  if (dropout_possible && rng == nullptr) {
    throw ValidationError("dropout-active forward pass needs an rng");
  }

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.mode = mode;
  c.input = X;
  c.block_inputs.assign(model.cfg.num_blocks, {});
  c.block_layers.assign(2 * model.cfg.num_blocks, {});

  // Input stage: linear -> BN -> ReLU, no dropout.
  Eigen::MatrixXd a;
  unit_forward(model.input_stage, model.input_bn, X, mode, model.cfg.p_drop,
               /*with_dropout=*/false, rng, c.input_stage, a);

  for (int k = 0; k < model.cfg.num_blocks; ++k) {
    c.block_inputs[k] = a;
    Eigen::MatrixXd h = a;
    for (int l = 2 * k; l < 2 * k + 2; ++l) {
      Eigen::MatrixXd next;
      unit_forward(model.block_linears[l], model.block_bns[l], h, mode, model.cfg.p_drop,
                   /*with_dropout=*/true, rng, c.block_layers[l], next);
      h = std::move(next);
    }
    a = c.block_inputs[k] + h;  // identity skip
  }

  c.features = a;
  c.output.noalias() = model.head.W * a;
  c.output.colwise() += model.head.b;
  return c.output;
}

void update_running_stats(LocModel& model, const ForwardCache& cache, double momentum) {
  if (cache.mode != ForwardMode::kTrain) {
    throw ValidationError("running statistics can only be updated from a train-mode pass");
  }
  const double n = static_cast<double>(cache.input.cols());
  const double unbias = n / std::max(n - 1.0, 1.0);
  auto update = [&](BatchNormLayer& bn, const BnCache& bc) {
    bn.running_mean = (1.0 - momentum) * bn.running_mean + momentum * bc.mean;
    bn.running_var = (1.0 - momentum) * bn.running_var + momentum * (unbias * bc.var);
  };
  update(model.input_bn, cache.input_stage.bn);
  for (size_t l = 0; l < model.block_bns.size(); ++l) {
    update(model.block_bns[l], cache.block_layers[l].bn);
  }
}

PredictionHead forward_single(const LocModel& model, const std::array<double, 34>& input,
                              ForwardMode mode, Rng* rng) {
  if (mode == ForwardMode::kTrain) {
    throw ValidationError("single-sample forward supports eval and mc modes only");
  }
  Eigen::MatrixXd X(34, 1);
  for (int i = 0; i < 34; ++i) X(i, 0) = input[i];
  const Eigen::MatrixXd out = forward_batch(model, X, mode, rng);
  return {out(0, 0), out(1, 0)};
}

Gradients Gradients::zeros_like(const LocModel& model) {
  Gradients g;
  auto zero_lin = [](const LinearLayer& L) {
    LinearLayer z;
    z.W = Eigen::MatrixXd::Zero(L.W.rows(), L.W.cols());
    z.b = Eigen::VectorXd::Zero(L.b.size());
    return z;
  };
  auto zero_affine = [](const BatchNormLayer& bn) {
    AffineParams a;
    a.gamma = Eigen::VectorXd::Zero(bn.affine.gamma.size());
    a.beta = Eigen::VectorXd::Zero(bn.affine.beta.size());
    return a;
  };
  g.input_stage = zero_lin(model.input_stage);
  g.input_bn = zero_affine(model.input_bn);
  g.block_linears.reserve(model.block_linears.size());
  g.block_bns.reserve(model.block_bns.size());
  for (const auto& L : model.block_linears) g.block_linears.push_back(zero_lin(L));
  for (const auto& bn : model.block_bns) g.block_bns.push_back(zero_affine(bn));
  g.head = zero_lin(model.head);
  return g;
}

BatchResult backward(const LocModel& model, const ForwardCache& cache,
                     std::span<const double> targets, LossKind kind, int64_t n_data,
                     Gradients& grads) {
  if (cache.mode != ForwardMode::kTrain) {
    throw ValidationError("backward requires a train-mode forward cache");
  }
  const Eigen::Index n = cache.input.cols();
  if (static_cast<Eigen::Index>(targets.size()) != n) {
    throw ValidationError("target count does not match batch size");
  }

  Eigen::MatrixXd dout(2, n);
  double loss_sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mu = cache.output(0, j);
    const double s = cache.output(1, j);
    loss_sum += loss_value(kind, targets[j], mu, s);
    const LossGrad g = loss_gradient(kind, targets[j], mu, s);
    dout(0, j) = g.dmu / static_cast<double>(n);
    dout(1, j) = g.ds / static_cast<double>(n);
  }

  grads.head.W.noalias() = dout * cache.features.transpose();
  grads.head.b = dout.rowwise().sum();
  Eigen::MatrixXd da = model.head.W.transpose() * dout;

  for (int k = model.cfg.num_blocks - 1; k >= 0; --k) {
    const Eigen::MatrixXd dblock = da;
    Eigen::MatrixXd d = dblock;
    for (int l = 2 * k + 1; l >= 2 * k; --l) {
      d = unit_backward(model.block_linears[l], model.block_bns[l], cache.block_layers[l], d,
                        grads.block_linears[l], grads.block_bns[l]);
    }
    da = dblock + d;
  }

  unit_backward(model.input_stage, model.input_bn, cache.input_stage, da, grads.input_stage,
                grads.input_bn);

  BatchResult res;
  res.mean_loss = loss_sum / static_cast<double>(n);
  res.objective = res.mean_loss;
  if (n_data > 0) {
    const double scale = (1.0 - model.cfg.p_drop) / static_cast<double>(n_data);
    auto decay = [&](const LinearLayer& L, LinearLayer& gL) {
      res.objective += 0.5 * scale * (L.W.squaredNorm() + L.b.squaredNorm());
      gL.W += scale * L.W;
      gL.b += scale * L.b;
    };
    decay(model.input_stage, grads.input_stage);
    for (size_t l = 0; l < model.block_linears.size(); ++l) {
      decay(model.block_linears[l], grads.block_linears[l]);
    }
    decay(model.head, grads.head);
  }
  return res;
}

std::vector<ParamView> param_views(LocModel& model) {
  std::vector<ParamView> views;
  auto add_lin = [&views](const std::string& name, LinearLayer& L) {
    views.push_back({name + ".W", L.W.data(), L.W.size(), true});
    views.push_back({name + ".b", L.b.data(), L.b.size(), true});
  };
  auto add_bn = [&views](const std::string& name, BatchNormLayer& bn) {
    views.push_back({name + ".gamma", bn.affine.gamma.data(), bn.affine.gamma.size(), false});
    views.push_back({name + ".beta", bn.affine.beta.data(), bn.affine.beta.size(), false});
  };
  add_lin("input", model.input_stage);
  add_bn("input_bn", model.input_bn);
  for (size_t l = 0; l < model.block_linears.size(); ++l) {
    add_lin("block" + std::to_string(l), model.block_linears[l]);
    add_bn("block" + std::to_string(l) + "_bn", model.block_bns[l]);
  }
  add_lin("head", model.head);
  return views;
}

std::vector<ParamView> param_views(Gradients& grads) {
  std::vector<ParamView> views;
  auto add_lin = [&views](const std::string& name, LinearLayer& L) {
    views.push_back({name + ".W", L.W.data(), L.W.size(), true});
    views.push_back({name + ".b", L.b.data(), L.b.size(), true});
  };
  auto add_bn = [&views](const std::string& name, AffineParams& a) {
    views.push_back({name + ".gamma", a.gamma.data(), a.gamma.size(), false});
    views.push_back({name + ".beta", a.beta.data(), a.beta.size(), false});
  };
  add_lin("input", grads.input_stage);
  add_bn("input_bn", grads.input_bn);
  for (size_t l = 0; l < grads.block_linears.size(); ++l) {
    add_lin("block" + std::to_string(l), grads.block_linears[l]);
    add_bn("block" + std::to_string(l) + "_bn", grads.block_bns[l]);
  }
  add_lin("head", grads.head);
  return views;
}

AdamState AdamState::init(const LocModel& model) {
  AdamState st;
  st.m = Gradients::zeros_like(model);
  st.v = Gradients::zeros_like(model);
  st.step = 0;
  return st;
}

void adam_step(LocModel& model, const Gradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  auto theta = param_views(model);
  auto g = param_views(const_cast<Gradients&>(grads));
  auto m = param_views(state.m);
  auto v = param_views(state.v);
  if (theta.size() != g.size() || theta.size() != m.size() || theta.size() != v.size()) {
    throw ValidationError("adam state shape mismatch");
  }
  for (size_t i = 0; i < theta.size(); ++i) {
    if (theta[i].size != g[i].size || theta[i].size != m[i].size) {
      throw ValidationError("adam state shape mismatch at " + theta[i].name);
    }
    Eigen::Map<Eigen::ArrayXd> t(theta[i].data, theta[i].size);
    Eigen::Map<const Eigen::ArrayXd> gr(g[i].data, g[i].size);
    Eigen::Map<Eigen::ArrayXd> mm(m[i].data, m[i].size);
    Eigen::Map<Eigen::ArrayXd> vv(v[i].data, v[i].size);
    mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * gr;
    vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * gr.square();
    t -= lr * (mm / bc1) / ((vv / bc2).sqrt() + cfg.eps);
  }
}

double eval_ale(const LocModel& model, std::span<const TrainSample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd X(model.cfg.input_dim, static_cast<Eigen::Index>(samples.size()));
  for (size_t j = 0; j < samples.size(); ++j) {
    for (int i = 0; i < model.cfg.input_dim; ++i) X(i, static_cast<Eigen::Index>(j)) = samples[j].input[i];
  }
  const Eigen::MatrixXd out = forward_batch(model, X, ForwardMode::kEval, nullptr);
  double sum = 0.0;
  for (size_t j = 0; j < samples.size(); ++j) {
    sum += std::abs(out(0, static_cast<Eigen::Index>(j)) - samples[j].target_d);
  }
  return sum / static_cast<double>(samples.size());
}

namespace {

double eval_loss(const LocModel& model, std::span<const TrainSample> samples, LossKind kind) {
  Eigen::MatrixXd X(model.cfg.input_dim, static_cast<Eigen::Index>(samples.size()));
  for (size_t j = 0; j < samples.size(); ++j) {
    for (int i = 0; i < model.cfg.input_dim; ++i) X(i, static_cast<Eigen::Index>(j)) = samples[j].input[i];
  }
  const Eigen::MatrixXd out = forward_batch(model, X, ForwardMode::kEval, nullptr);
  double sum = 0.0;
  for (size_t j = 0; j < samples.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    sum += loss_value(kind, samples[j].target_d, out(0, jj), out(1, jj));
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace

TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw ValidationError("training set is empty");
  for (const auto& s : train_set) check_target(s.target_d);

  LocModel model = LocModel::init(cfg.arch, split_seed(cfg.seed, 0));
  model.validate();
  AdamState adam = AdamState::init(model);
  Gradients grads = Gradients::zeros_like(model);
  Rng shuffle_rng(split_seed(cfg.seed, 1));
  Rng dropout_rng(split_seed(cfg.seed, 2));

  const int64_t n_data = static_cast<int64_t>(train_set.size());
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  LocModel best = model;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle with the seeded stream.
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double loss_sum = 0.0;
    int64_t count = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t bs = std::min(static_cast<size_t>(cfg.batch_size), order.size() - start);
      if (bs < 2) continue;  // a singleton leftover cannot feed batch norm
      Eigen::MatrixXd X(cfg.arch.input_dim, static_cast<Eigen::Index>(bs));
      std::vector<double> targets(bs);
      for (size_t j = 0; j < bs; ++j) {
        const TrainSample& s = train_set[order[start + j]];
        for (int i = 0; i < cfg.arch.input_dim; ++i) X(i, static_cast<Eigen::Index>(j)) = s.input[i];
        targets[j] = s.target_d;
      }
      ForwardCache cache;
      forward_batch(model, X, ForwardMode::kTrain, &dropout_rng, &cache);
      const BatchResult r =
          backward(model, cache, targets, cfg.loss, cfg.weight_decay ? n_data : 0, grads);
      if (!std::isfinite(r.objective)) {
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      }
      update_running_stats(model, cache, cfg.bn_momentum);
      adam_step(model, grads, adam, cfg.lr, cfg.adam);
      loss_sum += r.mean_loss * static_cast<double>(bs);
      count += static_cast<int64_t>(bs);
    }
    model.trained = true;

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(count);
    stats.val_loss = std::numeric_limits<double>::quiet_NaN();
    stats.val_ale = std::numeric_limits<double>::quiet_NaN();
    if (!val_set.empty()) {
      stats.val_loss = eval_loss(model, val_set, cfg.loss);
      stats.val_ale = eval_ale(model, val_set);
      if (stats.val_loss < best_val) {
        best_val = stats.val_loss;
        best = model;
      }
    }
    result.history.push_back(stats);
  }

  result.model = val_set.empty() ? model : best;
  return result;
}

}  // namespace pedloc
