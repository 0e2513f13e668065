#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pedloc/rng.hpp"

namespace pedloc {

enum class LossKind { kLaplace, kGaussian, kL1 };

std::string loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);

// Batch-statistics + active dropout (training); running-statistics only
// (deterministic inference); running-statistics + active dropout (MC dropout).
enum class ForwardMode { kTrain, kEval, kMcDropout };

struct LinearLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

struct AffineParams {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
};

struct BatchNormLayer {
  AffineParams affine;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

struct LocModelConfig {
  int input_dim = 34;
  int hidden = 256;
  int num_blocks = 3;  // each block: [linear, BN, ReLU, dropout] x2 + identity skip
  double p_drop = 0.2;
};

// The fixed-architecture distance regressor. Six 256-wide hidden linear
// layers arranged as three residual blocks between an input stage and a
// two-unit head predicting (mu, s with s = log of the relative spread).
// Roughly 400k trainable parameters at the default width.
struct LocModel {
  LocModelConfig cfg{};
  int version = 1;
  LinearLayer input_stage;                  // input_dim -> hidden
  BatchNormLayer input_bn;
  std::vector<LinearLayer> block_linears;   // 2 * num_blocks, hidden -> hidden
  std::vector<BatchNormLayer> block_bns;    // aligned with block_linears
  LinearLayer head;                         // hidden -> 2
  bool trained = false;

  // He-uniform fan-in weights, zero biases, identity BN with unit running var.
  static LocModel init(const LocModelConfig& cfg, uint64_t seed);

  int64_t parameter_count() const;
  // Shape consistency, positive running variances; at the production
  // architecture (34/256/3) also asserts the parameter count stayed in
  // [350k, 450k].
  void validate() const;
};

struct PredictionHead {
  double mu = 0.0;  // predicted distance, m
  double s = 0.0;   // log of the relative Laplace spread
  double relative_spread() const { return std::exp(s); }
};

// ---------------------------------------------------------------------------
// Losses. x is the ground-truth distance (must be > 0).

// |1 - mu/x| / exp(s) + log(2) + s  -- relative Laplace NLL with b = exp(s).
double laplace_loss(double x, double mu, double s);
// (1 - mu/x)^2 / (2 exp(2s)) + s   -- relative Gaussian NLL, same relativization.
double gaussian_loss(double x, double mu, double s);
// |x - mu|
double l1_loss(double x, double mu);

double loss_value(LossKind kind, double x, double mu, double s);
struct LossGrad {
  double dmu = 0.0;
  double ds = 0.0;
};
LossGrad loss_gradient(LossKind kind, double x, double mu, double s);

// (1 - p_drop) / (2 n_data) * ||theta||^2 over the linear-layer parameters
// (BN scale/shift excluded).
double weight_decay_term(const LocModel& model, double p_drop, int64_t n_data);

// ---------------------------------------------------------------------------
// Forward / backward.

struct BnCache {
  Eigen::VectorXd mean;      // batch mean (train mode)
  Eigen::VectorXd var;       // biased batch variance (train mode)
  Eigen::VectorXd inv_std;   // 1 / sqrt(var_used + eps)
  Eigen::MatrixXd xhat;      // normalized pre-affine activations
};

struct LayerCache {
  Eigen::MatrixXd lin_in;     // input to the linear layer
  BnCache bn;
  Eigen::MatrixXd relu_out;   // post-ReLU activations
  Eigen::MatrixXd drop_mask;  // inverted-dropout mask (empty when inactive)
};

struct ForwardCache {
  ForwardMode mode = ForwardMode::kEval;
  Eigen::MatrixXd input;                    // input_dim x N
  LayerCache input_stage;
  std::vector<Eigen::MatrixXd> block_inputs;  // skip-path activations
  std::vector<LayerCache> block_layers;       // 2 * num_blocks
  Eigen::MatrixXd features;                 // head input
  Eigen::MatrixXd output;                   // 2 x N (row 0 = mu, row 1 = s)
};

// X has one sample per column (input_dim x N). Train mode needs N >= 2 for
// batch statistics. rng is required whenever dropout is active (train/mc
// with p_drop > 0). The model is never mutated; running-statistic updates
// are applied separately from the cache.
Eigen::MatrixXd forward_batch(const LocModel& model, const Eigen::MatrixXd& X,
                              ForwardMode mode, Rng* rng, ForwardCache* cache = nullptr);

// Folds the cached batch statistics of a train-mode forward into the running
// statistics: running = (1 - momentum) * running + momentum * batch.
void update_running_stats(LocModel& model, const ForwardCache& cache, double momentum);

PredictionHead forward_single(const LocModel& model, const std::array<double, 34>& input,
                              ForwardMode mode, Rng* rng);

struct Gradients {
  LinearLayer input_stage;
  AffineParams input_bn;
  std::vector<LinearLayer> block_linears;
  std::vector<AffineParams> block_bns;
  LinearLayer head;

  static Gradients zeros_like(const LocModel& model);
};

struct BatchResult {
  double mean_loss = 0.0;  // mean per-sample loss
  double objective = 0.0;  // mean loss + weight-decay term
};

// Reverse-mode gradients of (mean batch loss + weight-decay term) w.r.t.
// every trainable parameter. `cache` must come from a train-mode forward
// over the same inputs; `n_data` is the dataset size entering the decay term
// (pass 0 to disable it).
BatchResult backward(const LocModel& model, const ForwardCache& cache,
                     std::span<const double> targets, LossKind kind, int64_t n_data,
                     Gradients& grads);

// ---------------------------------------------------------------------------
// Flat parameter access (optimizer, checkpointing, gradient checks).

struct ParamView {
  std::string name;
  double* data = nullptr;
  int64_t size = 0;
  bool decayed = false;  // participates in the weight-decay objective
};

std::vector<ParamView> param_views(LocModel& model);
std::vector<ParamView> param_views(Gradients& grads);

// ---------------------------------------------------------------------------
// Adam.

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Gradients m;
  Gradients v;
  int64_t step = 0;

  static AdamState init(const LocModel& model);
};

void adam_step(LocModel& model, const Gradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

// ---------------------------------------------------------------------------
// Training loop.

struct TrainSample {
  std::array<double, 34> input{};
  double target_d = 0.0;  // ground-truth distance, m
};

struct TrainConfig {
  LocModelConfig arch{};
  double lr = 1e-3;
  int batch_size = 512;
  int epochs = 200;
  LossKind loss = LossKind::kLaplace;
  uint64_t seed = 0;
  double bn_momentum = 0.1;
  bool weight_decay = true;
  AdamConfig adam{};
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_ale = 0.0;
};

struct TrainResult {
  LocModel model;  // best-validation-loss snapshot (final model when no val set)
  std::vector<EpochStats> history;
};

// Seeded shuffling, mini-batches of cfg.batch_size, Adam, BN momentum 0.1.
// Aborts with a diagnostic if the loss becomes non-finite.
TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const TrainConfig& cfg);

// Mean absolute distance error of eval-mode predictions; helper shared by
// training history and quick diagnostics.
double eval_ale(const LocModel& model, std::span<const TrainSample> samples);

}  // namespace pedloc
