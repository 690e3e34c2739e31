#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mvmdlstm::lstm {

enum class Gate : int { forget = 0, input = 1, output = 2, candidate = 3 };

/// All weights of a single-layer LSTM with a scalar linear readout, stored in
/// one flat vector so optimizers and gradient checks can treat them as a
/// whole. The four gate matrices are stacked row-wise (f, i, o, c) into one
/// 4H x (H + D) matrix acting on [h_prev; x].
class LstmParams {
 public:
  LstmParams() = default;
  LstmParams(Eigen::Index hidden, Eigen::Index input);  // all zeros

  Eigen::Index hidden_size() const noexcept { return hidden_; }
  Eigen::Index input_size() const noexcept { return input_; }
  Eigen::Index size() const noexcept { return flat_.size(); }
  static Eigen::Index size_for(Eigen::Index hidden, Eigen::Index input);

  Eigen::VectorXd& flat() noexcept { return flat_; }
  const Eigen::VectorXd& flat() const noexcept { return flat_; }

  Eigen::Map<Eigen::MatrixXd> gate_weights();
  Eigen::Map<const Eigen::MatrixXd> gate_weights() const;
  Eigen::Map<Eigen::VectorXd> gate_biases();
  Eigen::Map<const Eigen::VectorXd> gate_biases() const;

  auto weight(Gate g) { return gate_weights().middleRows(static_cast<int>(g) * hidden_, hidden_); }
  auto weight(Gate g) const { return gate_weights().middleRows(static_cast<int>(g) * hidden_, hidden_); }
  auto bias(Gate g) { return gate_biases().segment(static_cast<int>(g) * hidden_, hidden_); }
  auto bias(Gate g) const { return gate_biases().segment(static_cast<int>(g) * hidden_, hidden_); }

  Eigen::Map<Eigen::VectorXd> out_weights();
  Eigen::Map<const Eigen::VectorXd> out_weights() const;
  double& out_bias() { return flat_[flat_.size() - 1]; }
  double out_bias() const { return flat_[flat_.size() - 1]; }

  /// Throws NumericError on non-finite entries, ConfigError on bad shapes.
  void validate() const;

  bool operator==(const LstmParams& other) const;

 private:
  Eigen::Index hidden_ = 0;
  Eigen::Index input_ = 0;
  Eigen::VectorXd flat_;
};

/// Gradients share the parameter layout.
using LstmGrads = LstmParams;

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmState zeros(Eigen::Index hidden);
};

/// Gate activations of one step, for inspection.
struct StepTrace {
  Eigen::VectorXd f, i, o, g;
};

LstmState lstm_step(const LstmParams& params, const LstmState& state,
                    const Eigen::Ref<const Eigen::VectorXd>& x, StepTrace* trace = nullptr);

/// n windows of L steps with D features. Row r holds window r flattened
/// step-major: column t * D + d is feature d at step t.
struct WindowBatch {
  Eigen::MatrixXd inputs;
  Eigen::Index steps = 0;
  Eigen::Index features = 0;

  WindowBatch() = default;
  WindowBatch(Eigen::MatrixXd flat_inputs, Eigen::Index steps, Eigen::Index features);
  /// From a list of L x D windows.
  static WindowBatch from_windows(const std::vector<Eigen::MatrixXd>& windows);

  Eigen::Index size() const noexcept { return inputs.rows(); }
  Eigen::MatrixXd window(Eigen::Index r) const;  // L x D
};

struct Dataset {
  WindowBatch windows;
  Eigen::VectorXd targets;
};

/// Activations kept by a batched forward pass for backprop.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> hx;      // per step, (H + D) x B: [h_prev; x_t]
  std::vector<Eigen::MatrixXd> gates;   // per step, 4H x B, activated (f, i, o, c~)
  std::vector<Eigen::MatrixXd> cell;    // L + 1 entries, cell[0] is the zero initial state
  std::vector<Eigen::MatrixXd> tanh_c;  // per step, H x B
  Eigen::MatrixXd h_last;               // H x B
  Eigen::RowVectorXd predictions;       // 1 x B
};

struct ForwardResult {
  double prediction = 0.0;
  ForwardCache cache;
};

/// One window (L x D) from a zero state; prediction = w_out . h_L + b_out.
ForwardResult forward(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window);
ForwardCache forward_batch(const LstmParams& params, const WindowBatch& batch);

/// Gradient of 0.5 * (prediction - target)^2.
LstmGrads backward(const LstmParams& params, const ForwardCache& cache, double target);
/// Gradient of sum_b 0.5 * scale * (prediction_b - target_b)^2.
LstmGrads backward_batch(const LstmParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const Eigen::VectorXd>& targets, double scale = 1.0);

struct TrainConfig {
  Eigen::Index hidden_size = 32;
  Eigen::Index batch_size = 64;
  int epochs = 100;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient norm; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index size);
};

/// Clips `grads` in place to the configured global norm, then takes one
/// bias-corrected Adam step.
void adam_update(LstmParams& params, LstmGrads& grads, AdamState& state, const TrainConfig& config);

LstmParams init_params(Eigen::Index hidden, Eigen::Index input, std::uint64_t seed);

struct TrainResult {
  LstmParams params;
  std::vector<double> loss_trace;  // per-epoch MSE over all samples, before each step's update
};

/// Mini-batch Adam on 0.5 * MSE. Throws NumericError naming the epoch if the
/// loss goes non-finite.
TrainResult train(const Dataset& data, const TrainConfig& config);

Eigen::VectorXd predict(const LstmParams& params, const WindowBatch& windows);

void save_params(const LstmParams& params, const std::filesystem::path& path);
LstmParams load_params(const std::filesystem::path& path);
void write_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path);

}  // namespace mvmdlstm::lstm
