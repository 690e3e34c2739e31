#include "mvmdlstm/lstm/lstm.hpp"

#include "mvmdlstm/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace mvmdlstm::lstm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LstmParams::LstmParams(Index hidden, Index input)
    : hidden_(hidden), input_(input), flat_(VectorXd::Zero(size_for(hidden, input))) {
  if (hidden < 1 || input < 1) throw ConfigError("LSTM: hidden and input sizes must be >= 1");
}

Index LstmParams::size_for(Index hidden, Index input) {
  return 4 * hidden * (hidden + input) + 4 * hidden + hidden + 1;
}

Eigen::Map<MatrixXd> LstmParams::gate_weights() {
  return {flat_.data(), 4 * hidden_, hidden_ + input_};
}
Eigen::Map<const MatrixXd> LstmParams::gate_weights() const {
  return {flat_.data(), 4 * hidden_, hidden_ + input_};
}
Eigen::Map<VectorXd> LstmParams::gate_biases() {
  return {flat_.data() + 4 * hidden_ * (hidden_ + input_), 4 * hidden_};
}
Eigen::Map<const VectorXd> LstmParams::gate_biases() const {
  return {flat_.data() + 4 * hidden_ * (hidden_ + input_), 4 * hidden_};
}
Eigen::Map<VectorXd> LstmParams::out_weights() {
  return {flat_.data() + 4 * hidden_ * (hidden_ + input_) + 4 * hidden_, hidden_};
}
Eigen::Map<const VectorXd> LstmParams::out_weights() const {
  return {flat_.data() + 4 * hidden_ * (hidden_ + input_) + 4 * hidden_, hidden_};
}

void LstmParams::validate() const {
  if (hidden_ < 1 || input_ < 1 || flat_.size() != size_for(hidden_, input_)) {
    throw ConfigError("LSTM parameters: inconsistent shapes");
  }
  if (!flat_.allFinite()) throw NumericError("LSTM parameters: non-finite entry");
}

bool LstmParams::operator==(const LstmParams& other) const {
  return hidden_ == other.hidden_ && input_ == other.input_ && flat_ == other.flat_;
}

LstmState LstmState::zeros(Index hidden) { return {VectorXd::Zero(hidden), VectorXd::Zero(hidden)}; }

namespace {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
  return 1.0 / (1.0 + (-z).exp());
}

}  // namespace

LstmState lstm_step(const LstmParams& params, const LstmState& state, const Eigen::Ref<const VectorXd>& x,
                    StepTrace* trace) {
  const Index h = params.hidden_size();
  if (x.size() != params.input_size() || state.h.size() != h || state.c.size() != h) {
    throw ConfigError("lstm_step: shape mismatch");
  }
  VectorXd hx(h + params.input_size());
  hx << state.h, x;
  const VectorXd z = params.gate_weights() * hx + params.gate_biases();
  const Eigen::ArrayXd f = sigmoid(z.segment(0, h).array());
  const Eigen::ArrayXd i = sigmoid(z.segment(h, h).array());
  const Eigen::ArrayXd o = sigmoid(z.segment(2 * h, h).array());
  const Eigen::ArrayXd g = z.segment(3 * h, h).array().tanh();
  LstmState next;
  next.c = (f * state.c.array() + i * g).matrix();
  next.h = (o * next.c.array().tanh()).matrix();
  if (!next.c.allFinite() || !next.h.allFinite()) throw NumericError("lstm_step: non-finite activation");
  if (trace) *trace = {f.matrix(), i.matrix(), o.matrix(), g.matrix()};
  return next;
}

WindowBatch::WindowBatch(MatrixXd flat_inputs, Index steps_, Index features_)
    : inputs(std::move(flat_inputs)), steps(steps_), features(features_) {
  if (steps < 1 || features < 1 || inputs.cols() != steps * features) {
    throw ConfigError("window batch: column count must equal steps * features");
  }
}

WindowBatch WindowBatch::from_windows(const std::vector<MatrixXd>& windows) {
  if (windows.empty()) throw ConfigError("window batch: no windows");
  const Index l = windows.front().rows();
  const Index d = windows.front().cols();
  MatrixXd flat(static_cast<Index>(windows.size()), l * d);
  for (std::size_t r = 0; r < windows.size(); ++r) {
    if (windows[r].rows() != l || windows[r].cols() != d) {
      throw ConfigError("window batch: inconsistent window shapes");
    }
    // Row-major flattening of an L x D window is exactly step-major order.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = windows[r];
    flat.row(static_cast<Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(rm.data(), l * d);
  }
  return {std::move(flat), l, d};
}

MatrixXd WindowBatch::window(Index r) const {
  MatrixXd w(steps, features);
  for (Index t = 0; t < steps; ++t) w.row(t) = inputs.row(r).segment(t * features, features);
  return w;
}

ForwardCache forward_batch(const LstmParams& params, const WindowBatch& batch) {
  const Index h = params.hidden_size();
  const Index d = params.input_size();
  const Index b = batch.size();
  if (batch.features != d) throw ConfigError("forward: window feature count does not match the model");
  if (batch.steps < 1) throw ConfigError("forward: window length must be >= 1");

  const auto w = params.gate_weights();
  const auto bias = params.gate_biases();
  ForwardCache cache;
  const auto steps = static_cast<std::size_t>(batch.steps);
  cache.hx.resize(steps);
  cache.gates.resize(steps);
  cache.tanh_c.resize(steps);
  cache.cell.resize(steps + 1);
  cache.cell[0] = MatrixXd::Zero(h, b);
  MatrixXd hidden = MatrixXd::Zero(h, b);

  for (std::size_t t = 0; t < steps; ++t) {
    MatrixXd& hx = cache.hx[t];
    hx.resize(h + d, b);
    hx.topRows(h) = hidden;
    hx.bottomRows(d) = batch.inputs.middleCols(static_cast<Index>(t) * d, d).transpose();

    MatrixXd& z = cache.gates[t];
    z.noalias() = w * hx;
    z.colwise() += bias;
    z.topRows(3 * h) = sigmoid(z.topRows(3 * h).array()).matrix();
    z.bottomRows(h) = z.bottomRows(h).array().tanh().matrix();

    cache.cell[t + 1] = (z.topRows(h).array() * cache.cell[t].array() +
                         z.middleRows(h, h).array() * z.bottomRows(h).array())
                            .matrix();
    cache.tanh_c[t] = cache.cell[t + 1].array().tanh().matrix();
    hidden = (z.middleRows(2 * h, h).array() * cache.tanh_c[t].array()).matrix();
  }
  cache.predictions = params.out_weights().transpose() * hidden;
  cache.predictions.array() += params.out_bias();
  cache.h_last = std::move(hidden);
  if (!cache.predictions.allFinite() || !cache.cell.back().allFinite()) {
    throw NumericError("forward: non-finite activation");
  }
  return cache;
}

ForwardResult forward(const LstmParams& params, const Eigen::Ref<const MatrixXd>& window) {
  const WindowBatch batch = WindowBatch::from_windows({MatrixXd(window)});
  ForwardResult out;
  out.cache = forward_batch(params, batch);
  out.prediction = out.cache.predictions[0];
  return out;
}

LstmGrads backward_batch(const LstmParams& params, const ForwardCache& cache,
                         const Eigen::Ref<const VectorXd>& targets, double scale) {
  const Index h = params.hidden_size();
  const Index b = cache.predictions.size();
  if (targets.size() != b) throw ConfigError("backward: target count does not match the batch");

  LstmGrads grads(h, params.input_size());
  const Eigen::RowVectorXd dpred = scale * (cache.predictions - targets.transpose());
  grads.out_weights().noalias() = cache.h_last * dpred.transpose();
  grads.out_bias() = dpred.sum();

  const auto w = params.gate_weights();
  auto gw = grads.gate_weights();
  auto gb = grads.gate_biases();
  MatrixXd dh = params.out_weights() * dpred;
  MatrixXd dc = MatrixXd::Zero(h, b);
  MatrixXd dz(4 * h, b);

  for (std::size_t t = cache.gates.size(); t-- > 0;) {
    const MatrixXd& z = cache.gates[t];
    const auto f = z.topRows(h).array();
    const auto i = z.middleRows(h, h).array();
    const auto o = z.middleRows(2 * h, h).array();
    const auto g = z.bottomRows(h).array();
    const auto tc = cache.tanh_c[t].array();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.topRows(h) = (dc.array() * cache.cell[t].array() * f * (1.0 - f)).matrix();
    dz.middleRows(h, h) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleRows(2 * h, h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dz.bottomRows(h) = (dc.array() * i * (1.0 - g.square())).matrix();
    dc.array() *= f;

    gw.noalias() += dz * cache.hx[t].transpose();
    gb += dz.rowwise().sum();
    if (t > 0) dh.noalias() = (w.transpose() * dz).topRows(h);
  }
  return grads;
}

LstmGrads backward(const LstmParams& params, const ForwardCache& cache, double target) {
  VectorXd y(1);
  y << target;
  return backward_batch(params, cache, y, 1.0);
}

void TrainConfig::validate() const {
  if (hidden_size < 1) throw ConfigError("train: hidden_size must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be >= 0");
}

AdamState AdamState::zeros(Index size) { return {VectorXd::Zero(size), VectorXd::Zero(size), 0}; }

void adam_update(LstmParams& params, LstmGrads& grads, AdamState& state, const TrainConfig& config) {
  VectorXd& g = grads.flat();
  if (g.size() != params.size()) throw ConfigError("adam: gradient shape mismatch");
  if (state.m.size() != g.size()) state = AdamState::zeros(g.size());
  if (config.clip_norm > 0.0) {
    const double norm = g.norm();
    if (norm > config.clip_norm) g *= config.clip_norm / norm;
  }
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * g;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  params.flat().array() -=
      config.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.epsilon);
}

LstmParams init_params(Index hidden, Index input, std::uint64_t seed) {
  LstmParams p(hidden, input);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  for (Index k = 0; k < p.size(); ++k) p.flat()[k] = u(rng);
  p.bias(Gate::forget).array() += 1.0;
  return p;
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  const Index n = data.windows.size();
  if (n < 1) throw DataError("train: empty dataset");
  if (data.targets.size() != n) throw DataError("train: window and target counts differ");
  if (!data.windows.inputs.allFinite() || !data.targets.allFinite()) {
    throw DataError("train: non-finite training data");
  }

  TrainResult out;
  out.params = init_params(config.hidden_size, data.windows.features, config.seed);
  AdamState adam = AdamState::zeros(out.params.size());
  std::mt19937_64 shuffle_rng(config.seed ^ 0xd1b54a32d192ed03ULL);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  out.loss_trace.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sse = 0.0;
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index count = std::min(config.batch_size, n - start);
      const std::vector<Index> rows(order.begin() + start, order.begin() + start + count);
      const WindowBatch batch(data.windows.inputs(rows, Eigen::all), data.windows.steps,
                              data.windows.features);
      const VectorXd y = data.targets(rows);
      ForwardCache cache;
      try {
        cache = forward_batch(out.params, batch);
      } catch (const NumericError&) {
        throw NumericError("train: loss became non-finite at epoch " + std::to_string(epoch));
      }
      sse += (cache.predictions.transpose() - y).squaredNorm();
      LstmGrads grads = backward_batch(out.params, cache, y, 1.0 / static_cast<double>(count));
      adam_update(out.params, grads, adam, config);
    }
    const double mse = sse / static_cast<double>(n);
    if (!std::isfinite(mse) || !out.params.flat().allFinite()) {
      throw NumericError("train: loss became non-finite at epoch " + std::to_string(epoch));
    }
    out.loss_trace.push_back(mse);
  }
  return out;
}

VectorXd predict(const LstmParams& params, const WindowBatch& windows) {
  constexpr Index chunk = 1024;
  VectorXd out(windows.size());
  for (Index start = 0; start < windows.size(); start += chunk) {
    const Index count = std::min(chunk, windows.size() - start);
    const WindowBatch part(windows.inputs.middleRows(start, count), windows.steps, windows.features);
    out.segment(start, count) = forward_batch(params, part).predictions.transpose();
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'M', 'V', 'L', 'S', 'T', 'M', '0', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) throw DataError("model file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void save_params(const LstmParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params.hidden_size()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params.input_size()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  for (Index k = 0; k < params.size(); ++k) put_le<double>(out, params.flat()[k]);
  if (!out) throw DataError("write failed: " + path.string());
}

LstmParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError(path.string() + ": not an LSTM model file");
  }
  const auto hidden = static_cast<Index>(get_le<std::uint64_t>(in));
  const auto input = static_cast<Index>(get_le<std::uint64_t>(in));
  const auto count = static_cast<Index>(get_le<std::uint64_t>(in));
  if (hidden < 1 || input < 1 || hidden > (1 << 20) || input > (1 << 20) ||
      count != LstmParams::size_for(hidden, input)) {
    throw DataError(path.string() + ": inconsistent shape header");
  }
  LstmParams p(hidden, input);
  for (Index k = 0; k < count; ++k) p.flat()[k] = get_le<double>(in);
  in.peek();
  if (!in.eof()) throw DataError(path.string() + ": trailing bytes after parameters");
  p.validate();
  return p;
}

void write_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,mse\n";
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, trace[e]);
    out << buf;
  }
}

}  // namespace mvmdlstm::lstm
