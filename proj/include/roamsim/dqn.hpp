#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roamsim/rng.hpp"

namespace roamsim::dqn {

/// Fully connected network: tanh on every hidden layer, identity on the
/// output. Parameters live in one flat vector, layer by layer, weights
/// (row-major, out x in) followed by biases.
class Mlp {
 public:
  Mlp() = default;

  /// Zero-initialised network.
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
    for (int s : sizes_) {
      if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
      bias_offset_.push_back(offset);
      offset += static_cast<std::size_t>(sizes_[l + 1]);
    }
    params_.assign(offset, 0.0);
  }

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  Mlp(std::vector<int> sizes, Rng& rng) : Mlp(std::move(sizes)) {
    for (std::size_t l = 0; l < layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in(l)));
      const std::size_t count = static_cast<std::size_t>(in(l) + 1) * static_cast<std::size_t>(out(l));
      for (std::size_t i = 0; i < count; ++i) params_[weight_offset_[l] + i] = rng.uniform(-bound, bound);
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t layers() const { return sizes_.size() - 1; }
  int in(std::size_t l) const { return sizes_[l]; }
  int out(std::size_t l) const { return sizes_[l + 1]; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  double& weight(std::size_t l, int o, int i) { return params_[weight_offset_[l] + static_cast<std::size_t>(o * in(l) + i)]; }
  double weight(std::size_t l, int o, int i) const {
    return params_[weight_offset_[l] + static_cast<std::size_t>(o * in(l) + i)];
  }
  double& bias(std::size_t l, int o) { return params_[bias_offset_[l] + static_cast<std::size_t>(o)]; }
  double bias(std::size_t l, int o) const { return params_[bias_offset_[l] + static_cast<std::size_t>(o)]; }

  bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }
  bool operator==(const Mlp&) const = default;

  /// Post-activation outputs of every layer; front() is the input.
  using Tape = std::vector<std::vector<double>>;

  Tape forward_tape(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim()) {
      throw std::invalid_argument("Mlp::forward: expected input of size " + std::to_string(input_dim()) + ", got " +
                                  std::to_string(x.size()));
    }
    Tape tape;
    tape.reserve(sizes_.size());
    tape.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < layers(); ++l) {
      const auto& h = tape.back();
      std::vector<double> z(static_cast<std::size_t>(out(l)));
      const double* w = params_.data() + weight_offset_[l];
      const double* b = params_.data() + bias_offset_[l];
      const int n_in = in(l);
      for (int o = 0; o < out(l); ++o) {
        double acc = b[o];
        const double* row = w + static_cast<std::ptrdiff_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) acc += row[i] * h[static_cast<std::size_t>(i)];
        z[static_cast<std::size_t>(o)] = (l + 1 < layers()) ? std::tanh(acc) : acc;
      }
      tape.push_back(std::move(z));
    }
    return tape;
  }

  std::vector<double> forward(std::span<const double> x) const { return std::move(forward_tape(x).back()); }

  /// Accumulates dL/dtheta into `grad` (same layout as parameters()) given
  /// dL/d(output) for the sample recorded in `tape`.
  void backward(const Tape& tape, std::span<const double> grad_out, std::span<double> grad) const {
    std::vector<double> g(grad_out.begin(), grad_out.end());
    for (std::size_t l = layers(); l-- > 0;) {
      const auto& input = tape[l];
      const auto& output = tape[l + 1];
      if (l + 1 < layers()) {
        for (std::size_t o = 0; o < g.size(); ++o) g[o] *= 1.0 - output[o] * output[o];
      }
      const int n_in = in(l);
      double* gw = grad.data() + weight_offset_[l];
      double* gb = grad.data() + bias_offset_[l];
      const double* w = params_.data() + weight_offset_[l];
      std::vector<double> g_in(static_cast<std::size_t>(n_in), 0.0);
      for (int o = 0; o < out(l); ++o) {
        const double d = g[static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        gb[o] += d;
        double* gw_row = gw + static_cast<std::ptrdiff_t>(o) * n_in;
        const double* w_row = w + static_cast<std::ptrdiff_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) {
          gw_row[i] += d * input[static_cast<std::size_t>(i)];
          g_in[static_cast<std::size_t>(i)] += d * w_row[i];
        }
      }
      g = std::move(g_in);
    }
  }

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
};

/// Index of the largest value among entries with mask[i] set; lowest index
/// wins ties. Returns -1 when nothing is selectable.
inline int masked_argmax(std::span<const double> values, std::span<const std::uint8_t> mask) {
  int best = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (best < 0 || values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

struct Transition {
  std::vector<double> state;
  std::vector<double> next_state;
  int action = 0;
  double reward = 0;
  bool terminal = false;
  std::vector<std::uint8_t> next_mask;  // actions available in next_state; empty = all
};

/// Fixed-capacity ring of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    if (items_.size() < batch || batch == 0) throw std::logic_error("ReplayBuffer: not enough transitions to sample");
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(items_.size()));
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

struct DqnHyper {
  double learning_rate = 0.3;  // plain gradient descent diverges easily at this rate; 0.01 is a safer choice
  double discount = 0.9;
  int batch_size = 32;
  int target_sync = 100;
  int capacity = 10000;
};

/// y = W + discount * max_a' Q_target(s', a') over available actions, or W
/// when terminal (or nothing is available in s').
inline double bellman_target(double reward, std::span<const double> next_state, const Mlp& target, double discount,
                             bool terminal, std::span<const std::uint8_t> next_mask = {}) {
  if (terminal || discount == 0.0) return reward;
  const auto q = target.forward(next_state);
  const int best = masked_argmax(q, next_mask);
  if (best < 0) return reward;
  return reward + discount * q[static_cast<std::size_t>(best)];
}

/// Mean over the batch of (y - Q(s, a))^2.
inline double loss(std::span<const Transition* const> batch, const Mlp& net, std::span<const double> targets) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  double total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto q = net.forward(batch[i]->state);
    const double r = targets[i] - q.at(static_cast<std::size_t>(batch[i]->action));
    total += r * r;
  }
  return total / static_cast<double>(batch.size());
}

/// Loss value and its gradient with respect to every parameter of `net`,
/// holding the targets fixed (semi-gradient).
inline double loss_gradient(std::span<const Transition* const> batch, const Mlp& net, std::span<const double> targets,
                            std::vector<double>& grad) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  grad.assign(net.parameter_count(), 0.0);
  const double n = static_cast<double>(batch.size());
  double total = 0;
  std::vector<double> g_out(static_cast<std::size_t>(net.output_dim()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto tape = net.forward_tape(batch[i]->state);
    const auto a = static_cast<std::size_t>(batch[i]->action);
    const double r = targets[i] - tape.back().at(a);
    total += r * r;
    std::fill(g_out.begin(), g_out.end(), 0.0);
    g_out[a] = -2.0 * r / n;
    net.backward(tape, g_out, grad);
  }
  return total / n;
}

inline std::vector<double> targets_for(std::span<const Transition* const> batch, const Mlp& target, double discount) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto* t : batch) {
    y.push_back(bellman_target(t->reward, t->next_state, target, discount, t->terminal, t->next_mask));
  }
  return y;
}

/// One gradient-descent step on a sampled batch. Returns the loss before the
/// update.
inline double train_on(std::span<const Transition* const> batch, Mlp& net, const Mlp& target, const DqnHyper& hyper) {
  const auto y = targets_for(batch, target, hyper.discount);
  std::vector<double> grad;
  const double value = loss_gradient(batch, net, y, grad);
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= hyper.learning_rate * grad[i];
  return value;
}

inline double train_step(Mlp& net, const Mlp& target, const ReplayBuffer& buffer, const DqnHyper& hyper, Rng& rng) {
  const auto idx = buffer.sample_indices(static_cast<std::size_t>(hyper.batch_size), rng);
  std::vector<const Transition*> batch;
  batch.reserve(idx.size());
  for (auto i : idx) batch.push_back(&buffer[i]);
  return train_on(batch, net, target, hyper);
}

inline void sync_target(const Mlp& net, Mlp& target) {
  if (!net.same_architecture(target)) throw std::invalid_argument("sync_target: architecture mismatch");
  std::copy(net.parameters().begin(), net.parameters().end(), target.parameters().begin());
}

inline constexpr std::string_view kCheckpointMagic = "roamsim-mlp";
inline constexpr int kCheckpointVersion = 1;

/// Text checkpoint: a header line, the layer sizes, then one hex-float
/// parameter per line (exact round trip).
inline void save_checkpoint(const Mlp& net, std::ostream& os) {
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n' << "sizes";
  for (int s : net.sizes()) os << ' ' << s;
  os << '\n';
  for (double p : net.parameters()) {
    std::ostringstream cell;
    cell << std::hexfloat << p;
    os << cell.str() << '\n';
  }
}

inline Mlp load_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) throw std::runtime_error("checkpoint: bad header");
  if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  std::string tag;
  if (!(is >> tag) || tag != "sizes") throw std::runtime_error("checkpoint: missing sizes");
  std::string line;
  std::getline(is, line);
  std::istringstream sizes_in(line);
  std::vector<int> sizes;
  for (int s; sizes_in >> s;) sizes.push_back(s);
  Mlp net(sizes);
  for (auto& p : net.parameters()) {
    std::string cell;
    if (!(is >> cell)) throw std::runtime_error("checkpoint: truncated parameter list");
    char* end = nullptr;
    p = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) throw std::runtime_error("checkpoint: malformed parameter '" + cell + "'");
  }
  return net;
}

}  // namespace roamsim::dqn
