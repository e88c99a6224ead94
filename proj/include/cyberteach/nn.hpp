#pragma once

#include <cstdint>
#include <vector>

namespace cyberteach {

/// Fully connected network with tanh hidden activations and a linear output
/// layer. Parameters live in one contiguous vector (weights row-major, then
/// biases, per layer) so optimizers, checkpoints and finite-difference probes
/// can treat the model as a flat array.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, uint64_t seed, bool zero_last_layer = false);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  size_t param_count() const { return params_.size(); }

  std::vector<double> forward(const std::vector<double>& input) const;

  /// Forward pass that keeps per-layer activations for backward().
  struct Cache {
    std::vector<std::vector<double>> activations;  // activations[0] = input
    std::vector<std::vector<double>> pre_activations;
  };
  std::vector<double> forward_cached(const std::vector<double>& input, Cache& cache) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Cache& cache, const std::vector<double>& output_grad,
                std::vector<double>& grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<size_t> weight_offsets_;
  std::vector<size_t> bias_offsets_;

  friend class MlpLayout;
};

/// Adam optimizer over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  explicit Adam(size_t param_count, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
  long step_count() const { return t_; }

  // Checkpoint access.
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, long t);

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
};

std::vector<double> softmax(const std::vector<double>& logits);
double entropy(const std::vector<double>& probs);  // natural log

}  // namespace cyberteach
