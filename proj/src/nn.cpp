#include "cyberteach/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cyberteach {

Mlp::Mlp(std::vector<int> layer_sizes, uint64_t seed, bool zero_last_layer)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");

  size_t total = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weight_offsets_.push_back(total);
    total += static_cast<size_t>(sizes_[l]) * sizes_[l + 1];
    bias_offsets_.push_back(total);
    total += sizes_[l + 1];
  }
  params_.assign(total, 0.0);

  // Xavier-uniform weights, zero biases.
  std::mt19937_64 rng(seed);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    bool last = l + 2 == sizes_.size();
    if (last && zero_last_layer) continue;
    double bound = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    size_t n = static_cast<size_t>(sizes_[l]) * sizes_[l + 1];
    for (size_t i = 0; i < n; ++i) params_[weight_offsets_[l] + i] = dist(rng);
  }
}

std::vector<double> Mlp::forward(const std::vector<double>& input) const {
  Cache cache;
  return forward_cached(input, cache);
}

std::vector<double> Mlp::forward_cached(const std::vector<double>& input,
                                        Cache& cache) const {
  if (static_cast<int>(input.size()) != sizes_.front()) {
    throw std::invalid_argument("Mlp input size mismatch: got " +
                                std::to_string(input.size()) + ", expected " +
                                std::to_string(sizes_.front()));
  }
  cache.activations.clear();
  cache.pre_activations.clear();
  cache.activations.push_back(input);

  std::vector<double> current = input;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    int in = sizes_[l];
    int out = sizes_[l + 1];
    const double* w = &params_[weight_offsets_[l]];
    const double* b = &params_[bias_offsets_[l]];
    std::vector<double> z(out);
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * current[i];
      z[o] = acc;
    }
    cache.pre_activations.push_back(z);
    bool last = l + 2 == sizes_.size();
    if (!last) {
      for (double& v : z) v = std::tanh(v);
    }
    cache.activations.push_back(z);
    current = std::move(z);
  }
  return current;
}

void Mlp::backward(const Cache& cache, const std::vector<double>& output_grad,
                   std::vector<double>& grad) const {
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);

  std::vector<double> delta = output_grad;
  for (size_t li = sizes_.size() - 1; li-- > 0;) {
    int in = sizes_[li];
    int out = sizes_[li + 1];
    const double* w = &params_[weight_offsets_[li]];
    double* gw = &grad[weight_offsets_[li]];
    double* gb = &grad[bias_offsets_[li]];
    const std::vector<double>& a_in = cache.activations[li];

    for (int o = 0; o < out; ++o) {
      gb[o] += delta[o];
      double* grow = gw + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += delta[o] * a_in[i];
    }
    if (li == 0) break;

    std::vector<double> prev(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    // Through the tanh of the previous layer.
    const std::vector<double>& a_prev = cache.activations[li];
    for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a_prev[i] * a_prev[i];
    delta = std::move(prev);
  }
}

Adam::Adam(size_t param_count, double beta1, double beta2, double eps)
    : m_(param_count, 0.0), v_(param_count, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam size mismatch");
  }
  t_ += 1;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    double mhat = m_[i] / bc1;
    double vhat = v_[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
  }
}

void Adam::restore(std::vector<double> m, std::vector<double> v, long t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double max = logits.front();
  for (double v : logits) max = std::max(max, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace cyberteach
