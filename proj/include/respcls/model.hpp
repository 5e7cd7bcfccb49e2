#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "respcls/matrix.hpp"

namespace respcls {

using Real = double;

// Small convolutional encoder: input average pool, a 3x3 tanh conv over
// (band, time), a 2x2 average pool, then a second tanh conv that runs along
// time only with the band axis folded into its input channels (bands keep
// their identity instead of being averaged away), global average pooling
// over time to a D-dimensional embedding, and two affine heads (pathology
// bits, patient match). Everything runs in 64-bit floats so gradient checks
// are exact.
struct ModelConfig {
  std::size_t input_bands = 128;
  std::size_t stem_pool_h = 4;
  std::size_t stem_pool_w = 4;
  std::size_t conv1_channels = 16;
  std::size_t embed_dim = 64;  // conv2 output channels = embedding width
  std::size_t main_arity = 3;  // 2 in the two-label ablation arm

  void validate() const;
};

struct ParamSlot {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
};

class Network {
 public:
  explicit Network(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Encoder and main head draw from one stream, the aux head from an
  // independent one, so toggling the aux head cannot perturb the rest.
  void init_params(std::uint64_t seed);
  void init_params(std::uint64_t seed, std::uint64_t aux_seed);

  std::span<Real> params() { return params_; }
  std::span<const Real> params() const { return params_; }
  const std::vector<ParamSlot>& slots() const { return slots_; }
  std::size_t param_count() const { return params_.size(); }

  struct ForwardCache {
    std::size_t h0 = 0, w0 = 0, h1 = 0, w1 = 0;
    std::vector<Real> stem;   // [h0 * w0]
    std::vector<Real> act1;   // [c1, h0, w0]
    std::vector<Real> pool1;  // [c1, h1, w1]
    std::vector<Real> act2;   // [D, w1] (time only)
    std::vector<Real> z;      // [D]
    std::vector<Real> main_logits;
    std::vector<Real> aux_logits;
  };

  // Band rows reaching the second conv layer.
  std::size_t band_rows() const {
    return cfg_.input_bands / cfg_.stem_pool_h / 2;
  }

  // Deterministic; throws on input shape mismatch.
  ForwardCache forward(const Matrix& spec) const;

  // Accumulates d(loss_main + alpha * loss_aux)/dparams for one sample into
  // grad (flat, same layout as params()). y_aux < 0 skips the aux task
  // entirely.
  void backward(const ForwardCache& f, std::span<const Real> y_main, int y_aux,
                Real alpha, std::span<Real> grad) const;

 private:
  ModelConfig cfg_;
  std::vector<Real> params_;
  std::vector<ParamSlot> slots_;

  std::span<const Real> slot_span(std::size_t i) const;
};

// Mean over label dimensions of binary cross-entropy with logits, in the
// numerically stable form.
Real bce_with_logits_mean(std::span<const Real> logits,
                          std::span<const Real> targets);

// Two-class softmax cross-entropy via log-sum-exp.
Real softmax_ce2(std::span<const Real> logits, int target);

// L_total = L_main + alpha * L_aux
Real loss_total(Real loss_main, Real loss_aux, Real alpha);

Real stable_sigmoid(Real x);

struct TrainSample {
  Matrix spec;
  std::vector<Real> y_main;
  int y_aux = -1;  // -1: no aux task for this sample
};

struct BatchLoss {
  Real main = 0.0;
  Real aux = 0.0;
  Real total = 0.0;
};

// Mean loss over the batch. Per-sample values are reduced with a fixed
// pairwise tree, so the result is independent of thread count and exactly
// invariant under batch duplication.
BatchLoss batch_loss(const Network& net,
                     std::span<const TrainSample* const> batch, Real alpha,
                     int threads = 1);

// Mean gradient over the batch (same reduction contract). grad is resized
// and overwritten.
BatchLoss batch_gradient(const Network& net,
                         std::span<const TrainSample* const> batch, Real alpha,
                         std::vector<Real>& grad, int threads = 1);

// Pairwise-tree sum of equally-sized vectors, reducing index order
// ((0+1)+(2+3))+... ; used for both losses and gradients.
void pairwise_reduce_inplace(std::vector<std::vector<Real>>& buffers);

struct SgdState {
  std::vector<Real> velocity;
};

// Classical momentum: v = mu*v + g; w -= lr*v.
void sgd_step(Network& net, std::span<const Real> grad, SgdState& state,
              Real learning_rate, Real momentum);

// Splits [0, n) into fixed contiguous chunks; results must be written to
// disjoint slots so the outcome is identical for any thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

int resolve_threads(int requested);

}  // namespace respcls
