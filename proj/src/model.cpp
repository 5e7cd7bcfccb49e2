#include "respcls/model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "respcls/rng.hpp"

namespace respcls {

void ModelConfig::validate() const {
  if (input_bands == 0 || stem_pool_h == 0 || stem_pool_w == 0 ||
      conv1_channels == 0 || embed_dim == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (main_arity != 2 && main_arity != 3) {
    throw std::invalid_argument("main head arity must be 2 or 3");
  }
  if (input_bands / stem_pool_h / 2 < 1) {
    throw std::invalid_argument(
        "input_bands too small for the stem pool (no band rows left)");
  }
}

Network::Network(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t c1 = cfg_.conv1_channels;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t m = cfg_.main_arity;
  const std::size_t bands = band_rows();

  auto add = [this](std::string name, std::vector<std::size_t> shape) {
    ParamSlot s;
    s.name = std::move(name);
    s.shape = std::move(shape);
    s.offset = params_.size();
    std::size_t n = s.size();
    slots_.push_back(s);
    params_.resize(params_.size() + n, 0.0);
  };
  add("conv1.weight", {c1, 1, 3, 3});
  add("conv1.bias", {c1});
  add("conv2.weight", {d, c1, bands, 3});  // time-only kernel, bands unshared
  add("conv2.bias", {d});
  add("main_head.weight", {m, d});
  add("main_head.bias", {m});
  add("aux_head.weight", {2, d});
  add("aux_head.bias", {2});
}

void Network::init_params(std::uint64_t seed) {
  init_params(seed, derive_seed(seed, "aux-head"));
}

void Network::init_params(std::uint64_t seed, std::uint64_t aux_seed) {
  const std::size_t c1 = cfg_.conv1_channels;
  const std::size_t d = cfg_.embed_dim;
  std::fill(params_.begin(), params_.end(), 0.0);

  Rng rng(derive_seed(seed, "params"));
  auto fill = [&](const char* name, double sigma, Rng& r) {
    for (auto& s : slots_) {
      if (s.name != name) continue;
      for (std::size_t i = 0; i < s.size(); ++i) {
        params_[s.offset + i] = sigma * r.normal();
      }
      return;
    }
    throw std::logic_error("unknown slot");
  };
  fill("conv1.weight", std::sqrt(1.0 / 9.0), rng);
  fill("conv2.weight",
       std::sqrt(1.0 / (3.0 * static_cast<double>(c1 * band_rows()))), rng);
  fill("main_head.weight", std::sqrt(1.0 / static_cast<double>(d)), rng);

  Rng aux_rng(derive_seed(aux_seed, "aux-params"));
  fill("aux_head.weight", std::sqrt(1.0 / static_cast<double>(d)), aux_rng);
}

std::span<const Real> Network::slot_span(std::size_t i) const {
  const auto& s = slots_[i];
  return std::span<const Real>(params_.data() + s.offset, s.size());
}

namespace {
enum SlotId {
  kW1 = 0,
  kB1,
  kW2,
  kB2,
  kWm,
  kBm,
  kWa,
  kBa,
};
}  // namespace

Network::ForwardCache Network::forward(const Matrix& spec) const {
  if (spec.rows != cfg_.input_bands) {
    throw std::invalid_argument("input has " + std::to_string(spec.rows) +
                                " bands, model expects " +
                                std::to_string(cfg_.input_bands));
  }
  const std::size_t ph = cfg_.stem_pool_h, pw = cfg_.stem_pool_w;
  const std::size_t h0 = spec.rows / ph, w0 = spec.cols / pw;
  if (w0 < 4) {
    throw std::invalid_argument(
        "input too short: " + std::to_string(spec.cols) +
        " frames leave fewer than 4 columns after the stem pool");
  }
  const std::size_t c1 = cfg_.conv1_channels;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t h1 = h0 / 2, w1 = w0 / 2;

  ForwardCache f;
  f.h0 = h0;
  f.w0 = w0;
  f.h1 = h1;
  f.w1 = w1;

  // stem: average pool ph x pw
  f.stem.resize(h0 * w0);
  const double inv_stem = 1.0 / static_cast<double>(ph * pw);
  for (std::size_t y = 0; y < h0; ++y) {
    for (std::size_t x = 0; x < w0; ++x) {
      double acc = 0.0;
      for (std::size_t a = 0; a < ph; ++a) {
        const double* row = &spec.v[(y * ph + a) * spec.cols + x * pw];
        for (std::size_t b = 0; b < pw; ++b) acc += row[b];
      }
      f.stem[y * w0 + x] = acc * inv_stem;
    }
  }

  const Real* w1p = params_.data() + slots_[kW1].offset;
  const Real* b1p = params_.data() + slots_[kB1].offset;
  const Real* w2p = params_.data() + slots_[kW2].offset;
  const Real* b2p = params_.data() + slots_[kB2].offset;
  const Real* wmp = params_.data() + slots_[kWm].offset;
  const Real* bmp = params_.data() + slots_[kBm].offset;
  const Real* wap = params_.data() + slots_[kWa].offset;
  const Real* bap = params_.data() + slots_[kBa].offset;

  // conv1 (1 -> c1, 3x3, pad 1) + tanh
  f.act1.resize(c1 * h0 * w0);
  for (std::size_t oc = 0; oc < c1; ++oc) {
    const Real* k = w1p + oc * 9;
    Real* out = f.act1.data() + oc * h0 * w0;
    for (std::size_t y = 0; y < h0; ++y) {
      for (std::size_t x = 0; x < w0; ++x) {
        double acc = b1p[oc];
        for (std::size_t a = 0; a < 3; ++a) {
          std::size_t yy = y + a;
          if (yy < 1 || yy > h0) continue;
          const Real* in_row = f.stem.data() + (yy - 1) * w0;
          for (std::size_t b = 0; b < 3; ++b) {
            std::size_t xx = x + b;
            if (xx < 1 || xx > w0) continue;
            acc += k[a * 3 + b] * in_row[xx - 1];
          }
        }
        out[y * w0 + x] = std::tanh(acc);
      }
    }
  }

  // 2x2 average pool
  f.pool1.resize(c1 * h1 * w1);
  for (std::size_t c = 0; c < c1; ++c) {
    const Real* in = f.act1.data() + c * h0 * w0;
    Real* out = f.pool1.data() + c * h1 * w1;
    for (std::size_t y = 0; y < h1; ++y) {
      for (std::size_t x = 0; x < w1; ++x) {
        out[y * w1 + x] = 0.25 * (in[(2 * y) * w0 + 2 * x] +
                                  in[(2 * y) * w0 + 2 * x + 1] +
                                  in[(2 * y + 1) * w0 + 2 * x] +
                                  in[(2 * y + 1) * w0 + 2 * x + 1]);
      }
    }
  }

  // conv2: kernel 3 along time, pad 1, every (channel, band) pair is an
  // input channel of its own, so band identity survives to the embedding
  f.act2.resize(d * w1);
  for (std::size_t oc = 0; oc < d; ++oc) {
    Real* out = f.act2.data() + oc * w1;
    const Real* kbase = w2p + oc * c1 * h1 * 3;
    for (std::size_t x = 0; x < w1; ++x) {
      double acc = b2p[oc];
      const Real* k = kbase;
      for (std::size_t ic = 0; ic < c1; ++ic) {
        const Real* in = f.pool1.data() + ic * h1 * w1;
        for (std::size_t band = 0; band < h1; ++band, k += 3) {
          const Real* in_row = in + band * w1;
          for (std::size_t b = 0; b < 3; ++b) {
            std::size_t xx = x + b;
            if (xx < 1 || xx > w1) continue;
            acc += k[b] * in_row[xx - 1];
          }
        }
      }
      out[x] = std::tanh(acc);
    }
  }

  // global average pool over time
  f.z.resize(d);
  const double inv_gap = 1.0 / static_cast<double>(w1);
  for (std::size_t c = 0; c < d; ++c) {
    const Real* in = f.act2.data() + c * w1;
    double acc = 0.0;
    for (std::size_t i = 0; i < w1; ++i) acc += in[i];
    f.z[c] = acc * inv_gap;
  }

  const std::size_t m = cfg_.main_arity;
  f.main_logits.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = bmp[j];
    const Real* wrow = wmp + j * d;
    for (std::size_t c = 0; c < d; ++c) acc += wrow[c] * f.z[c];
    f.main_logits[j] = acc;
  }
  f.aux_logits.resize(2);
  for (std::size_t j = 0; j < 2; ++j) {
    double acc = bap[j];
    const Real* wrow = wap + j * d;
    for (std::size_t c = 0; c < d; ++c) acc += wrow[c] * f.z[c];
    f.aux_logits[j] = acc;
  }
  return f;
}

void Network::backward(const ForwardCache& f, std::span<const Real> y_main,
                       int y_aux, Real alpha, std::span<Real> grad) const {
  const std::size_t c1 = cfg_.conv1_channels;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t m = cfg_.main_arity;
  if (y_main.size() != m) {
    throw std::invalid_argument("main target arity mismatch");
  }
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  const std::size_t h0 = f.h0, w0 = f.w0, h1 = f.h1, w1 = f.w1;

  const Real* w2p = params_.data() + slots_[kW2].offset;
  const Real* wmp = params_.data() + slots_[kWm].offset;
  const Real* wap = params_.data() + slots_[kWa].offset;

  Real* gw1 = grad.data() + slots_[kW1].offset;
  Real* gb1 = grad.data() + slots_[kB1].offset;
  Real* gw2 = grad.data() + slots_[kW2].offset;
  Real* gb2 = grad.data() + slots_[kB2].offset;
  Real* gwm = grad.data() + slots_[kWm].offset;
  Real* gbm = grad.data() + slots_[kBm].offset;
  Real* gwa = grad.data() + slots_[kWa].offset;
  Real* gba = grad.data() + slots_[kBa].offset;

  // head deltas
  std::vector<Real> dmain(m);
  for (std::size_t j = 0; j < m; ++j) {
    dmain[j] = (stable_sigmoid(f.main_logits[j]) - y_main[j]) /
               static_cast<double>(m);
  }
  std::vector<Real> daux(2, 0.0);
  const bool use_aux = y_aux >= 0;
  if (use_aux) {
    double mx = std::max(f.aux_logits[0], f.aux_logits[1]);
    double e0 = std::exp(f.aux_logits[0] - mx);
    double e1 = std::exp(f.aux_logits[1] - mx);
    double inv = 1.0 / (e0 + e1);
    daux[0] = alpha * (e0 * inv - (y_aux == 0 ? 1.0 : 0.0));
    daux[1] = alpha * (e1 * inv - (y_aux == 1 ? 1.0 : 0.0));
  }

  std::vector<Real> dz(d, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const Real* wrow = wmp + j * d;
    for (std::size_t c = 0; c < d; ++c) {
      gwm[j * d + c] += dmain[j] * f.z[c];
      dz[c] += dmain[j] * wrow[c];
    }
    gbm[j] += dmain[j];
  }
  if (use_aux) {
    for (std::size_t j = 0; j < 2; ++j) {
      const Real* wrow = wap + j * d;
      for (std::size_t c = 0; c < d; ++c) {
        gwa[j * d + c] += daux[j] * f.z[c];
        dz[c] += daux[j] * wrow[c];
      }
      gba[j] += daux[j];
    }
  }

  // GAP + tanh backward into conv2 pre-activations
  const double inv_gap = 1.0 / static_cast<double>(h1 * w1);
  std::vector<Real> dpre2(d * h1 * w1);
  for (std::size_t c = 0; c < d; ++c) {
    const double dc = dz[c] * inv_gap;
    const Real* a2 = f.act2.data() + c * h1 * w1;
    Real* out = dpre2.data() + c * h1 * w1;
    for (std::size_t i = 0; i < h1 * w1; ++i) {
      out[i] = dc * (1.0 - a2[i] * a2[i]);
    }
  }

  // conv2 weight/bias gradients and input gradient
  std::vector<Real> dpool1(c1 * h1 * w1, 0.0);
  for (std::size_t oc = 0; oc < d; ++oc) {
    const Real* dp = dpre2.data() + oc * h1 * w1;
    double bias_acc = 0.0;
    for (std::size_t i = 0; i < h1 * w1; ++i) bias_acc += dp[i];
    gb2[oc] += bias_acc;
    for (std::size_t ic = 0; ic < c1; ++ic) {
      const Real* in = f.pool1.data() + ic * h1 * w1;
      Real* din = dpool1.data() + ic * h1 * w1;
      Real* gk = gw2 + (oc * c1 + ic) * 9;
      const Real* k = w2p + (oc * c1 + ic) * 9;
      for (std::size_t y = 0; y < h1; ++y) {
        for (std::size_t x = 0; x < w1; ++x) {
          const double g = dp[y * w1 + x];
          if (g == 0.0) continue;
          for (std::size_t a = 0; a < 3; ++a) {
            std::size_t yy = y + a;
            if (yy < 1 || yy > h1) continue;
            for (std::size_t b = 0; b < 3; ++b) {
              std::size_t xx = x + b;
              if (xx < 1 || xx > w1) continue;
              gk[a * 3 + b] += g * in[(yy - 1) * w1 + (xx - 1)];
              din[(yy - 1) * w1 + (xx - 1)] += g * k[a * 3 + b];
            }
          }
        }
      }
    }
  }

  // average-pool + tanh backward into conv1 pre-activations
  std::vector<Real> dpre1(c1 * h0 * w0, 0.0);
  for (std::size_t c = 0; c < c1; ++c) {
    const Real* dpool = dpool1.data() + c * h1 * w1;
    const Real* a1 = f.act1.data() + c * h0 * w0;
    Real* out = dpre1.data() + c * h0 * w0;
    for (std::size_t y = 0; y < h1; ++y) {
      for (std::size_t x = 0; x < w1; ++x) {
        const double g = 0.25 * dpool[y * w1 + x];
        const std::size_t idx[4] = {
            (2 * y) * w0 + 2 * x, (2 * y) * w0 + 2 * x + 1,
            (2 * y + 1) * w0 + 2 * x, (2 * y + 1) * w0 + 2 * x + 1};
        for (std::size_t i : idx) out[i] = g * (1.0 - a1[i] * a1[i]);
      }
    }
  }

  // conv1 weight/bias gradients (no input gradient needed below the stem)
  for (std::size_t oc = 0; oc < c1; ++oc) {
    const Real* dp = dpre1.data() + oc * h0 * w0;
    double bias_acc = 0.0;
    for (std::size_t i = 0; i < h0 * w0; ++i) bias_acc += dp[i];
    gb1[oc] += bias_acc;
    Real* gk = gw1 + oc * 9;
    for (std::size_t y = 0; y < h0; ++y) {
      for (std::size_t x = 0; x < w0; ++x) {
        const double g = dp[y * w0 + x];
        if (g == 0.0) continue;
        for (std::size_t a = 0; a < 3; ++a) {
          std::size_t yy = y + a;
          if (yy < 1 || yy > h0) continue;
          const Real* in_row = f.stem.data() + (yy - 1) * w0;
          for (std::size_t b = 0; b < 3; ++b) {
            std::size_t xx = x + b;
            if (xx < 1 || xx > w0) continue;
            gk[a * 3 + b] += g * in_row[xx - 1];
          }
        }
      }
    }
  }
}

Real stable_sigmoid(Real x) {
  if (x >= 0.0) {
    Real e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  Real e = std::exp(x);
  return e / (1.0 + e);
}

Real bce_with_logits_mean(std::span<const Real> logits,
                          std::span<const Real> targets) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw std::invalid_argument("logit/target arity mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double l = logits[i], y = targets[i];
    acc += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
  }
  return acc / static_cast<double>(logits.size());
}

Real softmax_ce2(std::span<const Real> logits, int target) {
  if (logits.size() != 2 || (target != 0 && target != 1)) {
    throw std::invalid_argument("softmax_ce2 expects 2 logits and target 0/1");
  }
  const double mx = std::max(logits[0], logits[1]);
  const double lse =
      mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
  return lse - logits[target];
}

Real loss_total(Real loss_main, Real loss_aux, Real alpha) {
  return loss_main + alpha * loss_aux;
}

void pairwise_reduce_inplace(std::vector<std::vector<Real>>& buffers) {
  const std::size_t n = buffers.size();
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    for (std::size_t i = 0; i + stride < n; i += 2 * stride) {
      auto& dst = buffers[i];
      const auto& src = buffers[i + stride];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const int t = std::min<std::size_t>(resolve_threads(threads), n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (int w = 0; w < t; ++w) {
    std::size_t lo = n * w / t;
    std::size_t hi = n * (w + 1) / t;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct PerSample {
  BatchLoss loss;
};

BatchLoss reduce_losses(std::vector<std::vector<Real>>& triples) {
  pairwise_reduce_inplace(triples);
  const double inv = 1.0 / static_cast<double>(triples.size());
  BatchLoss out;
  out.main = triples[0][0] * inv;
  out.aux = triples[0][1] * inv;
  out.total = triples[0][2] * inv;
  return out;
}

}  // namespace

BatchLoss batch_loss(const Network& net,
                     std::span<const TrainSample* const> batch, Real alpha,
                     int threads) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<std::vector<Real>> losses(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    const TrainSample& s = *batch[i];
    auto f = net.forward(s.spec);
    double lm = bce_with_logits_mean(f.main_logits, s.y_main);
    double la = s.y_aux >= 0 ? softmax_ce2(f.aux_logits, s.y_aux) : 0.0;
    losses[i] = {lm, la, loss_total(lm, s.y_aux >= 0 ? la : 0.0, alpha)};
  });
  return reduce_losses(losses);
}

BatchLoss batch_gradient(const Network& net,
                         std::span<const TrainSample* const> batch, Real alpha,
                         std::vector<Real>& grad, int threads) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<std::vector<Real>> grads(batch.size());
  std::vector<std::vector<Real>> losses(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    const TrainSample& s = *batch[i];
    auto f = net.forward(s.spec);
    grads[i].assign(net.param_count(), 0.0);
    net.backward(f, s.y_main, s.y_aux, alpha, grads[i]);
    double lm = bce_with_logits_mean(f.main_logits, s.y_main);
    double la = s.y_aux >= 0 ? softmax_ce2(f.aux_logits, s.y_aux) : 0.0;
    losses[i] = {lm, la, loss_total(lm, s.y_aux >= 0 ? la : 0.0, alpha)};
  });
  pairwise_reduce_inplace(grads);
  const double inv = 1.0 / static_cast<double>(batch.size());
  grad.assign(net.param_count(), 0.0);
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = grads[0][k] * inv;
  return reduce_losses(losses);
}

void sgd_step(Network& net, std::span<const Real> grad, SgdState& state,
              Real learning_rate, Real momentum) {
  auto params = net.params();
  if (state.velocity.size() != params.size()) {
    state.velocity.assign(params.size(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.velocity[i] = momentum * state.velocity[i] + grad[i];
    params[i] -= learning_rate * state.velocity[i];
  }
}

}  // namespace respcls
