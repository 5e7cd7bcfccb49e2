#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "respcls/checkpoint.hpp"
#include "respcls/model.hpp"
#include "respcls/rng.hpp"
#include "respcls/synth.hpp"
#include "respcls/train.hpp"

using namespace respcls;

namespace {

ModelConfig tiny_config(std::size_t arity = 3) {
  ModelConfig cfg;
  cfg.input_bands = 16;
  cfg.stem_pool_h = 2;
  cfg.stem_pool_w = 2;
  cfg.conv1_channels = 3;
  cfg.embed_dim = 8;
  cfg.main_arity = arity;
  return cfg;
}

Matrix random_spec(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols, 0.0);
  for (double& v : m.v) v = rng.uniform(-1.5, 1.5);
  return m;
}

std::vector<TrainSample> random_batch(const ModelConfig& cfg, std::size_t n,
                                      bool with_aux, Rng& rng) {
  std::vector<TrainSample> batch(n);
  for (auto& s : batch) {
    s.spec = random_spec(cfg.input_bands, 24, rng);
    s.y_main.resize(cfg.main_arity);
    for (auto& y : s.y_main) y = rng.bernoulli(0.5) ? 1.0 : 0.0;
    s.y_aux = with_aux ? (rng.bernoulli(0.5) ? 1 : 0) : -1;
  }
  return batch;
}

std::vector<const TrainSample*> as_ptrs(const std::vector<TrainSample>& v) {
  std::vector<const TrainSample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

}  // namespace

TEST_CASE("zero logits cost ln 2") {
  std::vector<Real> logits{0.0, 0.0, 0.0};
  std::vector<Real> y{1.0, 0.0, 1.0};
  CHECK(bce_with_logits_mean(logits, y) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(softmax_ce2(std::vector<Real>{2.5, 2.5}, 0) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
}

TEST_CASE("saturated logits cost almost nothing") {
  std::vector<Real> logits{20.0};
  std::vector<Real> y{1.0};
  CHECK(bce_with_logits_mean(logits, y) < 1e-8);
  CHECK(softmax_ce2(std::vector<Real>{20.0, -20.0}, 0) < 1e-8);
}

TEST_CASE("stable losses agree with the naive formulas at moderate logits") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.uniform_index(3);
    std::vector<Real> logits(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = rng.uniform(-6.0, 6.0);
      y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    std::vector<double> lv(logits.begin(), logits.end());
    std::vector<double> yv(y.begin(), y.end());
    CHECK(bce_with_logits_mean(logits, y) ==
          doctest::Approx(oracle::naive_bce_mean(lv, yv)).epsilon(1e-12));

    double l0 = rng.uniform(-6, 6), l1 = rng.uniform(-6, 6);
    int target = rng.bernoulli(0.5) ? 1 : 0;
    CHECK(softmax_ce2(std::vector<Real>{l0, l1}, target) ==
          doctest::Approx(oracle::naive_softmax_ce2(l0, l1, target))
              .epsilon(1e-12));
  }
}

TEST_CASE("loss_total is the exact weighted sum") {
  CHECK(loss_total(0.5, 0.3, 0.1) == doctest::Approx(0.53).epsilon(1e-15));
  CHECK(loss_total(0.7, 123.0, 0.0) == 0.7);
  TrainConfig cfg;
  CHECK(cfg.alpha == 0.1);  // default weight
}

TEST_CASE("losses are non-negative") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<Real> l{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    std::vector<Real> y{rng.bernoulli(0.5) ? 1.0 : 0.0,
                        rng.bernoulli(0.5) ? 1.0 : 0.0};
    CHECK(bce_with_logits_mean(l, y) >= 0.0);
    CHECK(softmax_ce2(l, 0) >= 0.0);
    CHECK(softmax_ce2(l, 1) >= 0.0);
  }
}

TEST_CASE("zeroed heads emit the bias regardless of input") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  net.init_params(1);
  // zero the main head weights, plant a bias
  for (const auto& slot : net.slots()) {
    if (slot.name == "main_head.weight") {
      std::fill_n(net.params().begin() + slot.offset, slot.size(), 0.0);
    }
    if (slot.name == "main_head.bias") {
      net.params()[slot.offset] = 0.25;
      net.params()[slot.offset + 1] = -1.5;
      net.params()[slot.offset + 2] = 3.0;
    }
  }
  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    Matrix spec = random_spec(cfg.input_bands, 30, rng);
    auto f = net.forward(spec);
    CHECK(f.main_logits[0] == 0.25);
    CHECK(f.main_logits[1] == -1.5);
    CHECK(f.main_logits[2] == 3.0);
  }
}

TEST_CASE("forward is deterministic and input-sensitive") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  net.init_params(7);
  Rng rng(3);
  Matrix a = random_spec(cfg.input_bands, 28, rng);
  Matrix b = random_spec(cfg.input_bands, 28, rng);
  auto fa1 = net.forward(a);
  auto fa2 = net.forward(a);
  CHECK(fa1.z == fa2.z);
  CHECK(fa1.main_logits == fa2.main_logits);
  auto fb = net.forward(b);
  CHECK(fa1.z != fb.z);
}

TEST_CASE("forward rejects shape mismatches") {
  Network net(tiny_config());
  net.init_params(1);
  Matrix wrong_bands(8, 30, 0.0);
  CHECK_THROWS_AS(net.forward(wrong_bands), std::invalid_argument);
  Matrix too_short(16, 4, 0.0);
  CHECK_THROWS_AS(net.forward(too_short), std::invalid_argument);
}

// The central check: analytic gradients against central finite differences
// at h = 1e-5 on >= 50 random parameters, in 64-bit floats.
TEST_CASE("backward matches central finite differences") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  net.init_params(1234);
  Rng rng(77);
  auto samples = random_batch(cfg, 4, /*with_aux=*/true, rng);
  auto batch = as_ptrs(samples);
  const Real alpha = 0.1;

  std::vector<Real> grad;
  batch_gradient(net, batch, alpha, grad);

  const Real h = 1e-5;
  double max_rel = 0.0;
  const std::size_t n_checks = 60;
  for (std::size_t c = 0; c < n_checks; ++c) {
    std::size_t i = rng.uniform_index(net.param_count());
    Real saved = net.params()[i];
    net.params()[i] = saved + h;
    double up = batch_loss(net, batch, alpha).total;
    net.params()[i] = saved - h;
    double down = batch_loss(net, batch, alpha).total;
    net.params()[i] = saved;
    double fd = (up - down) / (2.0 * h);
    double rel = std::abs(fd - grad[i]) /
                 std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("alpha zero silences the aux head exactly") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  net.init_params(9);
  Rng rng(5);
  auto samples = random_batch(cfg, 3, /*with_aux=*/true, rng);
  auto batch = as_ptrs(samples);
  std::vector<Real> grad;
  batch_gradient(net, batch, /*alpha=*/0.0, grad);
  for (const auto& slot : net.slots()) {
    if (slot.name.rfind("aux_head", 0) != 0) continue;
    for (std::size_t k = 0; k < slot.size(); ++k) {
      CHECK(grad[slot.offset + k] == 0.0);
    }
  }
}

TEST_CASE("duplicating the batch leaves the mean gradient bit-identical") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  net.init_params(21);
  Rng rng(6);
  auto samples = random_batch(cfg, 2, /*with_aux=*/true, rng);
  std::vector<TrainSample> doubled = {samples[0], samples[1], samples[0],
                                      samples[1]};
  std::vector<Real> g1, g2;
  auto l1 = batch_gradient(net, as_ptrs(samples), 0.1, g1);
  auto l2 = batch_gradient(net, as_ptrs(doubled), 0.1, g2);
  CHECK(g1 == g2);
  CHECK(l1.total == l2.total);
}

TEST_CASE("batch computations are thread-count independent") {
  ModelConfig cfg = tiny_config();
  Network net(cfg);
  net.init_params(33);
  Rng rng(13);
  auto samples = random_batch(cfg, 5, /*with_aux=*/true, rng);
  std::vector<Real> g1, g4;
  auto l1 = batch_gradient(net, as_ptrs(samples), 0.1, g1, /*threads=*/1);
  auto l4 = batch_gradient(net, as_ptrs(samples), 0.1, g4, /*threads=*/4);
  CHECK(g1 == g4);
  CHECK(l1.total == l4.total);
}

TEST_CASE("training is deterministic under the seed") {
  SynthConfig scfg;
  scfg.n_patients = 4;
  scfg.cycles_per_patient = 3;
  scfg.seed = 2;
  Dataset ds = synth_generate(scfg);
  auto train_cycles = ds.cycles_for(Split::Train);

  TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.batch_size = 4;
  tcfg.eval_every = 0;
  tcfg.model = tiny_config();
  tcfg.model.input_bands = kMelBands;
  tcfg.model.stem_pool_h = 4;
  tcfg.model.stem_pool_w = 4;
  AugmentConfig acfg;
  acfg.target_len = 32000;
  PairSpec spec;

  TrainResult a = train(train_cycles, {}, tcfg, acfg, spec);
  TrainResult b = train(train_cycles, {}, tcfg, acfg, spec);
  CHECK(std::vector<Real>(a.net.params().begin(), a.net.params().end()) ==
        std::vector<Real>(b.net.params().begin(), b.net.params().end()));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].loss_total == b.log[i].loss_total);
  }
}

TEST_CASE("loss halves on an easy synthetic set") {
  SynthConfig scfg;
  scfg.n_patients = 6;
  scfg.cycles_per_patient = 6;
  scfg.snr_db = 16.0;
  scfg.seed = 4;
  Dataset ds = synth_generate(scfg);
  auto train_cycles = ds.cycles_for(Split::Train);

  TrainConfig tcfg;
  tcfg.epochs = 25;
  tcfg.batch_size = 8;
  tcfg.learning_rate = 0.08;
  tcfg.aux_enabled = false;
  tcfg.eval_every = 0;
  AugmentConfig acfg;
  acfg.target_len = 32000;
  PairSpec spec;

  TrainResult r = train(train_cycles, {}, tcfg, acfg, spec);
  REQUIRE(r.log.size() == 25);
  CHECK(r.log.back().loss_total < 0.5 * r.log.front().loss_total);
}

TEST_CASE("a poisoned parameter aborts with the epoch index") {
  SynthConfig scfg;
  scfg.n_patients = 4;
  scfg.cycles_per_patient = 2;
  Dataset ds = synth_generate(scfg);
  auto train_cycles = ds.cycles_for(Split::Train);

  // nan planted mid-waveform survives any pad/crop and surfaces as a
  // non-finite loss in epoch 0
  auto& poisoned = train_cycles[0].samples;
  poisoned[poisoned.size() / 2] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.eval_every = 0;
  AugmentConfig acfg;
  acfg.target_len = 32000;
  PairSpec spec;
  try {
    train(train_cycles, {}, tcfg, acfg, spec);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch == 0);
  }
}

TEST_CASE("aux-head init does not touch the main trajectory when disabled") {
  SynthConfig scfg;
  scfg.n_patients = 4;
  scfg.cycles_per_patient = 3;
  Dataset ds = synth_generate(scfg);
  auto train_cycles = ds.cycles_for(Split::Train);

  ModelConfig mcfg;  // default bands
  Network net_a(mcfg), net_b(mcfg);
  net_a.init_params(5, /*aux_seed=*/111);
  net_b.init_params(5, /*aux_seed=*/222);

  // aux heads differ, everything else matches
  bool aux_differs = false;
  for (const auto& slot : net_a.slots()) {
    for (std::size_t k = 0; k < slot.size(); ++k) {
      double va = net_a.params()[slot.offset + k];
      double vb = net_b.params()[slot.offset + k];
      if (slot.name.rfind("aux_head", 0) == 0) {
        aux_differs |= va != vb;
      } else {
        CHECK(va == vb);
      }
    }
  }
  CHECK(aux_differs);

  // with the aux task off, batches see identical gradients outside the aux
  // head, so the main training trajectory cannot depend on the aux init
  Rng rng(17);
  auto samples = random_batch(mcfg, 3, /*with_aux=*/false, rng);
  std::vector<Real> ga, gb;
  batch_gradient(net_a, as_ptrs(samples), 0.1, ga);
  batch_gradient(net_b, as_ptrs(samples), 0.1, gb);
  CHECK(ga == gb);
}

TEST_CASE("two-label mode projects the target") {
  CHECK(main_target(Label3{1, 1, 0}, LabelMode::Three) ==
        std::vector<Real>{1.0, 1.0, 0.0});
  CHECK(main_target(Label3{1, 1, 0}, LabelMode::Two) ==
        std::vector<Real>{1.0, 0.0});
  CHECK(main_target(Label3{1, 0, 0}, LabelMode::Two) ==
        std::vector<Real>{0.0, 0.0});
}

TEST_CASE("aux task requires concatenation") {
  TrainConfig cfg;
  cfg.aux_enabled = true;
  cfg.concat_enabled = false;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  namespace fs = std::filesystem;
  ModelConfig cfg = tiny_config(2);
  Network net(cfg);
  net.init_params(99);
  FeatureNorm norm;
  norm.mean.assign(kMelBands, 0.5);
  norm.stddev.assign(kMelBands, 2.0);
  norm.mean[3] = -1.25;

  fs::path p = fs::temp_directory_path() / "respcls_ckpt_test.bin";
  save_checkpoint(p, net, norm, LabelMode::Two, 32000, 0.25);
  Checkpoint ck = load_checkpoint(p);
  fs::remove(p);

  CHECK(ck.label_mode == LabelMode::Two);
  CHECK(ck.target_len == 32000);
  CHECK(ck.alpha == 0.25);
  CHECK(ck.norm.mean == norm.mean);
  CHECK(ck.norm.stddev == norm.stddev);
  CHECK(std::vector<Real>(ck.net.params().begin(), ck.net.params().end()) ==
        std::vector<Real>(net.params().begin(), net.params().end()));
  CHECK(ck.net.config().main_arity == 2);
}
