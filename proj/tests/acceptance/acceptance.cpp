// Acceptance suite: one line per criterion, "criterion N: PASS|FAIL ...".
// Usage: mosanet_acceptance [N ...]   (no arguments runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "mosanet/assessor/model.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/rng.hpp"
#include "mosanet/common/runtime.hpp"
#include "mosanet/corpus/mixing.hpp"
#include "mosanet/corpus/synth.hpp"
#include "mosanet/corpus/wav.hpp"
#include "mosanet/enhancer/pipeline.hpp"
#include "mosanet/evalstats/stats.hpp"
#include "mosanet/features/stft.hpp"
#include "mosanet/labels/metrics.hpp"
#include "mosanet/nn/ops.hpp"
#include "mosanet/training/loss.hpp"
#include "mosanet/training/train.hpp"
#include "toy.hpp"

namespace fs = std::filesystem;
using namespace mosanet;
using assessor::Task;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Keeps the worst value seen and the first failure.
struct Check {
  bool ok = true;
  std::string first;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) first = what;
    ok = ok && cond;
  }
};

Outcome outcome(const Check& c, const std::string& detail) {
  return {c.ok, c.ok ? detail : "first failure: " + c.first};
}

// 1. Metric identities on speech-like signals.
Outcome metric_identities() {
  Check c;
  double worst_stoi = 0, worst_llr = 0, worst_wss = 0;
  for (int k = 0; k < 20; ++k) {
    const auto x = corpus::synth_speech(1000 + k, 1.5);
    const std::string tag = "signal " + std::to_string(k);
    const double s = labels::stoi(x, x);
    worst_stoi = std::max(worst_stoi, std::abs(s - 1.0));
    c.expect(std::abs(s - 1.0) <= 1e-6, tag + " stoi " + fmt("%.9f", s));
    c.expect(labels::sdi(x, x) == 0.0, tag + " sdi(x,x)");
    // Exact where x - a*x and its square are exact in binary floating point;
    // other gains within rounding.
    for (double a : {0.0, 0.5, 1.0, 2.0, 0.25, 0.9, 1.7}) {
      Waveform y = x;
      for (auto& v : y.samples) v *= a;
      const double got = labels::sdi(x, y);
      const double want = (1 - a) * (1 - a);
      const bool exact = a == 0.0 || a == 0.5 || a == 1.0 || a == 2.0;
      c.expect(exact ? got == want : std::abs(got - want) <= 1e-12 * want,
               tag + " sdi(x," + fmt("%g", a) + "x) = " + fmt("%.17g", got));
    }
    c.expect(labels::ssnr(x, x) == 35.0, tag + " ssnr");
    const double l = labels::llr(x, x).value, w = labels::wss(x, x).value;
    worst_llr = std::max(worst_llr, std::abs(l));
    worst_wss = std::max(worst_wss, std::abs(w));
    c.expect(std::abs(l) <= 1e-6, tag + " llr " + fmt("%g", l));
    c.expect(std::abs(w) <= 1e-6, tag + " wss " + fmt("%g", w));
  }
  return outcome(c, "max|stoi-1| " + fmt("%.2e", worst_stoi) + ", max|llr| " + fmt("%.2e", worst_llr) +
                        ", max|wss| " + fmt("%.2e", worst_wss));
}

// 2. STOI against values frozen from pystoi (tests/oracles/make_oracles.py).
Outcome stoi_oracle() {
  const fs::path dir = MOSANET_TEST_DATA;
  const auto rows = read_csv(dir / "stoi_reference.csv");
  Check c;
  double worst = 0;
  int n = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto clean = corpus::load_waveform(dir / rows[r][0]);
    const auto deg = corpus::load_waveform(dir / rows[r][1]);
    const double want = std::stod(rows[r][2]);
    const double got = labels::stoi(clean, deg);
    worst = std::max(worst, std::abs(got - want));
    c.expect(std::abs(got - want) <= 0.01, rows[r][1] + ": " + fmt("%.6f", got) + " vs " + fmt("%.6f", want));
    ++n;
  }
  c.expect(n == 10, "expected 10 reference pairs");
  return outcome(c, std::to_string(n) + " pairs, max abs diff " + fmt("%.2e", worst));
}

// 3. mix_at_snr hits the requested SNR on the -10..20 dB grid.
Outcome snr_exactness() {
  Check c;
  const auto grid = corpus::paper_snr_grid_db();
  c.expect(grid.size() == 31 && grid.front() == -10 && grid.back() == 20, "grid is not -10..20 in 1 dB steps");
  double worst = 0;
  const std::vector<std::string> kinds{"white", "pink", "babble", "hum", "white"};
  for (int p = 0; p < 5; ++p) {
    const auto clean = corpus::synth_speech(300 + p, 1.0 + 0.2 * p);
    const auto noise = corpus::synth_noise(kinds[p], 400 + p, 3.0);
    Rng rng(p);
    for (double snr : grid) {
      const auto mix = corpus::mix_at_snr(clean, noise, snr, rng);
      const double got = corpus::measured_snr_db(clean, mix.mixture);
      worst = std::max(worst, std::abs(got - snr));
      c.expect(std::abs(got - snr) <= 1e-6, "pair " + std::to_string(p) + " at " + fmt("%g", snr) + " dB");
    }
  }
  return outcome(c, "5 pairs x 31 levels, max error " + fmt("%.2e", worst) + " dB");
}

assessor::AssessmentResult fake_result(const std::map<Task, std::vector<double>>& frames) {
  assessor::AssessmentResult r;
  for (const auto& [t, f] : frames) {
    assessor::TaskResult tr;
    tr.frame_scores = f;
    tr.utterance_score = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    r.tasks[t] = tr;
  }
  return r;
}

// 4. Loss on the hand example and on random small batches.
Outcome loss_oracle() {
  Check c;
  const auto hand = training::multitask_loss({fake_result({{Task::Q, {2.0, 2.0}}})}, {{{Task::Q, 3.0}}}, {});
  c.expect(hand.total == 2.0, "hand example gives " + fmt("%.17g", hand.total));

  Rng rng(44);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    const int n = 1 + static_cast<int>(rng.below(4));
    training::LossWeights w;
    w.gamma_q = rng.uniform(0, 2), w.gamma_i = rng.uniform(0, 2), w.gamma_d = rng.uniform(0, 2);
    w.alpha_q = rng.uniform(0, 2), w.alpha_i = rng.uniform(0, 2), w.alpha_d = rng.uniform(0, 2);
    const double gamma[3] = {w.gamma_q, w.gamma_i, w.gamma_d};
    const double alpha[3] = {w.alpha_q, w.alpha_i, w.alpha_d};
    std::vector<assessor::AssessmentResult> results;
    std::vector<training::Truth> truths;
    double brute = 0;
    for (int u = 0; u < n; ++u) {
      std::map<Task, std::vector<double>> frames;
      training::Truth truth;
      const int len = 1 + static_cast<int>(rng.below(6));
      for (int t = 0; t < 3; ++t) {
        const Task task = static_cast<Task>(t);
        std::vector<double> f(len);
        for (auto& v : f) v = rng.uniform(-1, 4);
        const double y = rng.uniform(0, 4);
        double mean = 0;
        for (double v : f) mean += v / len;
        double frame_term = 0;
        for (double v : f) frame_term += (y - v) * (y - v);
        brute += gamma[t] / n * ((y - mean) * (y - mean) + alpha[t] * frame_term / len);
        frames[task] = f;
        truth[task] = y;
      }
      results.push_back(fake_result(frames));
      truths.push_back(truth);
    }
    const double got = training::multitask_loss(results, truths, w).total;
    worst = std::max(worst, std::abs(got - brute));
    c.expect(std::abs(got - brute) <= 1e-9, "random case " + std::to_string(k));
  }
  return outcome(c, "hand example 2.0, 10 random cases max diff " + fmt("%.2e", worst));
}

// 5. Backprop against central differences through the full assessor.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsTol = 1e-8;

Outcome gradient_check() {
  assessor::AssessorConfig cfg;
  cfg.arch = assessor::Arch::CRNN_AT;
  cfg.streams = {features::Stream::PS, features::Stream::LFB, features::Stream::SSL};
  assessor::Assessor model(cfg, 5);
  const auto wave = corpus::synth_noise("pink", 5, 1280.0 / kSampleRate);
  Waveform speech = corpus::synth_speech(5, 1280.0 / kSampleRate);
  for (std::size_t i = 0; i < speech.size(); ++i) speech.samples[i] += wave.samples[i];
  const auto in = model.make_extractor().extract(speech, "grad");
  model.fit_normalization({&in});
  const std::vector<training::Truth> truth{{{Task::Q, 2.7}, {Task::I, 0.8}, {Task::D, 0.4}}};

  const auto out = model.forward(in);
  Check c;
  c.expect(out.tasks.at(Task::Q).frames.rows() >= 4, "expected at least 4 frames");
  auto loss = training::multitask_loss({&out}, truth, {}).total;
  loss.backward();

  auto eval = [&] {
    nn::NoGradGuard guard;
    const auto o = model.forward(in);
    return training::multitask_loss({&o}, truth, {}).total.item();
  };

  Rng rng(55);
  int checked = 0;
  double worst = 0;
  for (const auto& [name, tensor] : model.parameters().items()) {
    const Matrix grad = tensor.grad();
    Matrix& value = const_cast<nn::Tensor&>(tensor).mutable_value();
    const Eigen::Index size = value.size();
    const int samples = static_cast<int>(std::min<Eigen::Index>(size, 20));
    for (int s = 0; s < samples; ++s) {
      const Eigen::Index k = size <= 20 ? s : static_cast<Eigen::Index>(rng.below(size));
      double& w = value.data()[k];
      const double w0 = w;
      // Absolute step: filterbank cutoffs are in Hz, and a step scaled to
      // them crosses rectification kinks.
      const double h = 1e-6;
      w = w0 + h;
      const double up = eval();
      w = w0 - h;
      const double down = eval();
      w = w0;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grad.data()[k];
      const double err = std::abs(numeric - analytic);
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      worst = std::max(worst, scale > 0 ? err / scale : 0.0);
      c.expect(err <= kGradRelTol * scale + kGradAbsTol,
               name + "[" + std::to_string(k) + "] analytic " + fmt("%.10g", analytic) + " numeric " +
                   fmt("%.10g", numeric));
      ++checked;
    }
  }
  return outcome(c, std::to_string(checked) + " entries over " + std::to_string(model.parameters().items().size()) +
                        " tensors, max rel err " + fmt("%.2e", worst));
}

// 6. Attention rows are distributions.
Outcome attention_properties() {
  nn::NoGradGuard guard;
  Rng rng(66);
  Check c;
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const int L = k % 10 == 0 ? 1 : 1 + static_cast<int>(rng.below(40));
    const int d = 1 + static_cast<int>(rng.below(32));
    Matrix h(L, d), w(d, d);
    for (auto& v : h.reshaped()) v = rng.normal();
    for (auto& v : w.reshaped()) v = rng.normal() / d;
    const std::string tag = "L=" + std::to_string(L) + " d=" + std::to_string(d);
    const auto att = assessor::multiplicative_attention(nn::Tensor(h), nn::Tensor(w));
    for (int r = 0; r < L; ++r) {
      const double sum = att.weights.value().row(r).sum();
      worst = std::max(worst, std::abs(sum - 1));
      c.expect(std::abs(sum - 1) <= 1e-6, tag + " row sum " + fmt("%.12f", sum));
    }
    if (L == 1) c.expect(att.weights.value()(0, 0) == 1.0, tag + " single frame weight");
    const auto flat = assessor::multiplicative_attention(nn::Tensor(h), nn::Tensor(Matrix::Zero(d, d)));
    const double dev = (flat.weights.value().array() - 1.0 / L).abs().maxCoeff();
    c.expect(dev <= 1e-12, tag + " W=0 not uniform");
  }
  return outcome(c, "50 shapes, max |row sum - 1| " + fmt("%.2e", worst));
}

std::vector<double> scores(const assessor::Assessor& m, const std::vector<training::LabeledUtterance>& data,
                           Task t) {
  std::vector<double> out;
  for (const auto& d : data) out.push_back(m.assess(d.inputs).at(t).utterance_score);
  return out;
}

std::vector<double> truths(const std::vector<training::LabeledUtterance>& data, Task t) {
  std::vector<double> out;
  for (const auto& d : data) out.push_back(d.truth.at(t));
  return out;
}

// 7. CRNN+AT memorizes 32 labeled toy utterances.
Outcome toy_overfit() {
  assessor::Assessor model(assessor::AssessorConfig{}, 7);
  const auto data = toy::labeled(toy::noisy_set(32, 0.7, 7), model);
  toy::fit_normalization(model, data);
  training::TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 1;
  tc.learning_rate = 1e-4;
  tc.heldout_fraction = 0.0;
  tc.early_stop_patience = tc.epochs;
  tc.seed = 7;
  training::train(model, data, tc, {});
  Check c;
  std::string detail;
  for (Task t : {Task::Q, Task::I, Task::D}) {
    const auto p = scores(model, data, t), y = truths(data, t);
    const double l = evalstats::lcc(p, y), s = evalstats::srcc(p, y);
    c.expect(l >= 0.95 && s >= 0.90, assessor::to_string(t) + " lcc " + fmt("%.4f", l) + " srcc " + fmt("%.4f", s));
    detail += assessor::to_string(t) + " lcc " + fmt("%.4f", l) + " srcc " + fmt("%.4f", s) + "; ";
  }
  return outcome(c, detail);
}

// 8. The BLSTM and CNN baselines train without blowing up.
Outcome baseline_smoke() {
  Check c;
  std::string detail;
  const auto set = toy::noisy_set(32, 0.7, 8);
  for (auto arch : {assessor::Arch::BLSTM, assessor::Arch::CNN}) {
    assessor::AssessorConfig cfg;
    cfg.arch = arch;
    cfg.blstm_units = 100;
    assessor::Assessor model(cfg, 8);
    const auto data = toy::labeled(set, model);
    toy::fit_normalization(model, data);
    training::TrainConfig tc;
    tc.epochs = 20;
    tc.heldout_fraction = 0.0;
    tc.early_stop_patience = tc.epochs;
    tc.seed = 8;
    std::vector<double> loss;
    const std::string name = assessor::to_string(arch);
    try {
      training::train(model, data, tc, {}, [&](const assessor::EpochRecord& r) { loss.push_back(r.total_loss); });
    } catch (const std::exception& e) {
      c.expect(false, name + ": " + e.what());
      continue;
    }
    c.expect(loss.size() == 20, name + " stopped after " + std::to_string(loss.size()) + " epochs");
    c.expect(std::all_of(loss.begin(), loss.end(), [](double v) { return std::isfinite(v); }), name + " NaN loss");
    std::vector<double> epoch(loss.size());
    std::iota(epoch.begin(), epoch.end(), 1.0);
    const double slope = evalstats::least_squares(epoch, loss).slope;
    c.expect(loss.back() < loss.front() && slope < 0,
             name + " loss " + fmt("%.4g", loss.front()) + " -> " + fmt("%.4g", loss.back()));
    detail += name + " " + fmt("%.4g", loss.front()) + " -> " + fmt("%.4g", loss.back()) + " (slope " +
              fmt("%.3g", slope) + "); ";
  }
  return outcome(c, detail);
}

// Direct-loop forward of the plain enhancer from its stored parameters.
Matrix reference_enhance(const enhancer::Enhancer& se, const Matrix& lps) {
  std::map<std::string, Matrix> p;
  for (const auto& [name, m] : se.state()) p[name] = m;
  const auto& cfg = se.config();
  const int T = static_cast<int>(lps.rows()), bins = static_cast<int>(lps.cols());
  const Matrix& mean = p.at("norm.mean");
  const Matrix& inv_std = p.at("norm.inv_std");
  std::vector<Matrix> maps{Matrix(T, bins)};
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < bins; ++f) maps[0](t, f) = (lps(t, f) - mean(0, f)) * inv_std(0, f);
  int layer = 0;
  for (int ch : cfg.conv_channels) {
    for (int stride : cfg.conv_strides) {
      const std::string name = "conv." + std::to_string(layer++);
      const Matrix& w = p.at(name + ".weight");
      const Matrix& b = p.at(name + ".bias");
      const int F = static_cast<int>(maps[0].cols());
      const int Fo = (F - 1) / stride + 1;
      std::vector<Matrix> next(ch, Matrix::Zero(T, Fo));
      for (int co = 0; co < ch; ++co) {
        for (int t = 0; t < T; ++t) {
          for (int fo = 0; fo < Fo; ++fo) {
            double acc = b(0, co);
            for (std::size_t ci = 0; ci < maps.size(); ++ci) {
              for (int i = 0; i < 3; ++i) {
                const int ti = t + i - 1;
                if (ti < 0 || ti >= T) continue;
                for (int j = 0; j < 3; ++j) {
                  const int fi = fo * stride + j - 1;
                  if (fi < 0 || fi >= F) continue;
                  acc += w(co, (ci * 3 + i) * 3 + j) * maps[ci](ti, fi);
                }
              }
            }
            next[co](t, fo) = std::max(acc, 0.0);
          }
        }
      }
      maps = std::move(next);
    }
  }
  const int F = static_cast<int>(maps[0].cols());
  Matrix flat(T, static_cast<Eigen::Index>(maps.size()) * F);
  for (int t = 0; t < T; ++t)
    for (std::size_t c = 0; c < maps.size(); ++c)
      for (int f = 0; f < F; ++f) flat(t, c * F + f) = maps[c](t, f);
  Matrix h = (flat * p.at("fc.weight")).rowwise() + p.at("fc.bias").row(0);
  h = h.cwiseMax(0.0);
  Matrix y = (h * p.at("out.weight")).rowwise() + p.at("out.bias").row(0);
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < bins; ++f) y(t, f) = y(t, f) / inv_std(0, f) + mean(0, f);
  return y;
}

// 9. Without the latent path the enhancer is the plain CNN enhancer.
Outcome latent_degeneracy() {
  Check c;
  enhancer::EnhancerConfig with;
  enhancer::EnhancerConfig without = with;
  without.use_latent = false;
  without.latent_branch.clear();
  const auto baseline_cfg = enhancer::baseline_config(with);
  enhancer::Enhancer qia_off(without, 9), baseline(baseline_cfg, 9), qia(with, 9);
  for (const auto& [name, t] : qia.parameters().items()) {
    if (name.find(".latent") != std::string::npos) const_cast<nn::Tensor&>(t).mutable_value().setZero();
  }
  Rng rng(99);
  std::vector<Matrix> inputs;
  for (int k = 0; k < 10; ++k) {
    Matrix lps(4 + static_cast<int>(rng.below(12)), with.stft.bins());
    for (auto& v : lps.reshaped()) v = rng.uniform(-25, 5);
    inputs.push_back(lps);
  }
  std::vector<const Matrix*> ptrs;
  for (const auto& m : inputs) ptrs.push_back(&m);
  for (auto* se : {&qia_off, &baseline, &qia}) se->fit_normalization(ptrs);

  double ref_err = 0;
  for (int k = 0; k < 10; ++k) {
    const Matrix a = qia_off.enhance(inputs[k], nullptr);
    const Matrix b = baseline.enhance(inputs[k], nullptr);
    Matrix latent(3 + k, with.latent_width());
    for (auto& v : latent.reshaped()) v = rng.normal();
    const Matrix z = qia.enhance(inputs[k], &latent);
    const std::string tag = "input " + std::to_string(k);
    c.expect(a == b, tag + ": use_latent=false differs from the baseline");
    c.expect(z == b, tag + ": zero latent kernel differs from the baseline");
    const double err = (reference_enhance(baseline, inputs[k]) - b).cwiseAbs().maxCoeff();
    ref_err = std::max(ref_err, err);
    c.expect(err <= 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()), tag + ": reference forward differs");
  }

  // train_se must not touch the assessor that supplies latents.
  assessor::AssessorConfig ac;
  ac.tasks = {Task::Q, Task::I};
  ac.targets = {{Task::Q, "pesq"}, {Task::I, "stoi"}};
  ac.conv_channels = {16};
  ac.conv_layers = 3;
  assessor::Assessor frozen(ac, 9);
  const auto before = frozen.state_hash();
  std::vector<enhancer::SePair> pairs;
  for (const auto& u : toy::noisy_set(4, 0.5, 9)) pairs.push_back({u.id, u.noisy, u.clean});
  enhancer::EnhancerConfig ec;
  ec.latent_dim = frozen.latent_dim();
  enhancer::Enhancer se(ec, 9);
  const auto examples = enhancer::prepare_examples(pairs, ec, &frozen, 1);
  enhancer::SeTrainConfig tc;
  tc.epochs = 2;
  enhancer::train_se(se, &frozen, examples, tc);
  c.expect(frozen.state_hash() == before, "assessor state hash changed during train_se");
  return outcome(c, "10 inputs bit-identical, reference max diff " + fmt("%.2e", ref_err) +
                        ", assessor hash " + assessor::hex64(before) + " unchanged");
}

// 10. A briefly trained assessor's latent plus a few epochs of SE training
// beat the noisy input.
Outcome qia_se_efficacy() {
  const auto set = toy::noisy_set(50, 0.8, 10);
  assessor::AssessorConfig ac;
  ac.tasks = {Task::Q, Task::I};
  ac.targets = {{Task::Q, "pesq"}, {Task::I, "stoi"}};
  assessor::Assessor frozen(ac, 10);
  auto labeled = toy::labeled(set, frozen);
  toy::fit_normalization(frozen, labeled);
  training::TrainConfig tc;
  tc.epochs = 3;
  tc.heldout_fraction = 0.0;
  tc.seed = 10;
  training::train(frozen, labeled, tc, {});

  std::vector<enhancer::SePair> pairs;
  for (const auto& u : set) pairs.push_back({u.id, u.noisy, u.clean});
  enhancer::EnhancerConfig ec;
  ec.latent_dim = frozen.latent_dim();
  enhancer::Enhancer se(ec, 10);
  const auto examples = enhancer::prepare_examples(pairs, ec, &frozen, 0);
  enhancer::SeTrainConfig sc;
  sc.epochs = 3;
  sc.seed = 10;
  enhancer::train_se(se, &frozen, examples, sc);
  const double enhanced = enhancer::lps_mse(se, examples);
  const double noisy = enhancer::noisy_lps_mse(examples);
  Check c;
  c.expect(enhanced <= 0.8 * noisy, "ratio " + fmt("%.3f", enhanced / noisy));
  return outcome(c, "LPS MSE enhanced " + fmt("%.3f", enhanced) + " vs noisy " + fmt("%.3f", noisy) + " (ratio " +
                        fmt("%.3f", enhanced / noisy) + ")");
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i], sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
std::vector<double> brute_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

// 11. Statistics against direct formulas and scipy values.
Outcome statistics_oracle() {
  Check c;
  Rng rng(111);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 3 + static_cast<int>(rng.below(60));
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = k % 4 == 0 ? std::floor(rng.uniform(0, 5)) : rng.normal();  // ties in every fourth case
      y[i] = 0.5 * x[i] + rng.normal();
    }
    double m = 0;
    for (int i = 0; i < n; ++i) m += (x[i] - y[i]) * (x[i] - y[i]) / n;
    const double d_lcc = std::abs(evalstats::lcc(x, y) - pearson(x, y));
    const double d_srcc = std::abs(evalstats::srcc(x, y) - pearson(brute_ranks(x), brute_ranks(y)));
    const double d_mse = std::abs(evalstats::mse(x, y) - m);
    worst = std::max({worst, d_lcc, d_srcc, d_mse});
    c.expect(d_lcc <= 1e-12 && d_srcc <= 1e-12 && d_mse <= 1e-12, "random vector " + std::to_string(k));
  }
  const std::vector<double> a{1, 2, 3}, b{1, 3, 2};
  c.expect(evalstats::srcc(a, b) == 0.5, "srcc([1,2,3],[1,3,2]) = " + fmt("%.17g", evalstats::srcc(a, b)));

  const fs::path dir = MOSANET_TEST_DATA;
  double worst_p = 0;
  const auto table = read_csv(dir / "t_reference.csv");
  for (std::size_t r = 1; r < table.size(); ++r) {
    const double t = std::stod(table[r][0]), df = std::stod(table[r][1]), p = std::stod(table[r][2]);
    const double got = evalstats::t_two_tailed_p(t, df);
    worst_p = std::max(worst_p, std::abs(got - p));
    c.expect(std::abs(got - p) <= 1e-10, "t = " + table[r][0] + ": p " + fmt("%.15g", got));
  }
  const auto paired = read_csv(dir / "paired_reference.csv");
  std::vector<double> ga, gb;
  for (int i = 0; i < 20; ++i) {
    ga.push_back(0.1 * i + 0.05 * std::sin(i));
    gb.push_back(0.1 * i + 0.03 * std::cos(2 * i));
  }
  const auto res = evalstats::grouped_ttest(ga, gb, 1, 3);
  const double want_t = std::stod(paired[1][0]), want_p = std::stod(paired[1][1]);
  worst_p = std::max(worst_p, std::abs(res.p - want_p));
  c.expect(res.n_pairs == 20, "grouped_ttest formed " + std::to_string(res.n_pairs) + " groups");
  c.expect(std::abs(res.t - want_t) <= 1e-10 && std::abs(res.p - want_p) <= 1e-10,
           "grouped_ttest t " + fmt("%.15g", res.t) + " p " + fmt("%.15g", res.p));
  return outcome(c, "stats max diff " + fmt("%.2e", worst) + ", p-value max diff " + fmt("%.2e", worst_p));
}

// 12. stft -> istft reproduces the interior of the signal.
Outcome istft_roundtrip() {
  Check c;
  Rng rng(12);
  const features::StftConfig cfg;
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    Waveform w;
    w.samples.resize(4000 + rng.below(12000));
    for (auto& v : w.samples) v = rng.uniform(-1, 1);
    const auto back = features::istft(features::stft(w, cfg), w.size());
    const int frames = features::frame_count(w.size(), cfg);
    const auto end = static_cast<std::size_t>((frames - 1) * cfg.hop);
    double err = 0;
    for (std::size_t i = cfg.win_length; i < end; ++i) err = std::max(err, std::abs(back.samples[i] - w.samples[i]));
    worst = std::max(worst, err);
    c.expect(err < 1e-6, "waveform " + std::to_string(k) + " error " + fmt("%.2e", err));
  }
  return outcome(c, "10 waveforms, max interior error " + fmt("%.2e", worst));
}

int run(const std::string& cmd, const fs::path& log) {
  const std::string line = cmd + " >> \"" + log.string() + "\" 2>&1";
  const int rc = std::system(line.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// 13. Same config and seed, byte-identical result files.
Outcome cli_determinism() {
  Check c;
  const fs::path work = fs::temp_directory_path() / ("mosanet_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path log = work / "cli.log";
  const std::string cli = std::string("\"") + MOSANET_CLI_PATH + "\"";
  const std::string out = " -o \"" + (work / "runs").string() + "\" --seed 13";
  const fs::path runs = work / "runs";

  auto step = [&](const std::string& args) {
    const int rc = run(cli + " " + args + out, log);
    c.expect(rc == 0, "`mosanet " + args + "` exited " + std::to_string(rc) + " (see " + log.string() + ")");
    return rc == 0;
  };
  auto same = [&](const fs::path& a, const fs::path& b) {
    const bool eq = fs::exists(a) && fs::exists(b) && read_text_file(a) == read_text_file(b);
    c.expect(eq, a.filename().string() + " differs between " + a.parent_path().filename().string() + " and " +
                     b.parent_path().filename().string());
  };

  const std::string train_args = " --set model.tasks=I,D --set train.epochs=3";
  const std::string se_args = " --set enhancer.latent_branch=I,D --set se_train.epochs=2";
  const bool ok = step("prep --synthetic 8 --run-id prep --set corpus.synthetic_duration_s=1.0") &&
                  step("label -m \"" + (runs / "prep/manifest.jsonl").string() +
                       "\" --run-id label --set 'labels.metrics=[stoi,sdi]'") &&
                  step("train -m \"" + (runs / "label/manifest.jsonl").string() + "\" --run-id train_a" + train_args) &&
                  step("train -m \"" + (runs / "label/manifest.jsonl").string() + "\" --run-id train_b" + train_args);
  if (ok) {
    same(runs / "train_a/results.csv", runs / "train_b/results.csv");
    same(runs / "train_a/history.csv", runs / "train_b/history.csv");
    const std::string enh = "enhance -m \"" + (runs / "label/manifest.jsonl").string() + "\" --assessor \"" +
                            (runs / "train_a/model.bin").string() + "\"";
    if (step(enh + " --run-id enhance_a" + se_args) && step(enh + " --run-id enhance_b" + se_args)) {
      same(runs / "enhance_a/results.csv", runs / "enhance_b/results.csv");
      same(runs / "enhance_a/enhance_utterances.csv", runs / "enhance_b/enhance_utterances.csv");
      same(runs / "enhance_a/se_history.csv", runs / "enhance_b/se_history.csv");
    }
  }
  if (c.ok) fs::remove_all(work);
  return outcome(c, "train and enhance results identical across reruns");
}

struct Criterion {
  int id;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  const std::vector<Criterion> all{
      {1, 30, metric_identities},  {2, 60, stoi_oracle},         {3, 0, snr_exactness},
      {4, 0, loss_oracle},         {5, 120, gradient_check},     {6, 0, attention_properties},
      {7, 600, toy_overfit},       {8, 0, baseline_smoke},       {9, 0, latent_degeneracy},
      {10, 900, qia_se_efficacy},  {11, 0, statistics_oracle},   {12, 0, istft_roundtrip},
      {13, 0, cli_determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& cr : all) {
    if (!wanted.empty() && !wanted.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.limit_s > 0 && s > cr.limit_s) {
      o.pass = false;
      o.detail += " [over the " + fmt("%.0f", cr.limit_s) + " s limit]";
    }
    failed += !o.pass;
    std::cout << "criterion " << cr.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << " ("
              << fmt("%.1f", s) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
