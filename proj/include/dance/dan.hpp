/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Decorrelating adversarial autoencoder.
//
// The encoder Q maps x to z = z_c ++ z_r. The decoder Q' reconstructs x from
// z. The decorrelator D scores latent points; it is trained to output 1 on
// hybrids z' = z_c ++ g (g drawn from the Gaussian prior) and 0 on real
// encodings z. The encoder in turn is rewarded when D scores its real
// encodings as hybrids, which pushes z_r toward the prior and away from any
// dependence on z_c. The adversarial gradient is blocked at z_c, so only z_r
// is shaped by the game.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dance/adam.hpp"
#include "dance/net.hpp"
#include "dance/random.hpp"

namespace dance {

struct DanArchitecture {
  std::size_t features = 0;
  std::size_t n_zc = 2;
  std::size_t n_zr = 2;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> decoder_hidden{64, 64};
  std::vector<std::size_t> decorrelator_hidden{64, 64};
};

template <class T = float>
struct DanModel {
  NetParams<T> encoder;
  NetParams<T> decoder;
  NetParams<T> decorrelator;
  std::size_t n_zc = 2;
  std::size_t n_zr = 2;
  double prior_sigma = 1.0;
  double beta_cor = 1.0;

  std::size_t latent_width() const { return n_zc + n_zr; }
  std::size_t features() const { return encoder.input_width(); }

  void validate() const {
    encoder.validate();
    decoder.validate();
    decorrelator.validate();
    if (n_zc < 1 || n_zr < 1) throw ConfigError("latent split needs n_zc >= 1 and n_zr >= 1");
    if (encoder.output_width() != latent_width())
      throw ConfigError("encoder output width " + std::to_string(encoder.output_width()) + " != n_zc + n_zr = " +
                        std::to_string(latent_width()));
    if (decoder.input_width() != latent_width()) throw ConfigError("decoder input width != latent width");
    if (decoder.output_width() != encoder.input_width())
      throw ConfigError("decoder output width " + std::to_string(decoder.output_width()) + " != feature count " +
                        std::to_string(encoder.input_width()));
    if (decorrelator.input_width() != latent_width()) throw ConfigError("decorrelator input width != latent width");
    if (decorrelator.output_width() != 1 || decorrelator.layers.back().activation != Activation::sigmoid)
      throw ConfigError("decorrelator must end in a single sigmoid unit");
    if (!(prior_sigma > 0)) throw ConfigError("prior sigma must be > 0");
    if (beta_cor < 0) throw ConfigError("beta_cor must be >= 0");
  }
};

template <class T = float>
DanModel<T> make_dan(const DanArchitecture& arch, double prior_sigma, double beta_cor, Rng& rng) {
  if (arch.features == 0) throw ConfigError("make_dan: feature count must be positive");
  DanModel<T> m;
  m.n_zc = arch.n_zc;
  m.n_zr = arch.n_zr;
  m.prior_sigma = prior_sigma;
  m.beta_cor = beta_cor;
  const std::size_t latent = arch.n_zc + arch.n_zr;
  m.encoder = make_mlp<T>(detail::chain(arch.features, arch.encoder_hidden, latent), Activation::relu,
                          Activation::identity, rng);
  m.decoder = make_mlp<T>(detail::chain(latent, arch.decoder_hidden, arch.features), Activation::relu,
                          Activation::identity, rng);
  m.decorrelator = make_mlp<T>(detail::chain(latent, arch.decorrelator_hidden, 1), Activation::leaky_relu,
                               Activation::sigmoid, rng);
  m.validate();
  return m;
}

template <class T = float>
struct LatentBatch {
  BasicTensor<T> z_c;  // [n x n_zc]
  BasicTensor<T> z_r;  // [n x n_zr]

  BasicTensor<T> joined() const { return concat_cols(z_c, z_r); }
};

template <class T>
LatentBatch<T> split_latent(const BasicTensor<T>& z, std::size_t n_zc) {
  if (n_zc < 1 || n_zc >= z.cols())
    throw ConfigError("latent split " + std::to_string(n_zc) + " invalid for width " + std::to_string(z.cols()));
  return {z.slice_cols(0, n_zc), z.slice_cols(n_zc, z.cols())};
}

template <class T>
LatentBatch<T> encode(const DanModel<T>& model, const BasicTensor<T>& x) {
  return split_latent(predict(model.encoder, x), model.n_zc);
}

template <class T>
BasicTensor<T> decode(const DanModel<T>& model, const BasicTensor<T>& z) {
  return predict(model.decoder, z);
}

/// z' = z_c ++ fresh prior draws in place of z_r.
template <class T>
BasicTensor<T> make_z_prime(const LatentBatch<T>& z, double sigma, Rng& rng) {
  return concat_cols(z.z_c, gaussian_sample<T>(rng, z.z_c.rows(), z.z_r.cols(), sigma));
}

// ---------------------------------------------------------------------------
// Losses. Tape versions are what training differentiates; the value
// overloads evaluate the same graphs without keeping gradients.
// ---------------------------------------------------------------------------

/// Mean squared error over all n*f entries.
template <class T>
Var reconstruction_loss(Tape<T>& t, Var x, Var x_rec) {
  return mean(t, square(t, sub(t, x, x_rec)));
}

/// -mean(log d), d = decorrelator scores of real encodings.
template <class T>
Var encoder_adversarial_loss(Tape<T>& t, Var d) {
  return scale(t, mean(t, log_clamped(t, d)), -1.0);
}

/// -mean(log d' + log(1 - d)), d on real encodings, d' on hybrids.
template <class T>
Var decorrelator_loss(Tape<T>& t, Var d_real, Var d_prime) {
  Var real_term = log_clamped(t, add_scalar(t, scale(t, d_real, -1.0), 1.0));
  return scale(t, add(t, mean(t, log_clamped(t, d_prime)), mean(t, real_term)), -1.0);
}

/// Encoder adversarial objective built from the latent pieces: z_c enters D
/// through a gradient stop, z_r does not.
template <class T>
Var encoder_adversarial_loss(Tape<T>& t, const NetParams<T>& decorrelator, const BoundNet& bound_d, Var z_c, Var z_r) {
  Var joined = concat_cols(t, t.stop_gradient(z_c), z_r);
  return encoder_adversarial_loss(t, forward(t, decorrelator, bound_d, joined));
}

template <class T>
double reconstruction_loss(const BasicTensor<T>& x, const BasicTensor<T>& x_rec) {
  Tape<T> t;
  return t.value(reconstruction_loss(t, t.constant(x), t.constant(x_rec)))[0];
}

template <class T>
double encoder_adversarial_loss(const BasicTensor<T>& d) {
  Tape<T> t;
  return t.value(encoder_adversarial_loss(t, t.constant(d)))[0];
}

template <class T>
double decorrelator_loss(const BasicTensor<T>& d_real, const BasicTensor<T>& d_prime) {
  Tape<T> t;
  return t.value(decorrelator_loss(t, t.constant(d_real), t.constant(d_prime)))[0];
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct LossRecord {
  std::size_t iteration = 0;
  double rec = 0;
  double cor_q = 0;
  double cor_d = 0;
  double dec = 0;
};

using LossHistory = std::vector<LossRecord>;

struct DanTrainOptions {
  std::size_t iterations = 6000;
  std::size_t batch_size = 256;
  AdamOptions adam{};
  /// false trains a plain autoencoder: no decorrelator, no adversarial term.
  bool adversarial = true;
  /// Name used in diagnostics.
  std::string phase = "dan-pretrain";
  /// Step size falls linearly from adam.lr to adam.lr * final_lr_scale over
  /// the phase; 1 keeps it constant.
  double final_lr_scale = 1.0;
};

template <class T>
struct DanOptimizers {
  AdamState<T> encoder;
  AdamState<T> decoder;
  AdamState<T> decorrelator;

  static DanOptimizers create(const DanModel<T>& m, const AdamOptions& opt) {
    return {make_adam(m.encoder, opt), make_adam(m.decoder, opt), make_adam(m.decorrelator, opt)};
  }
};

/// Extra encoder objective attached to the latent code (the DEC term).
template <class T>
class LatentTerm {
 public:
  virtual ~LatentTerm() = default;
  /// Record the weighted loss on the tape given the full latent z.
  virtual Var build(Tape<T>& t, Var z) = 0;
  /// Called after backward() of the encoder objective.
  virtual void update(const Tape<T>& t) = 0;
  virtual double last_value() const = 0;
};

namespace detail {

/// One iteration: decorrelator update on its own loss, then a joint
/// encoder/decoder update on rec + beta_cor * cor (+ extra term). Both
/// updates use the forward pass computed at the start of the iteration.
template <class T>
LossRecord dan_iteration(DanModel<T>& model, DanOptimizers<T>& opt, const BasicTensor<T>& x_batch, Rng& prior_rng,
                         bool adversarial, LatentTerm<T>* extra) {
  Tape<T> t;
  BoundNet bq = bind(t, model.encoder), bqp = bind(t, model.decoder);
  Var x = t.constant(x_batch);
  Var z = forward(t, model.encoder, bq, x);
  Var x_rec = forward(t, model.decoder, bqp, z);
  Var rec = reconstruction_loss(t, x, x_rec);
  Var encoder_loss = rec;

  LossRecord out;
  std::optional<Var> loss_d, cor_q;
  BoundNet bd;
  if (adversarial) {
    const std::size_t w = model.latent_width();
    Var z_c = slice_cols(t, z, 0, model.n_zc);
    Var z_r = slice_cols(t, z, model.n_zc, w);
    bd = bind(t, model.decorrelator);
    Var prior = t.constant(gaussian_sample<T>(prior_rng, x_batch.rows(), model.n_zr, model.prior_sigma));
    Var z_prime = concat_cols(t, t.stop_gradient(z_c), prior);
    Var d_real = forward(t, model.decorrelator, bd, t.stop_gradient(z));
    Var d_prime = forward(t, model.decorrelator, bd, z_prime);
    loss_d = decorrelator_loss(t, d_real, d_prime);
    cor_q = encoder_adversarial_loss(t, model.decorrelator, bd, z_c, z_r);
    encoder_loss = add(t, encoder_loss, scale(t, *cor_q, model.beta_cor));
  }
  if (extra) encoder_loss = add(t, encoder_loss, extra->build(t, z));

  out.rec = t.value(rec)[0];
  if (adversarial) {
    out.cor_q = t.value(*cor_q)[0];
    out.cor_d = t.value(*loss_d)[0];
  }
  if (extra) out.dec = extra->last_value();
  if (!std::isfinite(t.value(encoder_loss)[0]) || !std::isfinite(out.cor_d)) throw NonFiniteError("non-finite loss");

  std::vector<BasicTensor<T>> grad_d;
  if (adversarial) {
    t.backward(*loss_d);
    grad_d = gradients(t, bd);
  }
  t.backward(encoder_loss);
  auto grad_q = gradients(t, bq);
  auto grad_qp = gradients(t, bqp);
  if (extra) extra->update(t);
  if (adversarial) adam_step<T>(model.decorrelator, grad_d, opt.decorrelator);
  adam_step<T>(model.encoder, grad_q, opt.encoder);
  adam_step<T>(model.decoder, grad_qp, opt.decoder);
  return out;
}

template <class T>
std::string describe(const LossRecord& r) {
  std::ostringstream s;
  s << "rec=" << r.rec << " cor_q=" << r.cor_q << " cor_d=" << r.cor_d << " dec=" << r.dec;
  return s.str();
}

/// Shared loop used by pre-training and refinement.
template <class T>
LossHistory run_dan_loop(DanModel<T>& model, const BasicTensor<T>& x, const DanTrainOptions& options,
                         std::uint64_t seed, LatentTerm<T>* extra) {
  if (x.cols() != model.features())
    throw ConfigError("data has " + std::to_string(x.cols()) + " features, model expects " +
                      std::to_string(model.features()));
  BatchSampler batches(x.rows(), options.batch_size, derive_seed(seed, {stream::batches}));
  Rng prior_rng(derive_seed(seed, {stream::prior}));
  auto opt = DanOptimizers<T>::create(model, options.adam);
  LossHistory history;
  history.reserve(options.iterations);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const double frac = options.iterations > 1 ? static_cast<double>(it) / static_cast<double>(options.iterations - 1) : 0.0;
    const double lr = options.adam.lr * (1.0 - (1.0 - options.final_lr_scale) * frac);
    for (auto* a : {&opt.encoder, &opt.decoder, &opt.decorrelator}) a->options.lr = lr;
    const auto idx = batches.next();
    try {
      LossRecord r = dan_iteration(model, opt, x.gather_rows(idx), prior_rng, options.adversarial, extra);
      r.iteration = it;
      history.push_back(r);
    } catch (const NonFiniteError& e) {
      std::string last = history.empty() ? "none" : describe<T>(history.back());
      throw TrainingError(options.phase, it, std::string(e.what()) + "; last finite losses: " + last);
    }
  }
  return history;
}

}  // namespace detail

/// DAN pre-training: `iterations` alternating decorrelator / autoencoder
/// updates on minibatches of the standardized data.
template <class T>
LossHistory pretrain(DanModel<T>& model, const BasicTensor<T>& x, const DanTrainOptions& options, std::uint64_t seed) {
  model.validate();
  return detail::run_dan_loop<T>(model, x, options, seed, nullptr);
}

/// Encoder objective rec + beta_cor * cor_q on a batch (no update).
template <class T>
double encoder_objective(const DanModel<T>& model, const BasicTensor<T>& x_batch) {
  Tape<T> t;
  BoundNet bq = bind(t, model.encoder, false), bqp = bind(t, model.decoder, false),
           bd = bind(t, model.decorrelator, false);
  Var x = t.constant(x_batch);
  Var z = forward(t, model.encoder, bq, x);
  Var rec = reconstruction_loss(t, x, forward(t, model.decoder, bqp, z));
  Var cor = encoder_adversarial_loss(t, model.decorrelator, bd, slice_cols(t, z, 0, model.n_zc),
                                     slice_cols(t, z, model.n_zc, model.latent_width()));
  return t.value(add(t, rec, scale(t, cor, model.beta_cor)))[0];
}

/// Fraction of correct decisions of the thresholded decorrelator over an
/// equal mix of real encodings z and hybrids z'. D is trained toward 1 on
/// hybrids, so d > 0.5 is read as "hybrid"; ties count as "real".
template <class T>
double decorrelator_accuracy(const DanModel<T>& model, const BasicTensor<T>& x, Rng& rng) {
  const auto z = encode(model, x);
  const auto d_real = predict(model.decorrelator, z.joined());
  const auto d_prime = predict(model.decorrelator, make_z_prime(z, model.prior_sigma, rng));
  std::size_t correct = 0;
  for (T v : d_real.values()) correct += v <= T(0.5) ? 1 : 0;
  for (T v : d_prime.values()) correct += v > T(0.5) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(d_real.size() + d_prime.size());
}

}  // namespace dance
