#include "fewgen/cgan.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fewgen/errors.hpp"

namespace fewgen {

void GanConfig::validate() const {
  if (alpha <= 0.0) throw ConfigError("gradient-penalty coefficient must be positive");
  if (lambda < 0.0 || gamma < 0.0) throw ConfigError("loss weights must be non-negative");
  if (lr <= 0.0) throw ConfigError("adversarial lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  if (epochs == 0) throw ConfigError("adversarial epochs must be at least 1");
  if (batch == 0) throw ConfigError("adversarial batch must be at least 1");
  if (critic_steps == 0) throw ConfigError("critic steps must be at least 1");
}

GanTriple make_gan(std::size_t d_x, std::size_t d_phi, const GanConfig& cfg, std::uint64_t seed) {
  if (d_x == 0 || d_phi == 0) throw ConfigError("make_gan: zero feature or prototype dim");
  cfg.validate();
  GanTriple t;
  t.d_x = d_x;
  t.d_phi = d_phi;
  t.d_z = cfg.d_z > 0 ? cfg.d_z : d_phi;
  const std::size_t gh = cfg.gen_hidden > 0 ? cfg.gen_hidden : d_x;
  const std::size_t dh = cfg.disc_hidden > 0 ? cfg.disc_hidden : d_x;
  const std::size_t ch = cfg.dec_hidden > 0 ? cfg.dec_hidden : d_x;
  const Activation hidden{Act::LeakyRelu, 0.01};
  const Activation out{Act::Identity, 0.01};
  Rng g_rng(child_seed(seed, Seed::NetInit, 0));
  Rng d_rng(child_seed(seed, Seed::NetInit, 1));
  Rng h_rng(child_seed(seed, Seed::NetInit, 2));
  t.generator = make_mlp({t.d_phi + t.d_z, gh, d_x}, hidden, out, g_rng);
  t.discriminator = make_mlp({d_x + d_phi, dh, 1}, hidden, out, d_rng);
  t.decoder = make_mlp({d_x, ch, d_phi}, hidden, out, h_rng);
  return t;
}

Matrix gan_generate(const GanTriple& triple, const std::vector<double>& prototype,
                    std::size_t count, Rng& rng) {
  if (prototype.size() != triple.d_phi) {
    throw ShapeError("gan_generate: prototype dim " + std::to_string(prototype.size()) +
                     ", model expects " + std::to_string(triple.d_phi));
  }
  Matrix input(count, triple.d_phi + triple.d_z);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t j = 0; j < triple.d_phi; ++j) input(r, j) = prototype[j];
    for (std::size_t j = 0; j < triple.d_z; ++j) input(r, triple.d_phi + j) = rng.normal();
  }
  return triple.generator.forward(input);
}

WganParts wgan_gp_loss(Tape& tape, const TapedNet& disc, Expr real, Expr fake, Expr protos,
                       double alpha, const std::vector<double>& interp_u) {
  const std::size_t batch = real.rows();
  const std::size_t d_x = real.cols();
  if (fake.rows() != batch || fake.cols() != d_x) {
    throw ShapeError("wgan_gp_loss: real and fake batches disagree");
  }
  if (protos.rows() != batch) throw ShapeError("wgan_gp_loss: conditioning batch mismatch");
  if (interp_u.size() != batch) {
    throw ContractError("wgan_gp_loss: need one interpolation draw per row");
  }
  for (double u : interp_u) {
    if (!(u >= 0.0 && u <= 1.0)) {
      throw ContractError("wgan_gp_loss: interpolation draws must lie in [0, 1]");
    }
  }

  Expr score_real = net_forward(disc, concat_cols(real, protos));
  Expr score_fake = net_forward(disc, concat_cols(fake, protos));

  // Convex combination per row: u * real + (1 - u) * fake.
  Matrix u_col(batch, 1);
  Matrix v_col(batch, 1);
  for (std::size_t r = 0; r < batch; ++r) {
    u_col(r, 0) = interp_u[r];
    v_col(r, 0) = 1.0 - interp_u[r];
  }
  Expr u_b = broadcast_col(tape.constant(std::move(u_col)), d_x);
  Expr v_b = broadcast_col(tape.constant(std::move(v_col)), d_x);
  Expr interp = add(mul(u_b, real), mul(v_b, fake));

  // Gradient of the critic w.r.t. the interpolated features only (the
  // conditioning columns are excluded from the norm).
  Expr grad_full = net_input_gradient(disc, concat_cols(interp, protos));
  Expr grad_x = slice_cols(grad_full, 0, d_x);
  Expr norm = sqrt_elem(row_sum(square(grad_x)));
  Expr penalty = mean_all(square(add_scalar(norm, -1.0)));

  WganParts parts;
  parts.penalty = penalty;
  parts.gap = sub(mean_all(score_real), mean_all(score_fake));
  parts.total = add(sub(mean_all(score_fake), mean_all(score_real)), scale(penalty, alpha));
  return parts;
}

double wgan_gp_loss_value(const GanTriple& triple, const Matrix& real, const Matrix& fake,
                          const Matrix& protos, double alpha,
                          const std::vector<double>& interp_u) {
  Tape tape;
  TapedNet disc = lift(tape, triple.discriminator, true);
  WganParts parts = wgan_gp_loss(tape, disc, tape.constant(real), tape.constant(fake),
                                 tape.constant(protos), alpha, interp_u);
  return parts.total.value()(0, 0);
}

std::vector<std::pair<int, int>> embedding_pairs(const std::vector<std::uint32_t>& labels_real,
                                                 const std::vector<std::uint32_t>& labels_fake,
                                                 Rng* rng) {
  std::vector<std::pair<int, int>> pairs;
  if (labels_real.size() <= 16 && labels_fake.size() <= 16) {
    for (std::size_t i = 0; i < labels_real.size(); ++i) {
      for (std::size_t j = 0; j < labels_fake.size(); ++j) {
        if (labels_real[i] != labels_fake[j]) {
          pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
      }
    }
    return pairs;
  }
  if (rng == nullptr) {
    throw ContractError("embedding pairs: batches above 16 rows need a sampling generator");
  }
  std::vector<int> candidates;
  for (std::size_t j = 0; j < labels_fake.size(); ++j) {
    candidates.clear();
    for (std::size_t i = 0; i < labels_real.size(); ++i) {
      if (labels_real[i] != labels_fake[j]) candidates.push_back(static_cast<int>(i));
    }
    if (candidates.empty()) continue;
    pairs.emplace_back(candidates[rng->below(candidates.size())], static_cast<int>(j));
  }
  return pairs;
}

static double cosine_floored(const double* a, const double* b, std::size_t n) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nb), 1e-12));
}

double embedding_loss(const Matrix& real, const Matrix& fake,
                      const std::vector<std::uint32_t>& labels_real,
                      const std::vector<std::uint32_t>& labels_fake, Rng* rng) {
  if (real.rows() != labels_real.size() || fake.rows() != labels_fake.size()) {
    throw ShapeError("embedding_loss: label counts do not match the batches");
  }
  if (real.cols() != fake.cols()) throw ShapeError("embedding_loss: feature dims differ");
  const auto pairs = embedding_pairs(labels_real, labels_fake, rng);
  if (pairs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& [i, j] : pairs) {
    const double c = cosine_floored(real.data() + static_cast<std::size_t>(i) * real.cols(),
                                    fake.data() + static_cast<std::size_t>(j) * fake.cols(),
                                    real.cols());
    acc += std::max(0.0, c);
  }
  return acc / static_cast<double>(pairs.size());
}

Expr embedding_loss_expr(Tape& tape, const Matrix& real, Expr fake,
                         const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) return tape.constant(Matrix(1, 1, 0.0));
  Matrix real_rows(pairs.size(), real.cols());
  std::vector<int> fake_idx(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::size_t i = static_cast<std::size_t>(pairs[p].first);
    for (std::size_t c = 0; c < real.cols(); ++c) real_rows(p, c) = real(i, c);
    fake_idx[p] = pairs[p].second;
  }
  Expr fake_rows = gather_rows(fake, fake_idx);
  Expr cos = cosine_rows(tape.constant(std::move(real_rows)), fake_rows);
  return mean_all(max_scalar(cos, 0.0));
}

double recon_loss(const MlpNet& decoder, const Matrix& fake, const Matrix& protos) {
  if (fake.rows() != protos.rows()) throw ShapeError("recon_loss: batch mismatch");
  Matrix rec = decoder.forward(fake);
  if (rec.cols() != protos.cols()) throw ShapeError("recon_loss: prototype dim mismatch");
  double acc = 0.0;
  for (std::size_t r = 0; r < rec.rows(); ++r) {
    acc += 1.0 - cosine_floored(rec.data() + r * rec.cols(), protos.data() + r * protos.cols(),
                                rec.cols());
  }
  return acc / static_cast<double>(rec.rows());
}

Expr recon_loss_expr(const TapedNet& decoder, Expr fake, Expr protos) {
  Expr rec = net_forward(decoder, fake);
  return mean_all(add_scalar(scale(cosine_rows(rec, protos), -1.0), 1.0));
}

namespace {

struct BatchView {
  Matrix real;    // bsize x d_x
  Matrix protos;  // bsize x d_phi
  std::vector<std::uint32_t> labels;
};

BatchView make_batch(const Matrix& features, const std::vector<std::uint32_t>& labels,
                     const std::vector<std::vector<double>>& conditioning,
                     const std::vector<std::size_t>& order, std::size_t start, std::size_t bsize,
                     std::size_t d_phi) {
  BatchView b;
  b.real = Matrix(bsize, features.cols());
  b.protos = Matrix(bsize, d_phi);
  b.labels.resize(bsize);
  for (std::size_t r = 0; r < bsize; ++r) {
    const std::size_t idx = order[start + r];
    for (std::size_t c = 0; c < features.cols(); ++c) b.real(r, c) = features(idx, c);
    const std::vector<double>& p = conditioning[idx];
    for (std::size_t c = 0; c < d_phi; ++c) b.protos(r, c) = p[c];
    b.labels[r] = labels[idx];
  }
  return b;
}

}  // namespace

void train_cgan(GanTriple& triple, const Matrix& features,
                const std::vector<std::uint32_t>& labels,
                const std::vector<std::vector<double>>& conditioning, const GanConfig& cfg,
                std::uint64_t seed, GanTrainLog* log) {
  cfg.validate();
  const std::size_t n = features.rows();
  if (n == 0) throw ContractError("adversarial training: no records");
  if (labels.size() != n || conditioning.size() != n) {
    throw ShapeError("adversarial training: features, labels, conditioning disagree");
  }
  if (features.cols() != triple.d_x) throw ShapeError("adversarial training: feature dim mismatch");
  for (const auto& p : conditioning) {
    if (p.size() != triple.d_phi) {
      throw ShapeError("adversarial training: conditioning dim mismatch");
    }
  }

  Rng shuffle_rng(child_seed(seed, Seed::GanTrain));
  Rng noise_rng(child_seed(seed, Seed::GanNoise));
  Rng interp_rng(child_seed(seed, Seed::GanInterp));
  Rng pairs_rng(child_seed(seed, Seed::GanPairs));

  AdamState adam_disc(triple.discriminator.params(), {cfg.lr, cfg.weight_decay, 0.9, 0.999, 1e-8});
  std::vector<Matrix*> gen_dec_params = triple.generator.params();
  {
    auto dec = triple.decoder.params();
    gen_dec_params.insert(gen_dec_params.end(), dec.begin(), dec.end());
  }
  AdamState adam_gen(gen_dec_params, {cfg.lr, cfg.weight_decay, 0.9, 0.999, 1e-8});

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const std::size_t n_batches = (n + cfg.batch - 1) / cfg.batch;

  auto batch_at = [&](std::size_t b) {
    const std::size_t start = b * cfg.batch;
    const std::size_t bsize = std::min(cfg.batch, n - start);
    return make_batch(features, labels, conditioning, order, start, bsize, triple.d_phi);
  };

  auto draw_noise = [&](std::size_t rows) {
    Matrix z(rows, triple.d_z);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < triple.d_z; ++c) z(r, c) = noise_rng.normal();
    }
    return z;
  };

  auto generate_plain = [&](const Matrix& protos, const Matrix& z) {
    Matrix input(protos.rows(), triple.d_phi + triple.d_z);
    for (std::size_t r = 0; r < protos.rows(); ++r) {
      for (std::size_t c = 0; c < triple.d_phi; ++c) input(r, c) = protos(r, c);
      for (std::size_t c = 0; c < triple.d_z; ++c) input(r, triple.d_phi + c) = z(r, c);
    }
    return triple.generator.forward(input);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_critic = 0.0, epoch_gap = 0.0, epoch_gen = 0.0;
    std::size_t critic_count = 0;
    std::size_t cursor = 0;

    for (std::size_t gi = 0; gi < n_batches; ++gi) {
      // Critic updates on successive batches (cursor wraps within the epoch).
      for (std::size_t t = 0; t < cfg.critic_steps; ++t) {
        const BatchView b = batch_at(cursor++ % n_batches);
        const Matrix z = draw_noise(b.real.rows());
        const Matrix fake = generate_plain(b.protos, z);
        std::vector<double> u(b.real.rows());
        for (double& ui : u) ui = interp_rng.uniform();

        Tape tape;
        TapedNet disc = lift(tape, triple.discriminator, true);
        WganParts parts =
            wgan_gp_loss(tape, disc, tape.constant(b.real), tape.constant(fake),
                         tape.constant(b.protos), cfg.alpha, u);
        tape.backward(parts.total);
        adam_disc.step(triple.discriminator.params(), collect_grads(tape, disc));
        epoch_critic += parts.total.value()(0, 0);
        epoch_gap += parts.gap.value()(0, 0);
        ++critic_count;
      }

      // One combined generator + decoder update.
      const BatchView b = batch_at(gi);
      const Matrix z = draw_noise(b.real.rows());
      const auto pairs = embedding_pairs(b.labels, b.labels, &pairs_rng);

      Tape tape;
      TapedNet gen = lift(tape, triple.generator, true);
      TapedNet dec = lift(tape, triple.decoder, true);
      TapedNet disc = lift(tape, triple.discriminator, false);  // frozen this step
      Expr protosE = tape.constant(b.protos);
      Expr input = concat_cols(protosE, tape.constant(z));
      Expr fakeE = net_forward(gen, input);
      Expr score = net_forward(disc, concat_cols(fakeE, protosE));
      Expr total = scale(mean_all(score), -1.0);
      total = add(total, scale(recon_loss_expr(dec, fakeE, protosE), cfg.lambda));
      if (!pairs.empty()) {
        total = add(total, scale(embedding_loss_expr(tape, b.real, fakeE, pairs), cfg.gamma));
      }
      tape.backward(total);
      std::vector<Matrix> grads = collect_grads(tape, gen);
      {
        std::vector<Matrix> dec_grads = collect_grads(tape, dec);
        for (Matrix& g : dec_grads) grads.push_back(std::move(g));
      }
      adam_gen.step(gen_dec_params, grads);
      epoch_gen += total.value()(0, 0);
    }

    if (log != nullptr) {
      log->critic_loss.push_back(epoch_critic / static_cast<double>(critic_count));
      log->wasserstein_gap.push_back(epoch_gap / static_cast<double>(critic_count));
      log->gen_loss.push_back(epoch_gen / static_cast<double>(n_batches));
    }
  }
}

void train_cgan(GanTriple& triple, const Matrix& features,
                const std::vector<std::uint32_t>& labels,
                const std::vector<Prototype>& class_prototypes, const GanConfig& cfg,
                std::uint64_t seed, GanTrainLog* log) {
  std::vector<const Prototype*> by_class;
  for (const Prototype& p : class_prototypes) {
    if (p.class_id >= by_class.size()) by_class.resize(p.class_id + 1, nullptr);
    by_class[p.class_id] = &p;
  }
  std::vector<std::vector<double>> conditioning(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= by_class.size() || by_class[labels[i]] == nullptr) {
      throw ContractError("adversarial training: class " + std::to_string(labels[i]) +
                          " has no prototype");
    }
    conditioning[i] = by_class[labels[i]]->values;
  }
  train_cgan(triple, features, labels, conditioning, cfg, seed, log);
}

}  // namespace fewgen
