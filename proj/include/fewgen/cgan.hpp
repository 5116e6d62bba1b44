#pragma once

#include <cstdint>
#include <vector>

#include "fewgen/cptn.hpp"
#include "fewgen/matrix.hpp"
#include "fewgen/net.hpp"
#include "fewgen/rng.hpp"

namespace fewgen {

struct GanConfig {
  std::size_t d_z = 0;          // noise dim; 0 = same as the prototype dim
  std::size_t gen_hidden = 0;   // 0 = d_x
  std::size_t disc_hidden = 0;  // 0 = d_x
  std::size_t dec_hidden = 0;   // 0 = d_x
  double alpha = 10.0;          // gradient-penalty coefficient
  double lambda = 0.01;         // reconstruction-loss weight
  double gamma = 0.1;           // unmatched-pair embedding-loss weight
  double lr = 0.001;
  double weight_decay = 0.0001;
  std::size_t epochs = 25;
  std::size_t batch = 64;
  std::size_t critic_steps = 5;  // critic updates per generator update

  void validate() const;  // throws ConfigError
};

/// Generator g(prototype, z) -> feature, critic f(feature, prototype) -> score,
/// decoder h(feature) -> prototype estimate.
struct GanTriple {
  MlpNet generator;
  MlpNet discriminator;
  MlpNet decoder;
  std::size_t d_x = 0, d_phi = 0, d_z = 0;
};

/// Fresh triple with scaled-uniform init.  Hidden activations are LeakyRelu;
/// output layers are linear.
GanTriple make_gan(std::size_t d_x, std::size_t d_phi, const GanConfig& cfg, std::uint64_t seed);

/// Draws `count` features for one conditioning vector (z ~ N(0, I) per draw).
Matrix gan_generate(const GanTriple& triple, const std::vector<double>& prototype,
                    std::size_t count, Rng& rng);

// --- losses ------------------------------------------------------------------

/// Graph pieces of the critic objective, all scalars (1x1 nodes).
struct WganParts {
  Expr total;    // E[f(fake)] - E[f(real)] + alpha * penalty  (critic minimizes)
  Expr gap;      // E[f(real)] - E[f(fake)]  (Wasserstein estimate)
  Expr penalty;  // E[(||grad_x f(interp, proto)||_2 - 1)^2]
};

/**
 * Critic loss with gradient penalty.  `interp_u[i]` is the convex-combination
 * coefficient for row i: interp = u * real + (1 - u) * fake.  The penalty
 * gradient is taken w.r.t. the interpolated feature columns only (the
 * conditioning columns are not part of the norm).
 */
WganParts wgan_gp_loss(Tape& tape, const TapedNet& disc, Expr real, Expr fake, Expr protos,
                       double alpha, const std::vector<double>& interp_u);

/// Convenience scalar evaluation (builds a throwaway tape).
double wgan_gp_loss_value(const GanTriple& triple, const Matrix& real, const Matrix& fake,
                          const Matrix& protos, double alpha,
                          const std::vector<double>& interp_u);

/**
 * Unmatched-pair embedding loss: mean over pairs (real i, fake j) with
 * different class labels of max(0, cos(x_i, fake_j)).  With both batches of
 * size <= 16 every unmatched pair is enumerated; larger batches sample one
 * real row per fake row (requires `rng`).  Returns 0 when no unmatched pair
 * exists.
 */
double embedding_loss(const Matrix& real, const Matrix& fake,
                      const std::vector<std::uint32_t>& labels_real,
                      const std::vector<std::uint32_t>& labels_fake, Rng* rng = nullptr);

/// Pair list used by the loss above: (real_row, fake_row) per entry.
std::vector<std::pair<int, int>> embedding_pairs(const std::vector<std::uint32_t>& labels_real,
                                                 const std::vector<std::uint32_t>& labels_fake,
                                                 Rng* rng);

/// Graph form over an explicit pair list (real rows enter as constants).
Expr embedding_loss_expr(Tape& tape, const Matrix& real, Expr fake,
                         const std::vector<std::pair<int, int>>& pairs);

/// Mean over rows of 1 - cos(decoder(fake_row), prototype_row).
double recon_loss(const MlpNet& decoder, const Matrix& fake, const Matrix& protos);
Expr recon_loss_expr(const TapedNet& decoder, Expr fake, Expr protos);

// --- training ----------------------------------------------------------------

struct GanTrainLog {
  std::vector<double> critic_loss;      // per-epoch mean
  std::vector<double> wasserstein_gap;  // per-epoch mean of E[f(real)] - E[f(fake)]
  std::vector<double> gen_loss;         // per-epoch mean
};

/**
 * Alternating training.  Each epoch shuffles the records into batches; every
 * generator update is preceded by `critic_steps` critic updates on successive
 * batches (the batch cursor wraps within the epoch).  The generator and
 * decoder share one optimizer and receive one combined step per update.
 * `conditioning[i]` is the prototype paired with record i, so fake row i and
 * real row i always share a class, which keeps the interpolation pairing
 * class-consistent.
 */
void train_cgan(GanTriple& triple, const Matrix& features,
                const std::vector<std::uint32_t>& labels,
                const std::vector<std::vector<double>>& conditioning, const GanConfig& cfg,
                std::uint64_t seed, GanTrainLog* log = nullptr);

/// Convenience overload: one prototype per class, broadcast to records.
void train_cgan(GanTriple& triple, const Matrix& features,
                const std::vector<std::uint32_t>& labels,
                const std::vector<Prototype>& class_prototypes, const GanConfig& cfg,
                std::uint64_t seed, GanTrainLog* log = nullptr);

}  // namespace fewgen
