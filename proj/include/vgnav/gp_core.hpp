#pragma once

// Sparse variational GP regression with a Rational Quadratic kernel.
//
// Inputs are 2-vectors (azimuth, elevation) in radians. The sparse model uses
// the collapsed variational bound: given inducing inputs and hyperparameters
// the optimal q(u) is available in closed form, so the optimizer only moves
// the four log-hyperparameters (signal variance, length scale, mixture
// weight, noise variance).

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vgnav {

using Inputs = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// How the azimuth component enters the kernel distance.
///  - Planar:   plain difference, for FoV-limited visual models.
///  - Periodic: chord length 2 sin(d/2) on the unit circle, for 360 degree
///              LiDAR surfaces. Matches the wrapped difference to second
///              order and keeps the kernel positive definite.
enum class AzimuthMetric { Planar, Periodic };

struct RqKernelParams {
  double signal_variance = 1.0;
  double length_scale = 1.0;
  double mixture_weight = 1.0;

  [[nodiscard]] bool valid() const;
  void validate() const;
};

struct TrainingSet {
  Inputs inputs;
  Eigen::VectorXd targets;
  double noise_variance = 1e-2;

  [[nodiscard]] Eigen::Index size() const { return targets.size(); }
  void validate() const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

double squared_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        AzimuthMetric metric = AzimuthMetric::Planar);

/// sigma^2 (1 + r^2 / (2 alpha l^2))^(-alpha). Throws std::invalid_argument
/// on non-finite input or invalid params.
double rq_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                 const RqKernelParams& params,
                 AzimuthMetric metric = AzimuthMetric::Planar);

/// Pairwise squared distances, rows of `a` against rows of `b`.
Eigen::MatrixXd squared_distances(const Inputs& a, const Inputs& b,
                                  AzimuthMetric metric);

/// Gram matrix K(a, b).
Eigen::MatrixXd rq_gram(const Inputs& a, const Inputs& b,
                        const RqKernelParams& params, AzimuthMetric metric);

/// Cholesky with diagonal jitter: starts at 1e-8, escalates x10 up to 1e-2.
/// With `try_plain` the unmodified matrix is attempted first, which suits
/// noisy Gram matrices that are already well conditioned. Throws
/// NumericalFailure when every level fails.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, bool try_plain = false);

/// Full-GP posterior predictive (mean, variance including noise).
Prediction exact_gp_predict(const TrainingSet& train,
                            const RqKernelParams& kernel,
                            const Eigen::Vector2d& query,
                            AzimuthMetric metric = AzimuthMetric::Planar);

std::vector<Prediction> exact_gp_predict(const TrainingSet& train,
                                         const RqKernelParams& kernel,
                                         const Inputs& queries,
                                         AzimuthMetric metric);

/// Index order of the log-hyperparameter vector.
enum HyperIndex : int { kLogSignal = 0, kLogLength = 1, kLogMixture = 2, kLogNoise = 3 };
using HyperVector = std::array<double, 4>;

HyperVector to_log_hyper(const RqKernelParams& kernel, double noise_variance);
std::pair<RqKernelParams, double> from_log_hyper(const HyperVector& theta);

struct ElboResult {
  double value = 0.0;
  HyperVector gradient{};  // d ELBO / d log-hyperparameter
};

/// Collapsed (Titsias) evidence lower bound and its analytic gradient with
/// respect to the log-hyperparameters, for fixed inducing inputs.
ElboResult collapsed_elbo(const TrainingSet& train, const Inputs& inducing,
                          const RqKernelParams& kernel, double noise_variance,
                          AzimuthMetric metric = AzimuthMetric::Planar,
                          bool with_gradient = true);

enum class InducingInit { Grid, TrainingInputs };

struct OptimSettings {
  int max_iterations = 100;
  double tolerance = 1e-6;   // |dELBO| counted as stalled
  int patience = 5;          // consecutive stalled steps before stopping
  double initial_step = 0.1; // log-space step size
  std::array<bool, 4> optimize{true, true, true, true};
  HyperVector lower_log{-12.0, -8.0, -6.0, -14.0};
  HyperVector upper_log{12.0, 4.0, 6.0, 6.0};
  InducingInit inducing_init = InducingInit::Grid;
  AzimuthMetric metric = AzimuthMetric::Planar;

  void validate() const;
};

/// Uniform grid of `count` inducing inputs over the bounding box of `inputs`.
/// With a periodic metric and data spanning the whole circle, azimuth columns
/// are spaced evenly around the circle.
Inputs grid_inducing_inputs(const Inputs& inputs, int count,
                            AzimuthMetric metric);

class SgpModel {
 public:
  RqKernelParams kernel;
  Inputs inducing_inputs;
  Eigen::VectorXd variational_mean;
  Eigen::MatrixXd variational_cov_factor;  // lower triangular
  double noise_variance = 0.0;
  AzimuthMetric metric = AzimuthMetric::Planar;
  std::vector<double> elbo_trace;  // ELBO after every accepted step

  [[nodiscard]] int num_inducing() const {
    return static_cast<int>(inducing_inputs.rows());
  }

  [[nodiscard]] Prediction predict(const Eigen::Vector2d& query) const;
  [[nodiscard]] std::vector<Prediction> predict(const Inputs& queries) const;

  /// Plain-text dump: hyperparameters, inducing inputs and ELBO trace.
  void dump(std::ostream& out) const;

  /// Builds the closed-form optimal q(u) for the given data and parameters.
  static SgpModel build(const TrainingSet& train, Inputs inducing,
                        const RqKernelParams& kernel, double noise_variance,
                        AzimuthMetric metric);

 private:
  // Kmm = L L^T, B = I + A A^T with A = L^{-1} Kmn / sigma_n.
  Eigen::MatrixXd reduction_;  // L^{-T} (I - B^{-1}) L^{-1}, with Kmm = L L^T
  Eigen::VectorXd mean_weights_;          // Kmm^{-1} mu_u
};

/// Fits a sparse GP. `initial_kernel` seeds the optimizer and the training
/// set's noise_variance seeds sigma_n^2; passing the previous cycle's values
/// warm-starts the fit.
SgpModel fit_svgp(const TrainingSet& train, const RqKernelParams& initial_kernel,
                  int num_inducing, const OptimSettings& optim);

std::vector<Prediction> svgp_predict(const SgpModel& model,
                                     const Inputs& queries);

/// Navigable iff the predicted mean strictly exceeds the threshold.
bool classify(const SgpModel& model, const Eigen::Vector2d& query,
              double threshold = 0.5);

}  // namespace vgnav
