#include "vgnav/gp_core.hpp"

#include "vgnav/errors.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace vgnav {

namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-2;
constexpr double kMaxLogStep = 1.0;
constexpr double kMinLogStep = 1e-10;

bool all_finite(const Eigen::Vector2d& v) { return v.allFinite(); }

// Kernel values together with the intermediate u = 1 + r^2/(2 alpha l^2),
// which the hyperparameter derivatives reuse.
struct KernelBlock {
  Eigen::ArrayXXd d2;
  Eigen::ArrayXXd u;
  Eigen::ArrayXXd k;
};

KernelBlock kernel_block(const Inputs& a, const Inputs& b,
                         const RqKernelParams& p, AzimuthMetric metric) {
  KernelBlock blk;
  blk.d2 = squared_distances(a, b, metric).array();
  const double scale = 1.0 / (2.0 * p.mixture_weight * p.length_scale * p.length_scale);
  blk.u = 1.0 + blk.d2 * scale;
  blk.k = p.signal_variance * (-p.mixture_weight * blk.u.log()).exp();
  return blk;
}

// d K / d log-hyperparameter for the three kernel parameters.
std::array<Eigen::ArrayXXd, 3> kernel_derivatives(const KernelBlock& blk,
                                                   const RqKernelParams& p) {
  const double l2 = p.length_scale * p.length_scale;
  std::array<Eigen::ArrayXXd, 3> d;
  d[0] = blk.k;
  d[1] = blk.k * blk.d2 / (l2 * blk.u);
  d[2] = blk.k * p.mixture_weight * ((blk.u - 1.0) / blk.u - blk.u.log());
  return d;
}

void check_inputs_finite(const Inputs& x, const char* what) {
  if (!x.allFinite()) {
    throw std::invalid_argument(fmt::format("{}: non-finite input", what));
  }
}

}  // namespace

bool RqKernelParams::valid() const {
  return std::isfinite(signal_variance) && std::isfinite(length_scale) &&
         std::isfinite(mixture_weight) && signal_variance > 0.0 &&
         length_scale > 0.0 && mixture_weight > 0.0;
}

void RqKernelParams::validate() const {
  if (!valid()) {
    throw std::invalid_argument(fmt::format(
        "RQ kernel parameters must be finite and positive (sigma2={}, l={}, alpha={})",
        signal_variance, length_scale, mixture_weight));
  }
}

void TrainingSet::validate() const {
  if (targets.size() == 0 || inputs.rows() != targets.size()) {
    throw std::invalid_argument(fmt::format(
        "training set needs equal nonzero input/target counts (got {} inputs, {} targets)",
        inputs.rows(), targets.size()));
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("training noise variance must be positive");
  }
  check_inputs_finite(inputs, "training set");
  if (!targets.allFinite()) {
    throw std::invalid_argument("training set: non-finite target");
  }
}

double squared_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        AzimuthMetric metric) {
  double da = a.x() - b.x();
  if (metric == AzimuthMetric::Periodic) {
    da = 2.0 * std::sin(0.5 * da);
  }
  const double de = a.y() - b.y();
  return da * da + de * de;
}

double rq_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                 const RqKernelParams& params, AzimuthMetric metric) {
  if (!all_finite(a) || !all_finite(b)) {
    throw std::invalid_argument("rq_kernel: non-finite input");
  }
  params.validate();
  const double r2 = squared_distance(a, b, metric);
  const double u = 1.0 + r2 / (2.0 * params.mixture_weight * params.length_scale *
                               params.length_scale);
  return params.signal_variance * std::pow(u, -params.mixture_weight);
}

Eigen::MatrixXd squared_distances(const Inputs& a, const Inputs& b,
                                  AzimuthMetric metric) {
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  Eigen::MatrixXd d2(na, nb);
  if (metric == AzimuthMetric::Periodic) {
    // |(cos a, sin a) - (cos b, sin b)|^2 == (2 sin((a-b)/2))^2
    const Eigen::ArrayXd ca = a.col(0).array().cos(), sa = a.col(0).array().sin();
    const Eigen::ArrayXd cb = b.col(0).array().cos(), sb = b.col(0).array().sin();
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Eigen::ArrayXd dc = ca - cb(j);
      const Eigen::ArrayXd ds = sa - sb(j);
      const Eigen::ArrayXd de = a.col(1).array() - b(j, 1);
      d2.col(j) = (dc.square() + ds.square() + de.square()).matrix();
    }
  } else {
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Eigen::ArrayXd da = a.col(0).array() - b(j, 0);
      const Eigen::ArrayXd de = a.col(1).array() - b(j, 1);
      d2.col(j) = (da.square() + de.square()).matrix();
    }
  }
  return d2;
}

Eigen::MatrixXd rq_gram(const Inputs& a, const Inputs& b,
                        const RqKernelParams& params, AzimuthMetric metric) {
  return kernel_block(a, b, params, metric).k.matrix();
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, bool try_plain) {
  JitteredCholesky out;
  const Eigen::Index n = k.rows();
  if (try_plain) {
    out.llt.compute(k);
    if (out.llt.info() == Eigen::Success &&
        (out.llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      return out;
    }
  }
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    out.llt.compute(kj);
    if (out.llt.info() == Eigen::Success &&
        (out.llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalFailure(fmt::format(
      "Cholesky of {}x{} matrix failed with jitter up to {}", n, n, kJitterMax));
}

Prediction exact_gp_predict(const TrainingSet& train,
                            const RqKernelParams& kernel,
                            const Eigen::Vector2d& query,
                            AzimuthMetric metric) {
  Inputs q(1, 2);
  q.row(0) = query.transpose();
  return exact_gp_predict(train, kernel, q, metric).front();
}

std::vector<Prediction> exact_gp_predict(const TrainingSet& train,
                                         const RqKernelParams& kernel,
                                         const Inputs& queries,
                                         AzimuthMetric metric) {
  train.validate();
  kernel.validate();
  check_inputs_finite(queries, "exact_gp_predict");

  Eigen::MatrixXd knn = rq_gram(train.inputs, train.inputs, kernel, metric);
  knn.diagonal().array() += train.noise_variance;
  const auto chol = jittered_cholesky(knn, true);
  const Eigen::VectorXd weights = chol.llt.solve(train.targets);

  const Eigen::MatrixXd kqn = rq_gram(queries, train.inputs, kernel, metric);
  const Eigen::MatrixXd v = chol.llt.matrixL().solve(kqn.transpose());

  std::vector<Prediction> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const double latent =
        std::max(0.0, kernel.signal_variance - v.col(i).squaredNorm());
    out[static_cast<std::size_t>(i)] = {kqn.row(i).dot(weights),
                                        latent + train.noise_variance};
  }
  return out;
}

HyperVector to_log_hyper(const RqKernelParams& kernel, double noise_variance) {
  return {std::log(kernel.signal_variance), std::log(kernel.length_scale),
          std::log(kernel.mixture_weight), std::log(noise_variance)};
}

std::pair<RqKernelParams, double> from_log_hyper(const HyperVector& theta) {
  return {RqKernelParams{std::exp(theta[kLogSignal]), std::exp(theta[kLogLength]),
                         std::exp(theta[kLogMixture])},
          std::exp(theta[kLogNoise])};
}

ElboResult collapsed_elbo(const TrainingSet& train, const Inputs& inducing,
                          const RqKernelParams& kernel, double s,
                          AzimuthMetric metric, bool with_gradient) {
  const auto n = static_cast<double>(train.size());
  const Eigen::Index m = inducing.rows();
  const Eigen::VectorXd& y = train.targets;

  const KernelBlock kmm_blk = kernel_block(inducing, inducing, kernel, metric);
  const KernelBlock kmn_blk = kernel_block(inducing, train.inputs, kernel, metric);
  const Eigen::MatrixXd kmm = kmm_blk.k.matrix();
  const Eigen::MatrixXd kmn = kmn_blk.k.matrix();

  const auto chol = jittered_cholesky(kmm);
  const Eigen::MatrixXd l = chol.llt.matrixL();
  const auto ltri = l.triangularView<Eigen::Lower>();
  const double sqrt_s = std::sqrt(s);

  const Eigen::MatrixXd a = ltri.solve(kmn) / sqrt_s;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
  b.selfadjointView<Eigen::Lower>().rankUpdate(a);
  b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt_b(b);
  if (llt_b.info() != Eigen::Success) {
    throw NumericalFailure("collapsed bound: Cholesky of I + A A^T failed");
  }
  const Eigen::MatrixXd lb = llt_b.matrixL();

  const Eigen::VectorXd ay = a * y;
  const Eigen::VectorXd c = lb.triangularView<Eigen::Lower>().solve(ay) / sqrt_s;
  const double yy = y.squaredNorm();
  const double tr_aat = a.squaredNorm();
  const double logdet_b = 2.0 * lb.diagonal().array().log().sum();

  ElboResult res;
  res.value = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(s) -
              0.5 * logdet_b - 0.5 * (yy / s - c.squaredNorm()) -
              0.5 * n * kernel.signal_variance / s + 0.5 * tr_aat;
  if (!with_gradient) return res;

  // v = (Qnn + s I)^{-1} y
  const Eigen::VectorXd binv_ay = llt_b.solve(ay);
  const Eigen::VectorXd v = (y - a.transpose() * binv_ay) / s;
  const auto lt = l.transpose().triangularView<Eigen::Upper>();
  const Eigen::MatrixXd p = lt.solve(a) * sqrt_s;  // Kmm^{-1} Kmn
  const Eigen::VectorXd pv = p * v;

  const Eigen::MatrixXd binv_a = llt_b.solve(a);
  // dF/dKmn = Pv v^T + s^{-1/2} L^{-T} (A - B^{-1} A)
  const Eigen::MatrixXd g_mn =
      pv * v.transpose() + lt.solve(a - binv_a) / sqrt_s;

  // dF/dKmm = -1/2 Pv Pv^T + 1/2 L^{-T} (2I - B^{-1} - B) L^{-1}
  const Eigen::MatrixXd binv = llt_b.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::MatrixXd inner = 2.0 * Eigen::MatrixXd::Identity(m, m) - binv - b;
  inner = lt.solve(inner);
  inner = lt.solve(inner.transpose().eval());
  const Eigen::MatrixXd g_mm = -0.5 * pv * pv.transpose() + 0.5 * inner;

  const auto dkmm = kernel_derivatives(kmm_blk, kernel);
  const auto dkmn = kernel_derivatives(kmn_blk, kernel);
  for (int k = 0; k < 3; ++k) {
    res.gradient[static_cast<std::size_t>(k)] =
        (g_mm.array() * dkmm[static_cast<std::size_t>(k)]).sum() +
        (g_mn.array() * dkmn[static_cast<std::size_t>(k)]).sum();
  }
  // diag(Knn) = sigma^2 only depends on the signal variance.
  res.gradient[kLogSignal] += -0.5 * n * kernel.signal_variance / s;

  const double tr_w = v.squaredNorm() -
                      (n - static_cast<double>(m) + binv.trace()) / s;
  const double d_s = 0.5 * tr_w +
                     (n * kernel.signal_variance - s * tr_aat) / (2.0 * s * s);
  res.gradient[kLogNoise] = s * d_s;
  return res;
}

void OptimSettings::validate() const {
  if (max_iterations < 1) {
    throw std::invalid_argument("optimizer iteration budget must be >= 1");
  }
  if (!(initial_step > 0.0) || patience < 1 || !(tolerance >= 0.0)) {
    throw std::invalid_argument("invalid optimizer step/patience/tolerance");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(lower_log[i] <= upper_log[i])) {
      throw std::invalid_argument("optimizer bounds: lower > upper");
    }
  }
}

Inputs grid_inducing_inputs(const Inputs& inputs, int count,
                            AzimuthMetric /*metric*/) {
  const double amin = inputs.col(0).minCoeff(), amax = inputs.col(0).maxCoeff();
  const double emin = inputs.col(1).minCoeff(), emax = inputs.col(1).maxCoeff();
  const double w = amax - amin;
  const double h = emax - emin;

  int rows = 1;
  if (h > 0.0 && w <= 0.0) {
    rows = count;
  } else if (h > 0.0) {
    rows = static_cast<int>(std::lround(std::sqrt(count * h / w)));
    rows = std::clamp(rows, 1, count);
  }

  // Cell-centred grid; each row receives floor or ceil of count/rows points.
  Inputs z(count, 2);
  int idx = 0;
  const int base = count / rows;
  const int extra = count % rows;
  for (int r = 0; r < rows; ++r) {
    const int k = base + (r < extra ? 1 : 0);
    const double e = emin + (r + 0.5) * h / rows;
    for (int j = 0; j < k; ++j) {
      z(idx, 0) = amin + (j + 0.5) * w / k;
      z(idx, 1) = e;
      ++idx;
    }
  }
  return z;
}

SgpModel SgpModel::build(const TrainingSet& train, Inputs inducing,
                         const RqKernelParams& kernel, double s,
                         AzimuthMetric metric) {
  SgpModel model;
  model.kernel = kernel;
  model.noise_variance = s;
  model.metric = metric;
  const Eigen::Index m = inducing.rows();

  const Eigen::MatrixXd kmm = rq_gram(inducing, inducing, kernel, metric);
  const Eigen::MatrixXd kmn = rq_gram(inducing, train.inputs, kernel, metric);
  const auto chol = jittered_cholesky(kmm);
  const Eigen::MatrixXd l = chol.llt.matrixL();
  const auto ltri = l.triangularView<Eigen::Lower>();
  const double sqrt_s = std::sqrt(s);

  const Eigen::MatrixXd a = ltri.solve(kmn) / sqrt_s;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
  b.selfadjointView<Eigen::Lower>().rankUpdate(a);
  b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt_b(b);
  if (llt_b.info() != Eigen::Success) {
    throw NumericalFailure("sparse GP: Cholesky of I + A A^T failed");
  }
  const Eigen::MatrixXd lb = llt_b.matrixL();
  const Eigen::VectorXd c =
      lb.triangularView<Eigen::Lower>().solve(a * train.targets) / sqrt_s;
  // L_B^{-T} c
  const Eigen::VectorXd lbt_c = lb.transpose().triangularView<Eigen::Upper>().solve(c);

  model.mean_weights_ = l.transpose().triangularView<Eigen::Upper>().solve(lbt_c);
  model.variational_mean = l * lbt_c;

  const Eigen::MatrixXd binv = llt_b.solve(Eigen::MatrixXd::Identity(m, m));
  {
    const auto lt = l.transpose().triangularView<Eigen::Upper>();
    const Eigen::MatrixXd half = lt.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(m, m) - binv));
    const Eigen::MatrixXd full = lt.solve(half.transpose());
    model.reduction_ = 0.5 * (full + full.transpose());
  }

  // Sigma_u = L B^{-1} L^T
  const Eigen::MatrixXd sigma_u = l * binv * l.transpose();
  const Eigen::MatrixXd sym = 0.5 * (sigma_u + sigma_u.transpose());
  model.variational_cov_factor = jittered_cholesky(sym).llt.matrixL();

  model.inducing_inputs = std::move(inducing);
  return model;
}

Prediction SgpModel::predict(const Eigen::Vector2d& query) const {
  Inputs q(1, 2);
  q.row(0) = query.transpose();
  return predict(q).front();
}

std::vector<Prediction> SgpModel::predict(const Inputs& queries) const {
  check_inputs_finite(queries, "svgp_predict");
  std::vector<Prediction> out(static_cast<std::size_t>(queries.rows()));
  if (queries.rows() == 0) return out;

  // Blocks of queries keep the cross-covariance small enough to stay in cache.
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index start = 0; start < queries.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, queries.rows() - start);
    const Eigen::MatrixXd kmq = rq_gram(inducing_inputs, queries.middleRows(start, len), kernel, metric);
    const Eigen::VectorXd mean = kmq.transpose() * mean_weights_;
    const Eigen::VectorXd reduction =
        (kmq.array() * (reduction_ * kmq).array()).colwise().sum().transpose();
    for (Eigen::Index i = 0; i < len; ++i) {
      const double latent = std::max(0.0, kernel.signal_variance - reduction(i));
      out[static_cast<std::size_t>(start + i)] = {mean(i), latent + noise_variance};
    }
  }
  return out;
}

void SgpModel::dump(std::ostream& out) const {
  fmt::print(out, "kernel signal_variance {:.17g} length_scale {:.17g} mixture_weight {:.17g}\n",
             kernel.signal_variance, kernel.length_scale, kernel.mixture_weight);
  fmt::print(out, "noise_variance {:.17g}\n", noise_variance);
  fmt::print(out, "metric {}\n", metric == AzimuthMetric::Periodic ? "periodic" : "planar");
  fmt::print(out, "inducing {}\n", inducing_inputs.rows());
  for (Eigen::Index i = 0; i < inducing_inputs.rows(); ++i) {
    fmt::print(out, "{:.17g} {:.17g}\n", inducing_inputs(i, 0), inducing_inputs(i, 1));
  }
  fmt::print(out, "elbo_trace {}\n", elbo_trace.size());
  for (double e : elbo_trace) fmt::print(out, "{:.17g}\n", e);
}

SgpModel fit_svgp(const TrainingSet& train, const RqKernelParams& initial_kernel,
                  int num_inducing, const OptimSettings& optim) {
  train.validate();
  initial_kernel.validate();
  optim.validate();
  const auto n = static_cast<int>(train.size());
  if (num_inducing < 1 || num_inducing > n) {
    throw std::invalid_argument(fmt::format(
        "num_inducing must lie in [1, {}] (got {})", n, num_inducing));
  }
  if (n >= 2) {
    const Eigen::RowVector2d first = train.inputs.row(0);
    const bool identical =
        ((train.inputs.rowwise() - first).array().abs() == 0.0).all();
    if (identical) {
      throw DegenerateData("training inputs are all identical");
    }
  }

  Inputs inducing;
  if (optim.inducing_init == InducingInit::TrainingInputs) {
    inducing.resize(num_inducing, 2);
    for (int i = 0; i < num_inducing; ++i) {
      const auto src = static_cast<Eigen::Index>(
          (static_cast<long long>(i) * n) / num_inducing);
      inducing.row(i) = train.inputs.row(src);
    }
  } else {
    inducing = grid_inducing_inputs(train.inputs, num_inducing, optim.metric);
  }

  HyperVector theta = to_log_hyper(initial_kernel, train.noise_variance);
  for (std::size_t i = 0; i < 4; ++i) {
    if (optim.optimize[i]) {
      theta[i] = std::clamp(theta[i], optim.lower_log[i], optim.upper_log[i]);
    }
  }

  auto evaluate = [&](const HyperVector& th, bool with_gradient = true) {
    const auto [kern, noise] = from_log_hyper(th);
    return collapsed_elbo(train, inducing, kern, noise, optim.metric, with_gradient);
  };

  ElboResult current = evaluate(theta);
  std::vector<double> trace{current.value};
  const bool any_free = std::any_of(optim.optimize.begin(), optim.optimize.end(),
                                    [](bool b) { return b; });

  if (any_free) {
    HyperVector step;
    step.fill(optim.initial_step);
    int stalled = 0;
    for (int it = 0; it < optim.max_iterations; ++it) {
      HyperVector proposal = theta;
      bool moved = false;
      for (std::size_t i = 0; i < 4; ++i) {
        const double g = current.gradient[i];
        if (!optim.optimize[i] || g == 0.0 || !std::isfinite(g)) continue;
        const double next = std::clamp(theta[i] + std::copysign(step[i], g),
                                       optim.lower_log[i], optim.upper_log[i]);
        moved = moved || next != theta[i];
        proposal[i] = next;
      }
      if (!moved) break;

      // The last candidate's gradient would only adapt steps that are never taken.
      const bool last = it + 1 == optim.max_iterations;
      ElboResult cand;
      bool ok = true;
      try {
        cand = evaluate(proposal, !last);
        ok = std::isfinite(cand.value);
      } catch (const NumericalFailure&) {
        ok = false;
      }

      if (ok && cand.value >= current.value) {
        const double delta = cand.value - current.value;
        for (std::size_t i = 0; i < 4; ++i) {
          const double prod = current.gradient[i] * cand.gradient[i];
          if (prod > 0.0) {
            step[i] = std::min(step[i] * 1.2, kMaxLogStep);
          } else if (prod < 0.0) {
            step[i] *= 0.5;
          }
        }
        theta = proposal;
        current = cand;
        trace.push_back(current.value);
        stalled = (std::abs(delta) < optim.tolerance) ? stalled + 1 : 0;
      } else {
        for (double& s : step) s *= 0.5;
        ++stalled;
      }
      if (stalled >= optim.patience) break;
      if (*std::max_element(step.begin(), step.end()) < kMinLogStep) break;
    }
  }

  const auto [kern, noise] = from_log_hyper(theta);
  SgpModel model = SgpModel::build(train, std::move(inducing), kern, noise, optim.metric);
  model.elbo_trace = std::move(trace);
  return model;
}

std::vector<Prediction> svgp_predict(const SgpModel& model, const Inputs& queries) {
  return model.predict(queries);
}

bool classify(const SgpModel& model, const Eigen::Vector2d& query, double threshold) {
  return model.predict(query).mean > threshold;
}

}  // namespace vgnav
