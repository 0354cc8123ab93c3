#ifndef MATSAC_RECOVER_HPP
#define MATSAC_RECOVER_HPP

/// End-to-end spectral reconstruction pipelines.
///
/// Both pipelines share a spine: interpolate the Matsubara samples onto an
/// imaginary-axis segment, unzip the segment to the unit circle, recover
/// exterior poles from the Fourier tail, pull them back to physical
/// locations, and fit weights against the original samples subject to the
/// positivity structure of the case (nonnegative point masses for gapped
/// discrete spectra, complex weights with a nonpositive imaginary part of G
/// on a real-axis grid for quasi-particle spectra).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "matsac/interp.hpp"
#include "matsac/model.hpp"
#include "matsac/nnls.hpp"
#include "matsac/prony.hpp"
#include "matsac/qp.hpp"
#include "matsac/unzip.hpp"

namespace matsac {

enum class ReconstructionKind { molecule, condensed };

/// Recovered spectral representation A(x) ~ sum_j A_j delta-like terms at
/// poles xi_j.  Molecule reconstructions have real poles and nonnegative
/// real weights (stored in the real parts); condensed ones carry complex
/// poles in the lower half-plane and complex weights.
struct Reconstruction {
  ReconstructionKind kind = ReconstructionKind::molecule;
  std::vector<Complex> poles;
  std::vector<Complex> weights;
  double residual = 0.0;       // squared data misfit ||K A - g||^2
  double max_violation = 0.0;  // largest constraint-grid violation (condensed)
  double eta = 0.01;           // default evaluation broadening
};

/// Broadened spectral function
///   A(x) = -(1/pi) Im sum_j A_j / (x + i eta - xi_j),   eta > 0.
inline double eval_spectral(const Reconstruction& rec, double x, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eval_spectral: eta must be positive");
  Complex acc(0.0, 0.0);
  Complex zx(x, eta);
  for (std::size_t j = 0; j < rec.poles.size(); ++j)
    acc += rec.weights[j] / (zx - rec.poles[j]);
  return -acc.imag() / pi;
}

/// Nonnegative weight fit for real pole locations: minimizes the stacked
/// real/imaginary misfit to the samples over A_j >= 0, then drops weights
/// below 1e-8 of the largest and refits once on the survivors.
inline Reconstruction fit_molecule_weights(const MatsubaraDataset& data,
                                           std::span<const double> poles) {
  if (poles.empty())
    throw std::invalid_argument("fit_molecule_weights: empty pole list");
  if (data.points.size() != data.samples.size() || data.points.empty())
    throw std::invalid_argument("fit_molecule_weights: dataset points/samples mismatch");

  const auto n = static_cast<Eigen::Index>(data.points.size());

  auto solve = [&](std::span<const double> xs) {
    const auto m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd a(2 * n, m);
    Eigen::VectorXd b(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Complex z = data.points[static_cast<std::size_t>(i)];
      Complex g = data.samples[static_cast<std::size_t>(i)];
      b(i) = g.real();
      b(n + i) = g.imag();
      for (Eigen::Index j = 0; j < m; ++j) {
        Complex k = 1.0 / (2.0 * pi * (z - xs[static_cast<std::size_t>(j)]));
        a(i, j) = k.real();
        a(n + i, j) = k.imag();
      }
    }
    NnlsResult r = nnls(a, b);
    if (!r.converged)
      throw std::runtime_error("fit_molecule_weights: weight fit did not converge");
    return r;
  };

  NnlsResult first = solve(poles);
  double wmax = first.x.size() > 0 ? first.x.maxCoeff() : 0.0;

  Reconstruction rec;
  rec.kind = ReconstructionKind::molecule;
  if (wmax == 0.0) {
    rec.residual = first.residual_sq;
    return rec;
  }

  std::vector<double> kept;
  for (Eigen::Index j = 0; j < first.x.size(); ++j)
    if (first.x(j) >= 1e-8 * wmax) kept.push_back(poles[static_cast<std::size_t>(j)]);

  NnlsResult final_fit = kept.size() == poles.size() ? std::move(first) : solve(kept);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    rec.poles.emplace_back(kept[j], 0.0);
    rec.weights.emplace_back(final_fit.x(static_cast<Eigen::Index>(j)), 0.0);
  }
  rec.residual = final_fit.residual_sq;
  return rec;
}

/// Real-axis grid on which the condensed fit enforces Im G(x) <= 0.
struct ConstraintGrid {
  double x_min = 0.0;
  double x_max = 0.0;
  int count = 0;

  std::vector<double> points() const {
    if (count < 2 || !(x_max > x_min))
      throw std::invalid_argument("ConstraintGrid: need x_max > x_min and count >= 2");
    std::vector<double> xs(static_cast<std::size_t>(count));
    double step = (x_max - x_min) / (count - 1);
    for (int i = 0; i < count; ++i) xs[static_cast<std::size_t>(i)] = x_min + step * i;
    return xs;
  }
};

/// Default grid around the poles: half-width five times the largest damping
/// Gamma = max |Im xi|, spacing Gamma / 10, capped at 4001 points.
inline ConstraintGrid default_constraint_grid(std::span<const Complex> poles) {
  if (poles.empty())
    throw std::invalid_argument("default_constraint_grid: empty pole list");
  double gamma = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& xi : poles) {
    gamma = std::max(gamma, std::abs(xi.imag()));
    lo = std::min(lo, xi.real());
    hi = std::max(hi, xi.real());
  }
  if (gamma == 0.0)
    throw std::invalid_argument("default_constraint_grid: poles must be complex");
  ConstraintGrid grid;
  grid.x_min = lo - 5.0 * gamma;
  grid.x_max = hi + 5.0 * gamma;
  double span = grid.x_max - grid.x_min;
  grid.count = std::min(static_cast<int>(std::floor(span / (gamma / 10.0))) + 1, 4001);
  grid.count = std::max(grid.count, 2);
  return grid;
}

/// Complex weight fit for condensed poles: least squares against the samples
/// subject to Im[(1/2pi) sum_j A_j / (x - xi_j)] <= 0 on the constraint
/// grid, solved as a quadratic program in (Re A, Im A).
inline Reconstruction fit_cdm_weights(const MatsubaraDataset& data,
                                      std::span<const Complex> poles,
                                      const ConstraintGrid& grid,
                                      const QpOptions& opt = {}) {
  if (poles.empty()) throw std::invalid_argument("fit_cdm_weights: empty pole list");
  if (data.points.size() != data.samples.size() || data.points.empty())
    throw std::invalid_argument("fit_cdm_weights: dataset points/samples mismatch");

  const auto n = static_cast<Eigen::Index>(data.points.size());
  const auto m = static_cast<Eigen::Index>(poles.size());

  Eigen::MatrixXd k(2 * n, 2 * m);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex z = data.points[static_cast<std::size_t>(i)];
    Complex g = data.samples[static_cast<std::size_t>(i)];
    b(i) = g.real();
    b(n + i) = g.imag();
    for (Eigen::Index j = 0; j < m; ++j) {
      Complex kj = 1.0 / (2.0 * pi * (z - poles[static_cast<std::size_t>(j)]));
      k(i, j) = kj.real();
      k(i, m + j) = -kj.imag();
      k(n + i, j) = kj.imag();
      k(n + i, m + j) = kj.real();
    }
  }

  std::vector<double> xs = grid.points();
  const auto rows = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd gmat(rows, 2 * m);
  for (Eigen::Index r = 0; r < rows; ++r) {
    double x = xs[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < m; ++j) {
      Complex phi = 1.0 / (2.0 * pi * (x - poles[static_cast<std::size_t>(j)]));
      gmat(r, j) = phi.imag();
      gmat(r, m + j) = phi.real();
    }
  }

  Eigen::MatrixXd q = 2.0 * k.transpose() * k;
  Eigen::VectorXd c = -2.0 * k.transpose() * b;
  QpResult qp = solve_qp(q, c, gmat, Eigen::VectorXd::Zero(rows),
                         Eigen::VectorXd::Zero(2 * m), opt);
  if (!qp.converged)
    throw std::runtime_error("fit_cdm_weights: weight fit hit the iteration cap after " +
                             std::to_string(qp.iterations) + " iterations");
  if (qp.max_violation > opt.feas_tol)
    throw std::runtime_error("fit_cdm_weights: constraint violation " +
                             std::to_string(qp.max_violation) + " exceeds tolerance");
  if (qp.stationarity > opt.kkt_tol)
    throw std::runtime_error("fit_cdm_weights: stationarity residual " +
                             std::to_string(qp.stationarity) + " exceeds tolerance");

  Reconstruction rec;
  rec.kind = ReconstructionKind::condensed;
  rec.poles.assign(poles.begin(), poles.end());
  for (Eigen::Index j = 0; j < m; ++j)
    rec.weights.emplace_back(qp.x(j), qp.x(m + j));
  rec.residual = (k * qp.x - b).squaredNorm();
  rec.max_violation = qp.max_violation;
  return rec;
}

/// Tuning knobs for the pipelines.  Unset optionals resolve to the defaults
/// described per field.
struct PipelineConfig {
  std::optional<double> epsilon;      // molecule: spectral gap scale, required
  std::optional<int> n_interp;        // molecule basis size, default min(N, 256) even
  double svd_cutoff = 1e-8;
  int d_max = 10;
  std::optional<int> l;               // Hankel rows, default 3 d_max
  std::optional<int> n_samples;       // circle samples, default power of two from the
                                      // segment geometry (see resolve functions)
  std::optional<double> noise_floor;  // default max(10 sigma, 1e-10) molecule,
                                      // max(sigma/5, 1e-10) condensed; heuristic when
                                      // the dataset has no recorded sigma
  double tol_interior = 1e-3;
  double eta = 0.01;                  // condensed evaluation broadening
  std::optional<double> grid_min;     // constraint grid override (condensed)
  std::optional<double> grid_max;
  std::optional<int> grid_count;
  double feas_tol = 1e-8;
  double kkt_tol = 1e-8;
  int max_iterations = 100000;
};

/// Concrete values a pipeline run actually used.
struct ResolvedConfig {
  ReconstructionKind kind = ReconstructionKind::molecule;
  double epsilon = 0.0;  // molecule only
  int n_interp = 0;      // molecule only
  double svd_cutoff = 1e-8;
  int d_max = 10;
  int l = 10;
  int n_samples = 0;
  double noise_floor = 0.0;
  bool heuristic_floor = false;
  double tol_interior = 1e-3;
  double eta = 0.01;
  double grid_min = 0.0;  // condensed only
  double grid_max = 0.0;
  int grid_count = 0;
  double feas_tol = 1e-8;
  double kkt_tol = 1e-8;
  int max_iterations = 100000;
};

struct PipelineResult {
  Reconstruction reconstruction;
  ResolvedConfig config;
  PronyResult prony;
  double interp_residual = 0.0;          // molecule least-squares residual
  int interp_svd_rank = 0;
  double max_imag_discarded = 0.0;       // molecule: largest |Im xi| projected away
  std::vector<Complex> discarded_poles;  // pullbacks dropped by the half-plane filter
  std::vector<std::string> warnings;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

inline int pow2_at_least(double bound) {
  int n = 4;
  while (static_cast<double>(n) < bound) {
    if (n > (1 << 24)) throw std::runtime_error("sample count bound overflow");
    n *= 2;
  }
  return n;
}

inline void validate_dataset(const MatsubaraDataset& data, std::size_t min_points) {
  if (!(data.beta > 0.0)) throw std::invalid_argument("dataset: beta must be positive");
  if (data.points.size() != data.samples.size())
    throw std::invalid_argument("dataset: points/samples length mismatch");
  if (data.points.size() < min_points)
    throw std::invalid_argument("dataset: too few samples for this pipeline");
  if (data.n_points != static_cast<int>(data.points.size()))
    throw std::invalid_argument("dataset: n_points does not match sample count");
}

inline void validate_common_config(const PipelineConfig& cfg) {
  if (!(cfg.svd_cutoff > 0.0) || !(cfg.svd_cutoff < 1.0))
    throw std::invalid_argument("config: svd_cutoff must lie in (0, 1)");
  if (cfg.d_max < 1) throw std::invalid_argument("config: d_max must be positive");
  if (cfg.l && *cfg.l < cfg.d_max)
    throw std::invalid_argument("config: l must be at least d_max");
  if (cfg.noise_floor && (!(*cfg.noise_floor > 0.0) || !(*cfg.noise_floor < 1.0)))
    throw std::invalid_argument("config: noise_floor must lie in (0, 1)");
  if (!(cfg.tol_interior > 0.0))
    throw std::invalid_argument("config: tol_interior must be positive");
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("config: eta must be positive");
  if (!(cfg.feas_tol > 0.0) || !(cfg.kkt_tol > 0.0))
    throw std::invalid_argument("config: solver tolerances must be positive");
  if (cfg.max_iterations < 1)
    throw std::invalid_argument("config: max_iterations must be positive");
}

// The default floor is a multiple of the recorded sample noise. The molecule
// trace reaches the Hankel stage unsmoothed, so its noise singular values sit
// an order below 10 sigma and a wide margin truncates them all. The condensed
// trace is smoothed by the spline first; its noise directions land near sigma
// itself, and the floor must sit below them so they stay in the model instead
// of bending the physical poles.
inline std::optional<double> resolve_noise_floor(const PipelineConfig& cfg,
                                                 const MatsubaraDataset& data,
                                                 double sigma_multiple) {
  if (cfg.noise_floor) return cfg.noise_floor;
  if (data.noise_sigma) return std::max(sigma_multiple * *data.noise_sigma, 1e-10);
  return std::nullopt;
}

}  // namespace detail

/// Gapped-spectrum pipeline: pole-basis interpolation, symmetric-segment
/// unzip, Fourier/Hankel pole recovery, projection of the recovered
/// locations onto the real axis, and a nonnegative weight fit.
inline PipelineResult run_molecule_pipeline(const MatsubaraDataset& data,
                                            const PipelineConfig& cfg) {
  detail::validate_dataset(data, 2);
  detail::validate_common_config(cfg);
  if (!cfg.epsilon || !(*cfg.epsilon > 0.0))
    throw std::invalid_argument("config: molecule pipeline requires a positive epsilon");
  if (cfg.n_interp && (*cfg.n_interp < 2 || *cfg.n_interp % 2 != 0))
    throw std::invalid_argument("config: n_interp must be even and >= 2");

  const int n = data.n_points;
  PipelineResult out;
  out.config.kind = ReconstructionKind::molecule;
  out.config.epsilon = *cfg.epsilon;
  out.config.n_interp = cfg.n_interp ? *cfg.n_interp : std::min(n - n % 2, 256);
  if (out.config.n_interp < 2)
    throw std::invalid_argument("config: dataset too small for an even basis");
  out.config.svd_cutoff = cfg.svd_cutoff;
  out.config.d_max = cfg.d_max;
  out.config.l = cfg.l ? *cfg.l : 3 * cfg.d_max;
  out.config.tol_interior = cfg.tol_interior;
  out.config.eta = cfg.eta;
  out.config.feas_tol = cfg.feas_tol;
  out.config.kkt_tol = cfg.kkt_tol;
  out.config.max_iterations = cfg.max_iterations;

  MoleculeMap map = make_molecule_map(data.beta, n);
  double fourier_need = 2.0 * (out.config.d_max + out.config.l + 1);
  out.config.n_samples =
      cfg.n_samples ? *cfg.n_samples
                    : detail::pow2_at_least(
                          std::max(fourier_need, 64.0 * map.b / out.config.epsilon));
  if (cfg.n_samples &&
      (*cfg.n_samples % 2 != 0 || static_cast<double>(*cfg.n_samples) < fourier_need))
    throw std::invalid_argument("config: n_samples too small for the Hankel blocks");

  PoleBasisInterpolant itp = detail::stage("interpolation", [&] {
    auto nodes = chebyshev_pole_nodes(out.config.epsilon, out.config.n_interp);
    return fit_pole_weights(data, nodes, out.config.svd_cutoff);
  });
  out.interp_residual = itp.residual;
  out.interp_svd_rank = itp.svd_rank;

  FourierCoefficients fc = detail::stage("fourier", [&] {
    return fourier_coefficients(
        [&](double theta) {
          return eval_pole_interpolant(itp, z_of_t(map, std::polar(1.0, theta)));
        },
        out.config.n_samples);
  });

  std::optional<double> floor = detail::resolve_noise_floor(cfg, data, 10.0);
  if (!floor)
    out.warnings.push_back(
        "noise floor chosen heuristically from the singular-value profile");
  out.prony = detail::stage("pole recovery", [&] {
    return prony_poles(fc, out.config.d_max, out.config.l, floor, out.config.tol_interior);
  });
  out.config.noise_floor = out.prony.noise_floor;
  out.config.heuristic_floor = out.prony.heuristic_floor;
  if (out.prony.saturated)
    out.warnings.push_back("detected rank saturated at d_max; consider raising d_max");

  std::vector<double> locations = detail::stage("pullback", [&] {
    std::vector<double> xs;
    for (const auto& t : out.prony.exterior_poles) {
      Complex xi = pullback_pole(map, t);
      out.max_imag_discarded = std::max(out.max_imag_discarded, std::abs(xi.imag()));
      xs.push_back(xi.real());
    }
    std::sort(xs.begin(), xs.end());
    std::vector<double> unique;
    for (double x : xs) {
      if (std::abs(x) < 1e-12) {
        out.discarded_poles.emplace_back(x, 0.0);
        continue;
      }
      if (!unique.empty() && std::abs(x - unique.back()) <= 1e-12) {
        out.discarded_poles.emplace_back(x, 0.0);
        continue;
      }
      unique.push_back(x);
    }
    if (unique.size() != xs.size())
      out.warnings.push_back("dropped recovered locations at the origin or duplicates");
    return unique;
  });

  if (locations.empty()) {
    out.warnings.push_back("empty reconstruction: no poles survived recovery");
    out.reconstruction.kind = ReconstructionKind::molecule;
    out.reconstruction.eta = out.config.eta;
    return out;
  }

  out.reconstruction = detail::stage("weight fit", [&] {
    return fit_molecule_weights(data, locations);
  });
  out.reconstruction.eta = out.config.eta;
  if (out.reconstruction.poles.empty())
    out.warnings.push_back("empty reconstruction: weight fit pruned every pole");
  return out;
}

/// Quasi-particle pipeline: reciprocal quintic-spline interpolation,
/// one-sided segment unzip, Fourier/Hankel pole recovery, a lower-half-plane
/// filter, and a sign-constrained complex weight fit.
inline PipelineResult run_cdm_pipeline(const MatsubaraDataset& data,
                                       const PipelineConfig& cfg) {
  detail::validate_dataset(data, 6);
  detail::validate_common_config(cfg);

  const int n = data.n_points;
  PipelineResult out;
  out.config.kind = ReconstructionKind::condensed;
  out.config.svd_cutoff = cfg.svd_cutoff;
  out.config.d_max = cfg.d_max;
  out.config.l = cfg.l ? *cfg.l : 3 * cfg.d_max;
  out.config.tol_interior = cfg.tol_interior;
  out.config.eta = cfg.eta;
  out.config.feas_tol = cfg.feas_tol;
  out.config.kkt_tol = cfg.kkt_tol;
  out.config.max_iterations = cfg.max_iterations;

  CondensedMap map = make_condensed_map(data.beta, n);
  double fourier_need = 2.0 * (out.config.d_max + out.config.l + 1);
  out.config.n_samples =
      cfg.n_samples ? *cfg.n_samples
                    : detail::pow2_at_least(
                          std::max(fourier_need, 64.0 * std::sqrt(map.b / map.a)));
  if (cfg.n_samples &&
      (*cfg.n_samples % 2 != 0 || static_cast<double>(*cfg.n_samples) < fourier_need))
    throw std::invalid_argument("config: n_samples too small for the Hankel blocks");

  ReciprocalSplineInterpolant sp =
      detail::stage("interpolation", [&] { return fit_reciprocal_spline(data); });

  FourierCoefficients fc = detail::stage("fourier", [&] {
    return fourier_coefficients(
        [&](double theta) {
          return eval_reciprocal_interpolant(sp, z_of_t(map, std::polar(1.0, theta)));
        },
        out.config.n_samples);
  });

  std::optional<double> floor = detail::resolve_noise_floor(cfg, data, 0.2);
  if (!floor)
    out.warnings.push_back(
        "noise floor chosen heuristically from the singular-value profile");
  out.prony = detail::stage("pole recovery", [&] {
    return prony_poles(fc, out.config.d_max, out.config.l, floor, out.config.tol_interior);
  });
  out.config.noise_floor = out.prony.noise_floor;
  out.config.heuristic_floor = out.prony.heuristic_floor;
  if (out.prony.saturated)
    out.warnings.push_back("detected rank saturated at d_max; consider raising d_max");

  std::vector<Complex> kept = detail::stage("pullback", [&] {
    std::vector<Complex> xs;
    for (const auto& t : out.prony.exterior_poles) {
      Complex xi = pullback_pole(map, t);
      if (xi.imag() >= -1e-6) {
        out.discarded_poles.push_back(xi);
        continue;
      }
      xs.push_back(xi);
    }
    std::sort(xs.begin(), xs.end(), [](const Complex& lhs, const Complex& rhs) {
      if (lhs.real() != rhs.real()) return lhs.real() < rhs.real();
      return lhs.imag() < rhs.imag();
    });
    std::vector<Complex> unique;
    for (const auto& xi : xs) {
      if (!unique.empty() && std::abs(xi - unique.back()) <= 1e-10) {
        out.discarded_poles.push_back(xi);
        continue;
      }
      unique.push_back(xi);
    }
    return unique;
  });
  if (!out.discarded_poles.empty())
    out.warnings.push_back("discarded recovered poles outside the lower half-plane");

  if (kept.empty()) {
    out.warnings.push_back("empty reconstruction: no poles survived recovery");
    out.reconstruction.kind = ReconstructionKind::condensed;
    out.reconstruction.eta = out.config.eta;
    return out;
  }

  ConstraintGrid grid = detail::stage("constraint grid", [&] {
    ConstraintGrid g = default_constraint_grid(kept);
    if (cfg.grid_min) g.x_min = *cfg.grid_min;
    if (cfg.grid_max) g.x_max = *cfg.grid_max;
    if (cfg.grid_count) g.count = *cfg.grid_count;
    if (g.count < 2 || !(g.x_max > g.x_min))
      throw std::invalid_argument("constraint grid: need x_max > x_min and count >= 2");
    return g;
  });
  out.config.grid_min = grid.x_min;
  out.config.grid_max = grid.x_max;
  out.config.grid_count = grid.count;

  out.reconstruction = detail::stage("weight fit", [&] {
    QpOptions opt;
    opt.feas_tol = out.config.feas_tol;
    opt.kkt_tol = out.config.kkt_tol;
    opt.max_iterations = out.config.max_iterations;
    return fit_cdm_weights(data, kept, grid, opt);
  });
  out.reconstruction.eta = out.config.eta;
  return out;
}

}  // namespace matsac

#endif  // MATSAC_RECOVER_HPP
