#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "emot/cost_tensor.hpp"
#include "emot/errors.hpp"
#include "emot/heston.hpp"
#include "emot/measure.hpp"
#include "emot/numerics.hpp"
#include "emot/problem.hpp"

namespace emot {

/// Uniform cell grid on [lower, upper]; representative points are cell
/// centers, and out-of-range observations clip into the boundary cells.
struct GridSpec {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t count = 2;

  void validate() const {
    if (!(lower < upper)) throw ConfigError("GridSpec: lower bound must be below upper");
    if (count < 2) throw ConfigError("GridSpec: need at least 2 cells");
    if (!std::isfinite(lower) || !std::isfinite(upper))
      throw ConfigError("GridSpec: bounds must be finite");
  }

  double width() const { return (upper - lower) / static_cast<double>(count); }

  double center(std::size_t i) const {
    return lower + (static_cast<double>(i) + 0.5) * width();
  }

  std::vector<double> centers() const {
    std::vector<double> c(count);
    for (std::size_t i = 0; i < count; ++i) c[i] = center(i);
    return c;
  }

  bool contains(double x) const { return x >= lower && x <= upper; }

  std::size_t locate(double x) const {
    if (x <= lower) return 0;
    if (x >= upper) return count - 1;
    const auto i = static_cast<std::size_t>((x - lower) / width());
    return std::min(i, count - 1);
  }
};

/// White-noise scales for the three observed coordinates; the applied
/// standard deviations are sigma1 sqrt(t1), sigma2 sqrt(t2), sigma3 sqrt(t1).
struct NoiseSpec {
  double sigma1 = 100.0;
  double sigma2 = 150.0;
  double sigma3 = 0.01;

  void validate() const {
    if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0) || !(sigma3 >= 0.0))
      throw ConfigError("NoiseSpec: noise scales must be non-negative");
  }
};

/// Histogram-derived reference data: the cost tensor and the histogram's own
/// axis marginals. exp(-cost) times the product of these marginals recovers
/// the joint cell probabilities on populated cells.
struct ReferenceBuild {
  CostTensor cost;
  DiscreteMeasure x_marginal;
  DiscreteMeasure y_marginal;
  DiscreteMeasure z_marginal;
  double cost_cap = 30.0;
  std::size_t populated_cells = 0;
};

namespace detail {

inline std::vector<double> axis_weights(const std::vector<std::uint64_t>& counts,
                                        std::uint64_t total) {
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  const double s = pairwise_sum(w.data(), w.size());
  for (double& v : w) v /= s;
  return w;
}

inline std::size_t count_nonzero(const std::vector<std::uint64_t>& counts) {
  std::size_t c = 0;
  for (auto v : counts) c += v > 0 ? 1 : 0;
  return c;
}

}  // namespace detail

/// Histograms the joint sample over the three grids and converts it to a cost
/// tensor via c = -log(q_ijk / (qx_i qy_j qz_k)) on populated cells. Empty
/// cells whose marginal product is positive receive the finite cap (so the
/// reference stays equivalent to the product measure); cells with a zero
/// marginal factor carry no mass in any admissible plan and get cost 0.
inline ReferenceBuild build_reference(const PathSample& sample, const GridSpec& gx,
                                      const GridSpec& gy, const GridSpec& gz,
                                      double cost_cap = 30.0) {
  gx.validate();
  gy.validate();
  gz.validate();
  if (sample.size() == 0) throw ConfigError("build_reference: empty sample");
  if (!(cost_cap > 0.0)) throw ConfigError("build_reference: cost cap must be positive");

  const std::size_t n = gx.count, m = gy.count, l = gz.count;
  std::vector<std::uint64_t> joint(n * m * l, 0);
  std::vector<std::uint64_t> cx(n, 0), cy(m, 0), cz(l, 0);
  for (std::size_t p = 0; p < sample.size(); ++p) {
    const std::size_t i = gx.locate(sample.s1[p]);
    const std::size_t j = gy.locate(sample.s2[p]);
    const std::size_t k = gz.locate(sample.v1[p]);
    ++joint[(i * m + j) * l + k];
    ++cx[i];
    ++cy[j];
    ++cz[k];
  }
  if (detail::count_nonzero(cx) < 2 || detail::count_nonzero(cy) < 2 ||
      detail::count_nonzero(cz) < 2)
    throw DegenerateHistogram(
        "build_reference: an axis has fewer than 2 populated cells; widen or refine the grid");

  const auto total = static_cast<std::uint64_t>(sample.size());
  ReferenceBuild out;
  out.cost_cap = cost_cap;
  out.x_marginal = DiscreteMeasure{gx.centers(), detail::axis_weights(cx, total)};
  out.y_marginal = DiscreteMeasure{gy.centers(), detail::axis_weights(cy, total)};
  out.z_marginal = DiscreteMeasure{gz.centers(), detail::axis_weights(cz, total)};

  std::vector<double> cost(n * m * l, 0.0);
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < l; ++k, ++t) {
        if (joint[t] > 0) {
          // -log(q/(qx qy qz)) with the renormalized axis weights as the
          // product factors, so exp(-c) qx qy qz round-trips to q
          const double q =
              static_cast<double>(joint[t]) / static_cast<double>(total);
          cost[t] = -std::log(q / (out.x_marginal.weights[i] * out.y_marginal.weights[j] *
                                   out.z_marginal.weights[k]));
          ++out.populated_cells;
        } else if (cx[i] > 0 && cy[j] > 0 && cz[k] > 0) {
          cost[t] = cost_cap;
        }
      }
  out.cost = CostTensor({n, m, l}, std::move(cost));
  return out;
}

/// Marginal laws of the noised observations, each histogrammed independently
/// on its own grid. outside_fraction records, per axis, the share of noised
/// points that fell outside the grid (they clip into boundary cells); above
/// mass_outside_warn_level the caller should surface a warning.
struct NoisedMarginals {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  DiscreteMeasure rho;
  std::array<double, 3> outside_fraction{0.0, 0.0, 0.0};

  static constexpr double mass_outside_warn_level = 1e-3;

  bool mass_outside_warning() const {
    return outside_fraction[0] > mass_outside_warn_level ||
           outside_fraction[1] > mass_outside_warn_level ||
           outside_fraction[2] > mass_outside_warn_level;
  }
};

namespace detail {

inline DiscreteMeasure noised_axis(const std::vector<double>& data, double sdev,
                                   const GridSpec& grid, std::uint64_t seed,
                                   double& outside_fraction) {
  NormalSampler normal(seed);
  std::vector<std::uint64_t> counts(grid.count, 0);
  std::uint64_t outside = 0;
  for (double v : data) {
    const double noised = v + sdev * normal();
    if (!grid.contains(noised)) ++outside;
    ++counts[grid.locate(noised)];
  }
  outside_fraction = static_cast<double>(outside) / static_cast<double>(data.size());
  return DiscreteMeasure{grid.centers(),
                         axis_weights(counts, static_cast<std::uint64_t>(data.size()))};
}

}  // namespace detail

/// Adds independent mean-zero Gaussian noise to the three coordinates
/// (scales sigma1 sqrt(t1), sigma2 sqrt(t2), sigma3 sqrt(t1)) and histograms
/// each axis on its grid. Each axis draws from its own derived RNG stream.
inline NoisedMarginals noised_marginals(const PathSample& sample, const NoiseSpec& noise,
                                        const GridSpec& gx, const GridSpec& gy,
                                        const GridSpec& gz, std::uint64_t seed) {
  noise.validate();
  gx.validate();
  gy.validate();
  gz.validate();
  if (sample.size() == 0) throw ConfigError("noised_marginals: empty sample");

  const double st1 = std::sqrt(sample.t1);
  const double st2 = std::sqrt(sample.t2);
  NoisedMarginals out;
  out.mu = detail::noised_axis(sample.s1, noise.sigma1 * st1, gx,
                               detail::derive_seed(seed, 101), out.outside_fraction[0]);
  out.nu = detail::noised_axis(sample.s2, noise.sigma2 * st2, gy,
                               detail::derive_seed(seed, 102), out.outside_fraction[1]);
  out.rho = detail::noised_axis(sample.v1, noise.sigma3 * st1, gz,
                                detail::derive_seed(seed, 103), out.outside_fraction[2]);
  return out;
}

/// Recovers a marginal law from call prices on a uniform strike grid by
/// second finite differences m_i = (C_{i-1} - 2 C_i + C_{i+1}) / delta^2,
/// clipped at zero and renormalized; the result lives on the interior
/// strikes. A second difference below -tolerance means the input prices admit
/// butterfly arbitrage and is rejected.
inline DiscreteMeasure implied_marginal_from_calls(const std::vector<double>& strikes,
                                                   const std::vector<double>& prices,
                                                   double tolerance = 1e-9) {
  if (strikes.size() < 3)
    throw ConfigError("implied_marginal_from_calls: need at least 3 strikes");
  if (strikes.size() != prices.size())
    throw ConfigError("implied_marginal_from_calls: strikes/prices size mismatch");
  const double delta = strikes[1] - strikes[0];
  if (!(delta > 0.0))
    throw ConfigError("implied_marginal_from_calls: strikes must be strictly increasing");
  for (std::size_t i = 1; i + 1 < strikes.size(); ++i) {
    const double step = strikes[i + 1] - strikes[i];
    if (std::abs(step - delta) > 1e-9 * delta)
      throw ConfigError("implied_marginal_from_calls: strike grid must be uniform");
  }

  std::vector<double> points(strikes.begin() + 1, strikes.end() - 1);
  std::vector<double> density(points.size());
  for (std::size_t i = 1; i + 1 < strikes.size(); ++i) {
    const double second = prices[i - 1] - 2.0 * prices[i] + prices[i + 1];
    if (second < -tolerance * std::max(1.0, std::abs(prices[i])))
      throw NonConvexPrices("implied_marginal_from_calls: negative butterfly at strike " +
                            std::to_string(strikes[i]));
    density[i - 1] = std::max(second, 0.0) / (delta * delta);
  }
  const double total = pairwise_sum(density.data(), density.size());
  if (!(total > 0.0))
    throw DegenerateHistogram("implied_marginal_from_calls: prices imply zero mass");
  for (double& v : density) v /= total;
  return DiscreteMeasure{std::move(points), std::move(density)};
}

/// Per-period reference data supplied by the caller when pairing consecutive
/// marginals into one-period instances.
struct PeriodComponents {
  CostTensor cost;
  DiscreteMeasure rho;
};

using PeriodBuilder = std::function<PeriodComponents(
    std::size_t period, const DiscreteMeasure& from, const DiscreteMeasure& to)>;

/// Pairs consecutive marginals into independent one-period instances; the
/// total relative entropy decomposes over periods, so solving each pair on
/// its own is exact. Validation failures are rethrown with the period index.
inline std::vector<ProblemInstance> split_periods(const std::vector<DiscreteMeasure>& marginals,
                                                  const PeriodBuilder& builder) {
  if (marginals.size() < 2)
    throw ConfigError("split_periods: need at least 2 marginals ordered in time");
  std::vector<ProblemInstance> out;
  out.reserve(marginals.size() - 1);
  for (std::size_t p = 0; p + 1 < marginals.size(); ++p) {
    PeriodComponents parts = builder(p, marginals[p], marginals[p + 1]);
    const std::string where = "period " + std::to_string(p) + ": ";
    try {
      ProblemInstance inst(marginals[p], marginals[p + 1], std::move(parts.rho),
                           std::move(parts.cost));
      validate_instance(inst);
      out.push_back(std::move(inst));
    } catch (const InfeasibleSupport& e) {
      throw InfeasibleSupport(where + e.what(), e.report);
    } catch (const MeanMismatch& e) {
      throw MeanMismatch(where + e.what(), e.report);
    } catch (const DegenerateNu& e) {
      throw DegenerateNu(where + e.what(), e.report);
    } catch (const Error& e) {
      throw ConfigError(where + e.what());
    }
  }
  return out;
}

}  // namespace emot
