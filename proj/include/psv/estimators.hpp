#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psv/defect.hpp"
#include "psv/ensemble.hpp"
#include "psv/metrics.hpp"
#include "psv/table.hpp"

namespace psv {

inline double effectivity_index(double estimate, double true_norm) {
  if (!(true_norm > 0.0))
    throw estimator_error("effectivity_index: true error norm must be positive");
  return estimate / true_norm;
}

struct EstimateRow {
  std::string label;
  std::optional<double> estimate;
  std::optional<double> true_norm;
  std::optional<double> i_eff;
  std::string note;
};

/// Result of one estimator applied to an ensemble: per-member estimates,
/// optional truth columns, and the pairwise tables the method consumed.
struct EstimateReport {
  std::string method;
  std::vector<EstimateRow> rows;
  std::optional<LabeledMatrix> distances;
  std::optional<LabeledMatrix> approx_angles;     ///< angles between error estimates
  std::optional<LabeledMatrix> truncation_angles; ///< angles between truncation estimates
  std::optional<LabeledMatrix> bound_matrix;      ///< pairwise angle-method bounds
  std::string verdict;  ///< triangle method: "ordering detected" / "no ordering"
  std::string outlier;  ///< triangle method: most distant member
  std::map<std::string, std::string> metadata;
};

inline LabeledMatrix pairwise_distances(const SolutionEnsemble& ens, const NormOptions& norm) {
  LabeledMatrix m = LabeledMatrix::zeros(ens.labels);
  for (std::size_t a = 0; a < ens.labels.size(); ++a)
    for (std::size_t b = a + 1; b < ens.labels.size(); ++b) {
      const double d =
          distance(ens.member(ens.labels[a]), ens.member(ens.labels[b]), norm);
      m.values[a][b] = d;
      m.values[b][a] = d;
    }
  return m;
}

struct EnsembleWidth {
  double d_max = 0.0;
  std::string label_a, label_b; ///< lexicographically ordered argmax pair
  LabeledMatrix distances;
};

/// Maximum pairwise distance over the ensemble. Ties break toward the
/// lexicographically smallest pair.
inline EnsembleWidth ensemble_width(const SolutionEnsemble& ens, const NormOptions& norm = {}) {
  if (ens.size() < 2) throw estimator_error("ensemble_width: needs at least two members");
  EnsembleWidth w;
  w.distances = pairwise_distances(ens, norm);
  std::vector<std::string> sorted = ens.labels;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t a = 0; a < sorted.size(); ++a)
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      const double d = w.distances.at(sorted[a], sorted[b]);
      if (d > w.d_max) {
        w.d_max = d;
        w.label_a = sorted[a];
        w.label_b = sorted[b];
      }
    }
  if (w.label_a.empty()) { // all-zero distances
    w.label_a = sorted[0];
    w.label_b = sorted[1];
  }
  return w;
}

/// The ensemble width postulated as a common error majorant for every member.
inline EstimateReport width_estimate(const SolutionEnsemble& ens, const NormOptions& norm = {},
                                     const GridFunction* truth = nullptr) {
  const EnsembleWidth w = ensemble_width(ens, norm);
  EstimateReport rep;
  rep.method = "width";
  rep.distances = w.distances;
  rep.metadata["d_max"] = std::to_string(w.d_max);
  rep.metadata["argmax_pair"] = w.label_a + "," + w.label_b;
  for (const std::string& label : ens.labels) {
    EstimateRow row;
    row.label = label;
    row.estimate = w.d_max;
    if (truth) {
      const double t = distance(ens.member(label), *truth, norm);
      row.true_norm = t;
      if (t > 0.0) {
        row.i_eff = effectivity_index(w.d_max, t);
      } else {
        row.note = "zero true error; effectivity undefined";
      }
      if (w.d_max == 0.0 && t > 0.0) row.note = "zero width against nonzero error";
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

/// Distance-cluster analysis: if one member is at least `threshold` times
/// farther from everyone than the rest are from each other, its distances
/// majorize the other members' errors.
inline EstimateReport triangle_estimate(const SolutionEnsemble& ens,
                                        const NormOptions& norm = {},
                                        const GridFunction* truth = nullptr,
                                        double threshold = 2.0) {
  if (ens.size() < 3)
    throw estimator_error("triangle_estimate: needs at least three members");
  EstimateReport rep;
  rep.method = "triangle";
  rep.distances = pairwise_distances(ens, norm);
  rep.metadata["threshold"] = std::to_string(threshold);

  std::vector<std::string> sorted = ens.labels;
  std::sort(sorted.begin(), sorted.end());

  // Outlier: member maximizing the minimum distance to the others.
  std::string outlier;
  double best_mindist = -1.0;
  for (const std::string& cand : sorted) {
    double mind = std::numeric_limits<double>::infinity();
    for (const std::string& other : sorted)
      if (other != cand) mind = std::min(mind, rep.distances->at(cand, other));
    if (mind > best_mindist) {
      best_mindist = mind;
      outlier = cand;
    }
  }
  double rest_max = 0.0;
  for (std::size_t a = 0; a < sorted.size(); ++a)
    for (std::size_t b = a + 1; b < sorted.size(); ++b)
      if (sorted[a] != outlier && sorted[b] != outlier)
        rest_max = std::max(rest_max, rep.distances->at(sorted[a], sorted[b]));

  rep.outlier = outlier;
  rep.metadata["outlier_min_distance"] = std::to_string(best_mindist);
  rep.metadata["rest_max_distance"] = std::to_string(rest_max);

  const bool ordered = best_mindist >= threshold * rest_max && rest_max >= 0.0;
  rep.verdict = ordered ? "ordering detected" : "no ordering";
  if (!ordered) return rep;

  for (const std::string& label : ens.labels) {
    EstimateRow row;
    row.label = label;
    if (label == outlier) {
      row.note = "outlier; serves as the majorant source";
    } else {
      row.estimate = rep.distances->at(outlier, label);
    }
    if (truth) {
      const double t = distance(ens.member(label), *truth, norm);
      row.true_norm = t;
      if (row.estimate && t > 0.0) row.i_eff = effectivity_index(*row.estimate, t);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

/// Error-norm bound from the distance between two solutions and the angle
/// between their errors: 1.1 * ||u1 - u2|| / sin(alpha / 2).
inline double angle_estimate(const GridFunction& u1, const GridFunction& u2, double alpha,
                             const NormOptions& norm = {}) {
  if (!(alpha > 0.0) || !(alpha < pi))
    throw estimator_error("angle_estimate: angle must lie in (0, pi); the bound diverges "
                          "for parallel errors");
  const double d = distance(u1, u2, norm);
  if (d == 0.0) throw estimator_error("angle_estimate: identical solutions");
  return 1.1 * d / std::sin(0.5 * alpha);
}

/// Conservative error-angle guess from the truncation angle: alpha = beta / 3.
inline double alpha_from_beta(const ErrorBasis& basis, const std::string& label_a,
                              const std::string& label_b, const NormOptions& norm = {}) {
  for (const std::string& l : {label_a, label_b}) {
    if (!basis.entries.count(l))
      throw estimator_error("alpha_from_beta: no basis entry for '" + l + "'");
    if (l2_norm(basis.entries.at(l).delta, norm) == 0.0)
      throw estimator_error("alpha_from_beta: zero truncation estimate for '" + l + "'");
  }
  const double beta =
      angle_between(basis.entries.at(label_a).delta, basis.entries.at(label_b).delta, norm);
  return beta / 3.0;
}

struct SuperpositionOptions {
  double angle_tol = deg2rad(2.0); ///< acceptance window around 90 degrees
  long max_iters = 10000;
  double tau0 = 0.0; ///< initial descent step; <= 0 selects the scale-based default
  NormOptions norm;
  /// Basis members to superpose (defaults to every usable entry except the
  /// center). Order defines the weight vector layout.
  std::vector<std::string> basis_labels;
};

/// Hypersphere solution: a center solution and a radius that encloses the
/// exact solution's grid projection when the superposed error is orthogonal
/// to the center's error.
struct PragerSyngeSolution {
  std::string center_label;
  GridFunction center;
  double radius = 0.0;
  std::map<std::string, double> weights;
  double achieved_angle_phi = 0.0;
  long iterations = 0;
  bool converged = false;
  std::string failure;
};

/// Searches for superposition weights (summing to one) that make the
/// superposed error estimate orthogonal to the center member's error
/// estimate, by normalized steepest descent on half the squared projection.
inline PragerSyngeSolution orthogonal_superposition(const ErrorBasis& basis,
                                                    const SolutionEnsemble& ens,
                                                    const std::string& basic_label,
                                                    const SuperpositionOptions& opt = {}) {
  if (!ens.members.count(basic_label))
    throw estimator_error("orthogonal_superposition: '" + basic_label + "' not in ensemble");
  if (!basis.usable(basic_label))
    throw estimator_error("orthogonal_superposition: no usable error estimate for center '" +
                          basic_label + "'");

  std::vector<std::string> labels = opt.basis_labels;
  if (labels.empty()) {
    for (const std::string& l : basis.usable_labels())
      if (l != basic_label) labels.push_back(l);
  } else {
    for (const std::string& l : labels) {
      if (l == basic_label)
        throw estimator_error("orthogonal_superposition: center cannot be a basis member");
      if (!basis.usable(l))
        throw estimator_error("orthogonal_superposition: basis member '" + l +
                              "' has no usable estimate");
      if (!ens.members.count(l))
        throw estimator_error("orthogonal_superposition: basis member '" + l +
                              "' not in ensemble");
    }
  }
  const std::size_t n = labels.size();
  if (n < 2)
    throw estimator_error("orthogonal_superposition: needs at least two basis members "
                          "besides the center");

  const GridFunction& d0 = basis.entry(basic_label).approx;
  const double n0 = l2_norm(d0, opt.norm);
  if (n0 == 0.0)
    throw estimator_error("orthogonal_superposition: center error estimate has zero norm");

  // All field work happens once, up front.
  std::vector<double> g(n);     // (d0, dk)
  std::vector<std::vector<double>> G(n, std::vector<double>(n)); // (dk, dm)
  double max_nk2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const GridFunction& dk = basis.entry(labels[k]).approx;
    g[k] = dot(d0, dk, opt.norm);
    for (std::size_t m2 = 0; m2 <= k; ++m2) {
      const double v = dot(dk, basis.entry(labels[m2]).approx, opt.norm);
      G[k][m2] = v;
      G[m2][k] = v;
    }
    max_nk2 = std::max(max_nk2, G[k][k]);
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  double tau = opt.tau0 > 0.0 ? opt.tau0 : 1.0 / (n0 * n0 * max_nk2 + 1e-30);

  auto projection = [&](const std::vector<double>& wv) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += wv[k] * g[k];
    return s; // (d0, sum_k w_k d_k)
  };
  auto superposed_norm2 = [&](const std::vector<double>& wv) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t m2 = 0; m2 < n; ++m2) s += wv[k] * G[k][m2] * wv[m2];
    return std::max(s, 0.0);
  };
  auto phi_of = [&](const std::vector<double>& wv) {
    const double den = n0 * std::sqrt(superposed_norm2(wv));
    if (den == 0.0) return 0.0; // degenerate superposition, maximally non-orthogonal
    return std::acos(std::clamp(projection(wv) / den, -1.0, 1.0));
  };

  PragerSyngeSolution sol;
  sol.center_label = basic_label;
  sol.iterations = 0;

  double eps = 0.5 * projection(w) * projection(w);
  double phi = phi_of(w);
  bool converged = std::abs(phi - 0.5 * pi) < opt.angle_tol;
  std::string failure;

  for (long it = 0; it < opt.max_iters && !converged; ++it) {
    sol.iterations = it + 1;
    const double s = projection(w);
    std::vector<double> cand(n);
    for (std::size_t k = 0; k < n; ++k) cand[k] = w[k] - tau * s * g[k];
    double sum = 0.0;
    for (double c : cand) sum += c;
    if (std::abs(sum) < 1e-10) {
      failure = "weight normalization sum vanished";
      break;
    }
    for (double& c : cand) c /= sum;
    const double s_cand = projection(cand);
    const double eps_cand = 0.5 * s_cand * s_cand;
    if (eps_cand < eps) {
      w = cand;
      eps = eps_cand;
      tau *= 1.2;
      phi = phi_of(w);
      converged = std::abs(phi - 0.5 * pi) < opt.angle_tol;
    } else {
      tau *= 0.5;
      if (tau < 1e-300) {
        failure = "descent step underflow before reaching orthogonality";
        break;
      }
    }
  }

  sol.center = ens.member(basic_label);
  for (std::size_t k = 0; k < n; ++k) sol.weights[labels[k]] = w[k];
  sol.achieved_angle_phi = phi;
  sol.converged = converged;
  if (!converged && failure.empty())
    failure = "orthogonality not reached within the iteration cap";
  sol.failure = converged ? "" : failure;

  // Radius from the actual superposed field, recomputable from the stored
  // weights and members.
  GridFunction u_perp(sol.center.grid, sol.center.ncomp, 0.0);
  for (std::size_t k = 0; k < n; ++k) add_scaled(u_perp, w[k], ens.member(labels[k]));
  sol.radius = distance(sol.center, u_perp, opt.norm);
  return sol;
}

struct PragerSyngeSweep {
  PragerSyngeSolution selected; ///< maximum radius over converged centers
  std::vector<PragerSyngeSolution> tries;
  EstimateReport report;
};

/// Runs the orthogonal superposition with every eligible member as the
/// center, selects the maximum radius, and reports per-center radii and
/// effectivity indices.
inline PragerSyngeSweep prager_synge_solution(const ErrorBasis& basis,
                                              const SolutionEnsemble& ens,
                                              const SuperpositionOptions& opt = {},
                                              const GridFunction* truth = nullptr) {
  PragerSyngeSweep sweep;
  sweep.report.method = "prager_synge";

  std::vector<std::string> failures;
  for (const std::string& center : ens.labels) {
    if (!basis.usable(center)) {
      failures.push_back(center + ": no usable error estimate");
      EstimateRow row;
      row.label = center;
      row.note = "skipped: no usable error estimate";
      sweep.report.rows.push_back(std::move(row));
      continue;
    }
    SuperpositionOptions o = opt;
    if (!opt.basis_labels.empty()) {
      // Keep the requested basis, dropping the center itself if present.
      o.basis_labels.clear();
      for (const std::string& l : opt.basis_labels)
        if (l != center) o.basis_labels.push_back(l);
    }
    PragerSyngeSolution try_sol;
    try {
      try_sol = orthogonal_superposition(basis, ens, center, o);
    } catch (const error& e) {
      failures.push_back(center + ": " + e.what());
      EstimateRow row;
      row.label = center;
      row.note = std::string("failed: ") + e.what();
      sweep.report.rows.push_back(std::move(row));
      continue;
    }

    EstimateRow row;
    row.label = center;
    row.estimate = try_sol.radius;
    if (truth) {
      const double t = distance(ens.member(center), *truth, opt.norm);
      row.true_norm = t;
      if (t > 0.0) row.i_eff = effectivity_index(try_sol.radius, t);
    }
    if (!try_sol.converged) {
      row.note = "not converged: " + try_sol.failure;
      failures.push_back(center + ": " + try_sol.failure);
    }
    sweep.report.rows.push_back(std::move(row));
    sweep.tries.push_back(std::move(try_sol));
  }

  // Maximum radius over converged centers; ties break lexicographically.
  int best = -1;
  for (std::size_t k = 0; k < sweep.tries.size(); ++k) {
    if (!sweep.tries[k].converged) continue;
    if (best < 0 || sweep.tries[k].radius > sweep.tries[best].radius ||
        (sweep.tries[k].radius == sweep.tries[best].radius &&
         sweep.tries[k].center_label < sweep.tries[best].center_label))
      best = static_cast<int>(k);
  }

  if (best < 0) {
    std::string msg = "prager_synge_solution: every center failed:";
    for (const std::string& f : failures) msg += "\n  " + f;
    throw estimator_error(msg);
  }
  sweep.selected = sweep.tries[best];
  sweep.report.metadata["selected_center"] = sweep.selected.center_label;
  sweep.report.metadata["selected_radius"] = std::to_string(sweep.selected.radius);
  return sweep;
}

} // namespace psv
