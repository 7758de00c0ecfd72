#pragma once

#include <future>
#include <map>
#include <string>
#include <vector>

#include "psv/ensemble.hpp"
#include "psv/metrics.hpp"
#include "psv/table.hpp"

namespace psv {

/// Truncation-error estimate for a converged steady solution: the steady
/// spatial residual left by plugging the field into the reference scheme's
/// discrete operator. A solution evaluated under its own scheme leaves only
/// the convergence-tolerance footprint (uninformative).
inline GridFunction estimate_truncation(const GridFunction& u, SchemeId reference,
                                        const SolverConfig& base_config) {
  SolverConfig cfg = base_config;
  cfg.scheme = reference;
  return scheme_steady_residual(cfg, u);
}

enum class DefectBase {
  member, ///< invert with each member's own scheme (warm start)
  shared  ///< one shared scheme inverts every member's residual
};

struct DefectOptions {
  SchemeId reference = SchemeId::S2H;
  DefectBase base = DefectBase::member;
  /// Shared inverse operator. It must differ from the truncation reference:
  /// solving the reference's own operator against the reference residual is
  /// an identity and produces a zero estimate.
  SchemeId shared_base = SchemeId::S1;
  double steady_tol = 1e-8;
  long max_steps = 20000;
  /// Entries whose truncation estimate falls below this fraction of the
  /// largest one are flagged degenerate and excluded from superpositions.
  double degenerate_fraction = 1e-6;
  NormOptions norm{ComponentMask::first_n(4), true};
};

struct ErrorBasisEntry {
  GridFunction delta;     ///< truncation estimate (reference-scheme residual)
  GridFunction approx;    ///< approximation-error estimate = corrected - member
  GridFunction corrected; ///< defect-correction solve result
  bool ok = false;        ///< defect solve completed
  bool degenerate = false;
  bool converged = false;
  std::string note;
};

/// Per-scheme approximation-error estimates obtained by defect correction:
/// the reference residual of each member is fed back as a source and the
/// displaced steady solution is recomputed; the displacement estimates the
/// member's approximation error (oriented as member minus exact projection).
struct ErrorBasis {
  Grid grid;
  SchemeId reference = SchemeId::S2H;
  std::vector<std::string> labels; ///< ensemble order
  std::map<std::string, ErrorBasisEntry> entries;

  const ErrorBasisEntry& entry(const std::string& label) const {
    auto it = entries.find(label);
    if (it == entries.end())
      throw validation_error("ErrorBasis: no entry for '" + label + "'");
    return it->second;
  }

  bool usable(const std::string& label) const {
    auto it = entries.find(label);
    return it != entries.end() && it->second.ok && !it->second.degenerate;
  }

  std::vector<std::string> usable_labels() const {
    std::vector<std::string> out;
    for (const std::string& l : labels)
      if (usable(l)) out.push_back(l);
    return out;
  }
};

inline ErrorBasis build_error_basis(const SolutionEnsemble& ensemble,
                                    const SolverConfig& base_config,
                                    const DefectOptions& opt = {}) {
  if (ensemble.members.empty()) throw validation_error("build_error_basis: empty ensemble");
  if (opt.base == DefectBase::shared && opt.shared_base == opt.reference)
    throw validation_error(
        "build_error_basis: shared defect base must differ from the truncation reference");

  ErrorBasis basis;
  basis.grid = ensemble.grid;
  basis.reference = opt.reference;
  basis.labels = ensemble.labels;

  // Truncation estimates first (cheap, serial).
  std::map<std::string, GridFunction> deltas;
  double max_delta_norm = 0.0;
  for (const std::string& label : ensemble.labels) {
    deltas.emplace(label, estimate_truncation(ensemble.member(label), opt.reference, base_config));
    max_delta_norm = std::max(max_delta_norm, l2_norm(deltas.at(label), opt.norm));
  }
  const double floor = std::max(1e-14, opt.degenerate_fraction * max_delta_norm);

  // Defect solves are independent; run them in parallel, assemble in order.
  struct Outcome {
    ErrorBasisEntry entry;
  };
  std::vector<std::future<Outcome>> futures;
  for (const std::string& label : ensemble.labels) {
    const GridFunction& member = ensemble.member(label);
    const GridFunction& delta = deltas.at(label);
    const SchemeId member_scheme = ensemble.provenance.at(label).scheme;
    futures.push_back(std::async(std::launch::async, [&, label, member_scheme]() {
      Outcome out;
      ErrorBasisEntry& e = out.entry;
      e.delta = delta;
      const double dn = l2_norm(delta, opt.norm);
      if (dn < floor) {
        e.degenerate = true;
        e.note = "truncation estimate below degeneracy floor";
        if (member_scheme == opt.reference)
          e.note += " (member equals the reference scheme)";
        return out;
      }
      if (member_scheme == opt.reference)
        e.note = "member equals the reference scheme; residual is only the convergence footprint";
      SolverConfig cfg = base_config;
      cfg.scheme = opt.base == DefectBase::member ? member_scheme : opt.shared_base;
      cfg.init = InitField::given;
      cfg.steady_tol = opt.steady_tol;
      cfg.max_steps = opt.max_steps;
      cfg.record_history = false;
      try {
        SolveResult r = run_scheme_with_source(cfg, &delta, &member);
        e.corrected = std::move(r.field);
        e.approx = subtract(e.corrected, member);
        e.ok = true;
        e.converged = r.log.converged;
        if (!r.log.converged) e.note += (e.note.empty() ? "" : "; ") + r.log.warning;
      } catch (const error& err) {
        e.ok = false;
        e.note += (e.note.empty() ? "" : "; ") + std::string("defect solve failed: ") + err.what();
      }
      return out;
    }));
  }
  for (std::size_t k = 0; k < ensemble.labels.size(); ++k)
    basis.entries.emplace(ensemble.labels[k], std::move(futures[k].get().entry));
  return basis;
}

/// Pairwise angles between the truncation estimates. Zero-norm (degenerate)
/// entries are excluded; their labels are reported separately.
struct TruncationAngles {
  LabeledMatrix table;
  std::vector<std::string> excluded;
};

inline TruncationAngles truncation_angle_table(const ErrorBasis& basis,
                                               const NormOptions& norm = {}) {
  std::vector<std::string> included;
  TruncationAngles out;
  for (const std::string& l : basis.labels) {
    auto it = basis.entries.find(l);
    if (it == basis.entries.end()) continue;
    if (l2_norm(it->second.delta, norm) > 0.0 && !it->second.degenerate)
      included.push_back(l);
    else
      out.excluded.push_back(l);
  }
  if (included.size() < 2)
    throw estimator_error("truncation_angle_table: needs at least two nonzero entries");
  out.table = LabeledMatrix::zeros(included);
  for (std::size_t a = 0; a < included.size(); ++a)
    for (std::size_t b = a + 1; b < included.size(); ++b) {
      const double ang = angle_between(basis.entries.at(included[a]).delta,
                                       basis.entries.at(included[b]).delta, norm);
      out.table.values[a][b] = ang;
      out.table.values[b][a] = ang;
    }
  return out;
}

} // namespace psv
