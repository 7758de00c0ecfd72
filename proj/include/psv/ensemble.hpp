#pragma once

#include <future>
#include <map>
#include <string>
#include <vector>

#include "psv/solver.hpp"

namespace psv {

/// Outcome record of one ensemble member run.
struct MemberRecord {
  SchemeId scheme = SchemeId::S1;
  bool ok = false;         ///< field present (run completed without divergence)
  bool converged = false;
  long steps = 0;
  double final_residual = 0.0;
  long positivity_fallback_cells = 0;
  std::string error; ///< divergence/validation message when !ok
};

/// Labeled steady solutions from independent schemes on one shared grid.
/// Solver ensembles carry conserved states (ncomp 4); synthetic test
/// ensembles may carry scalars.
struct SolutionEnsemble {
  Grid grid;
  int ncomp = 4;
  std::vector<std::string> labels;               ///< insertion order
  std::map<std::string, GridFunction> members;
  std::map<std::string, MemberRecord> provenance;

  const GridFunction& member(const std::string& label) const {
    auto it = members.find(label);
    if (it == members.end())
      throw validation_error("ensemble: no member labeled '" + label + "'");
    return it->second;
  }

  std::size_t size() const { return members.size(); }

  void insert(const std::string& label, GridFunction field, MemberRecord rec = {}) {
    if (members.count(label))
      throw validation_error("ensemble: duplicate label '" + label + "'");
    if (!(field.grid == grid) || field.ncomp != ncomp)
      throw validation_error("ensemble: member '" + label + "' is not on the shared grid");
    labels.push_back(label);
    members.emplace(label, std::move(field));
    provenance.emplace(label, std::move(rec));
  }
};

/// Runs every config and collects the surviving members. Configs must share
/// grid, gas and pattern; labels are the scheme labels. Member failures are
/// recorded without aborting the rest. Runs execute in parallel; insertion
/// order (and every output bit) is independent of the schedule.
inline SolutionEnsemble run_ensemble(const std::vector<SolverConfig>& configs) {
  if (configs.empty()) throw validation_error("run_ensemble: no configs");
  for (const SolverConfig& c : configs) {
    if (!(c.grid == configs.front().grid))
      throw validation_error("run_ensemble: mixed grids");
    if (c.gas.gamma != configs.front().gas.gamma)
      throw validation_error("run_ensemble: mixed gas models");
  }
  {
    std::vector<std::string> seen;
    for (const SolverConfig& c : configs) {
      const std::string l = scheme_label(c.scheme);
      for (const std::string& s : seen)
        if (s == l) throw validation_error("run_ensemble: duplicate scheme label " + l);
      seen.push_back(l);
    }
  }

  struct Outcome {
    MemberRecord rec;
    GridFunction field;
  };
  std::vector<std::future<Outcome>> futures;
  futures.reserve(configs.size());
  for (const SolverConfig& cfg : configs) {
    futures.push_back(std::async(std::launch::async, [cfg]() {
      Outcome out;
      out.rec.scheme = cfg.scheme;
      try {
        SolveResult r = run_scheme(cfg);
        out.rec.ok = true;
        out.rec.converged = r.log.converged;
        out.rec.steps = r.log.steps;
        out.rec.final_residual = r.log.final_residual;
        out.rec.positivity_fallback_cells = r.log.positivity_fallback_cells;
        out.field = std::move(r.field);
      } catch (const error& e) {
        out.rec.ok = false;
        out.rec.error = e.what();
      }
      return out;
    }));
  }

  SolutionEnsemble ens;
  ens.grid = configs.front().grid;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    Outcome out = futures[k].get();
    const std::string label = scheme_label(configs[k].scheme);
    if (out.rec.ok) {
      ens.insert(label, std::move(out.field), std::move(out.rec));
    } else {
      ens.provenance.emplace(label, std::move(out.rec));
    }
  }
  if (ens.members.empty()) throw estimator_error("run_ensemble: every member failed");
  return ens;
}

} // namespace psv
