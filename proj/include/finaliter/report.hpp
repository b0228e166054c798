#pragma once

// JSON renderings of the reports produced by the lower-bound, walk and Monte Carlo modules.

#include <cstdint>
#include <string>

#include "json.hpp"

#include "finaliter/lower_bounds.hpp"
#include "finaliter/montecarlo.hpp"
#include "finaliter/walk1d.hpp"

namespace finaliter {

using Json = nlohmann::ordered_json;

/// Fields family, d, T, max_deviation, final_value, bound, pass.
inline Json verification_json(const AdversarialInstance& inst, const TrajectoryReport& report, double bound,
                              bool pass) {
  Json j;
  j["family"] = std::string(family_name(inst.family()));
  j["d"] = inst.dim();
  j["T"] = inst.horizon();
  j["max_deviation"] = report.max_deviation;
  j["final_value"] = report.final_value;
  j["bound"] = bound;
  j["pass"] = pass;
  return j;
}

inline Json instance_json(const AdversarialInstance& inst) {
  Json j;
  j["family"] = std::string(family_name(inst.family()));
  j["d"] = inst.dim();
  j["T"] = inst.horizon();
  j["T_star"] = inst.kick_start();
  j["bound"] = lower_bound_value(inst.family(), inst.dim(), inst.horizon());
  j["a"] = inst.a_table();
  if (!inst.b_table().empty()) j["b"] = inst.b_table();
  return j;
}

inline Json certificate_json(const CertificateReport& r, std::string_view worst_name) {
  Json j;
  j["pass"] = r.pass;
  j[std::string(worst_name)] = r.worst;
  j["witness_x"] = r.witness_x;
  j["witness_y"] = r.witness_y;
  return j;
}

/// Fields n, method, residual, suboptimality, bound_value.
inline Json walk_json(const WalkChain& chain, const StationaryResult& stationary, std::string_view profile,
                      double suboptimality, bool pass) {
  Json j;
  j["n"] = chain.n();
  j["T"] = chain.n() * chain.n();
  j["profile"] = std::string(profile);
  j["method"] = std::string(method_name(stationary.method));
  j["residual"] = stationary.residual;
  j["suboptimality"] = suboptimality;
  j["bound_value"] = stationary_bound(chain.n());
  j["pass"] = pass;
  return j;
}

/// Fields T, trials, seed, mean, se, tail table, fitted rate (null when the fit is not possible).
inline Json monte_carlo_json(const NearlyLinearInstance& inst, const PathStatistics& stats) {
  Json j;
  j["shape"] = std::string(shape_name(inst.shape()));
  j["D"] = inst.D();
  j["G"] = inst.G();
  j["epsilon"] = inst.epsilon();
  j["c"] = inst.c();
  j["T"] = stats.T;
  j["trials"] = stats.trials;
  j["seed"] = stats.seed;
  j["step"] = stats.step;
  j["good_set"] = {{"left", stats.good.left}, {"right", stats.good.right}, {"threshold", stats.good.threshold}};
  const auto est = mean_and_standard_error(stats.final_suboptimality);
  j["mean"] = est.mean;
  j["se"] = est.standard_error;
  j["scaled_mean"] = est.mean / stats.good.threshold;
  j["never_hit"] = stats.never_hit_count();
  Json tail = Json::array();
  for (const auto& row : tail_table(stats, inst)) {
    tail.push_back({{"k", row.k}, {"count", row.count}, {"probability", row.probability}});
  }
  Json rate = nullptr;
  try {
    rate = tail_estimate(stats, inst).rate;
  } catch (const InsufficientDataError&) {
    // left as null
  }
  j["tail"] = tail;
  j["fitted_rate"] = rate;
  return j;
}

}  // namespace finaliter
