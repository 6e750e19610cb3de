#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ergm/error.hpp"
#include "ergm/infer.hpp"
#include "ergm/san.hpp"
#include "ergm/tsv.hpp"

namespace ergm {

struct TargetFit {
  SanResult san;
  FitResult fit;
};

// Fits a model known only through target statistics: anneal a network with
// those statistics, then run MCMLE from it with g_obs set to the targets.
inline TargetFit fit_from_targets(const Network& start, const BoundModel& model, const StatVector& targets,
                                  const McmleControl& ctl, SanConfig san, bool allow_inexact = false) {
  san.targets = targets;
  san.offset_coefs = ctl.offset_coefs;
  ProposalConfig pc;
  pc.kind = ctl.proposal;
  pc.constraints = ctl.constraints;
  TargetFit out{san_run(start, model, san, pc), {}};
  const auto free = model.free_indices();
  StatVector g_obs = out.san.stats;
  for (std::size_t k = 0; k < free.size(); ++k)
    g_obs[static_cast<std::size_t>(free[k])] = targets.size() == free.size() ? targets[k] : targets[static_cast<std::size_t>(free[k])];
  if (!san_exact(out.san, model, targets)) {
    if (!allow_inexact) {
      std::string got;
      for (int k : free) got += (got.empty() ? "" : ",") + format_double(out.san.stats[static_cast<std::size_t>(k)]);
      throw DataError("SAN did not reach the target statistics (achieved " + got + ")");
    }
  }
  out.fit = mcmle_fit(out.san.net, model, ctl, g_obs);
  return out;
}

}  // namespace ergm
