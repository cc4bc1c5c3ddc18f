#pragma once

#include "relucert/bounds.hpp"
#include "relucert/network.hpp"
#include "relucert/propagate.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace relucert {

enum class Outcome { Verified, Falsified, Undecided };

struct Verdict {
    Outcome outcome = Outcome::Undecided;
    /// Largest certified upper bound over adversary margins z_j - z_t; for a
    /// falsified instance, the concrete margin at the witness. Negative iff Verified.
    double distance_to_verify = 0.0;
    std::map<int, double> margins; // j -> certified UB of z_j - z_t
    std::optional<Vec> witness;
    double attack_ms = 0.0;
    double lp_stage_ms = 0.0;
    double pmilp_stage_ms = 0.0;
};

struct AttackConfig {
    int steps = 100;
    int restarts = 10;
    double step_size = 0.0; // 0 -> epsilon / 10
    std::uint64_t seed = 1;
};

struct VerifyConfig {
    PropagationConfig prop;
    AttackConfig attack;
};

/// Projected gradient ascent on max_{j != t} (z_j - z_t) with random restarts;
/// any returned witness has been re-checked by a concrete forward pass.
std::optional<Vec> attack(const Network& net, const InputRegion& region,
                          const RobustnessProperty& property, const AttackConfig& cfg);

/// Staged verdict: attack, LP-margin certification, then pMILP certification
/// with per-margin SAS-selected open sets. The center must classify as the true label.
Verdict verify(const Network& net, const InputRegion& region, const RobustnessProperty& property,
               const VerifyConfig& cfg);

struct EpsilonSearchResult {
    std::optional<double> certified_eps;
    std::optional<double> falsified_eps;
    double lo = 0.0;
    double hi = 0.0;
};

/// Bisection over epsilon; Undecided probes shrink only the certified side.
EpsilonSearchResult epsilon_search(const Network& net, const Vec& center, const Vec& clip_lo,
                                   const Vec& clip_hi, const RobustnessProperty& property,
                                   const VerifyConfig& cfg, double eps_hi, int iters,
                                   double eps_lo = 0.0);

const char* to_string(Outcome o);

} // namespace relucert
