#include "relucert/pipeline.hpp"

#include "relucert/milp.hpp"
#include "relucert/parallel.hpp"
#include "relucert/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace relucert {

const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::Verified: return "verified";
    case Outcome::Falsified: return "falsified";
    case Outcome::Undecided: return "undecided";
    }
    return "?";
}

namespace {

double best_adverse_margin(const Vec& out, int t, int* who = nullptr) {
    double best = -kInf;
    for (int j = 0; j < static_cast<int>(out.size()); ++j) {
        if (j == t)
            continue;
        double m = out[static_cast<std::size_t>(j)] - out[static_cast<std::size_t>(t)];
        if (m > best) {
            best = m;
            if (who)
                *who = j;
        }
    }
    return best;
}

} // namespace

std::optional<Vec> attack(const Network& net, const InputRegion& region,
                          const RobustnessProperty& property, const AttackConfig& cfg) {
    region.validate();
    const int t = property.true_label;
    if (t < 0 || t >= net.output_dim())
        throw Error("true_label out of range");
    if (net.output_dim() < 2)
        return std::nullopt; // no adversary class exists

    Vec lo = region.effective_lo(), hi = region.effective_hi();
    double step = cfg.step_size > 0.0 ? cfg.step_size : region.epsilon / 10.0;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto clamp_box = [&](Vec& x) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::min(hi[i], std::max(lo[i], x[i]));
    };
    auto confirmed = [&](const Vec& x) {
        return argmax(forward(net, x).output()) != t && region.contains(x, 1e-12);
    };

    for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
        Vec x(lo.size());
        if (r == 0) {
            x = region.center;
            clamp_box(x);
        } else {
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = lo[i] + (hi[i] - lo[i]) * uni(rng);
        }
        for (int s = 0; s <= cfg.steps; ++s) {
            int j = -1;
            Vec out = forward(net, x).output();
            double margin = best_adverse_margin(out, t, &j);
            if (margin > 0.0 && confirmed(x))
                return x;
            if (s == cfg.steps || step <= 0.0)
                break;
            Vec coeffs(out.size(), 0.0);
            coeffs[static_cast<std::size_t>(j)] = 1.0;
            coeffs[static_cast<std::size_t>(t)] = -1.0;
            Vec g = gradient(net, x, coeffs);
            for (std::size_t i = 0; i < x.size(); ++i) {
                double d = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
                x[i] += step * d;
            }
            clamp_box(x);
        }
        if (step <= 0.0)
            break; // point region: one probe suffices
    }
    return std::nullopt;
}

namespace {

struct MarginPass {
    std::map<int, double> margins;
    double worst = -kInf;
    bool all_certified = true;
};

// Certified UB of z_j - z_t for every adversary j, with X selected per margin row.
MarginPass certify_margins(const Network& net, const InputRegion& region, const BoundsMap& below,
                           int t, const PropagationConfig& cfg, bool use_open_sets) {
    const int L = net.num_layers();
    MilpModel base = build_model(net, region, below, {}, L);

    std::vector<int> adversaries;
    for (int j = 0; j < net.output_dim(); ++j)
        if (j != t)
            adversaries.push_back(j);

    std::vector<double> ubs(adversaries.size(), kInf);
    parallel_for(static_cast<int>(adversaries.size()), cfg.workers, [&](int ai) {
        int j = adversaries[static_cast<std::size_t>(ai)];
        LayerObjective target{L, {{j, 1.0}, {t, -1.0}}};
        MilpConfig mcfg;
        mcfg.mip_gap = cfg.mip_gap;
        mcfg.timeout_s = cfg.timeout_s;
        OpenSet x;
        if (use_open_sets) {
            int k_min = cfg.k_min_for_layer(L, L);
            SasResult sas = score_sas(net, below, target, Sense::Max, base);
            x = select_open_set(sas.table, k_min, cfg.extra, cfg.threshold);
            ScoreTable order = score_gs(net, below, target, ScoreMethod::GsFsb);
            std::stable_sort(x.begin(), x.end(), [&](NeuronId a, NeuronId b) {
                double sa = order.at_or_zero(a), sb = order.at_or_zero(b);
                if (sa != sb)
                    return sa > sb;
                return a < b;
            });
        }
        mcfg.branch_order = x;
        MilpResult res;
        if (use_open_sets) {
            MilpModel model = build_model(net, region, below, x, L);
            res = solve_milp(model, target, Sense::Max, mcfg);
        } else {
            res = solve_milp(base, target, Sense::Max, mcfg);
        }
        ubs[static_cast<std::size_t>(ai)] = res.safe_bound;
    });

    MarginPass pass;
    for (std::size_t ai = 0; ai < adversaries.size(); ++ai) {
        pass.margins[adversaries[ai]] = ubs[ai];
        pass.worst = std::max(pass.worst, ubs[ai]);
        if (!(ubs[ai] < 0.0))
            pass.all_certified = false;
    }
    return pass;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

Verdict verify(const Network& net, const InputRegion& region, const RobustnessProperty& property,
               const VerifyConfig& cfg) {
    region.validate();
    const int t = property.true_label;
    if (t < 0 || t >= net.output_dim())
        throw Error("true_label out of range");
    if (argmax(forward(net, region.center).output()) != t)
        throw Error("the center input is not classified as the true label");

    Verdict v;
    const int L = net.num_layers();

    auto t0 = std::chrono::steady_clock::now();
    if (auto w = attack(net, region, property, cfg.attack)) {
        v.attack_ms = ms_since(t0);
        v.outcome = Outcome::Falsified;
        v.witness = *w;
        v.distance_to_verify = best_adverse_margin(forward(net, *w).output(), t);
        return v;
    }
    v.attack_ms = ms_since(t0);

    // Stage 2: LP-only certification.
    t0 = std::chrono::steady_clock::now();
    PropagationConfig lp_cfg = cfg.prop;
    lp_cfg.method = Method::Lp;
    BoundsMap lp_bounds = pmilp_bounds(net, region, lp_cfg, L - 1);
    MarginPass lp_pass = certify_margins(net, region, lp_bounds, t, lp_cfg, false);
    v.lp_stage_ms = ms_since(t0);
    if (lp_pass.all_certified) {
        v.outcome = Outcome::Verified;
        v.margins = lp_pass.margins;
        v.distance_to_verify = lp_pass.worst;
        return v;
    }

    // Stage 3: pMILP certification.
    t0 = std::chrono::steady_clock::now();
    PropagationConfig pm_cfg = cfg.prop;
    if (pm_cfg.method == Method::Box || pm_cfg.method == Method::Lp)
        pm_cfg.method = Method::Pmilp;
    BoundsMap pm_bounds = pmilp_bounds(net, region, pm_cfg, L - 1);
    MarginPass pm_pass = certify_margins(net, region, pm_bounds, t, pm_cfg, true);
    v.pmilp_stage_ms = ms_since(t0);
    v.margins = pm_pass.margins;
    v.distance_to_verify = pm_pass.worst;
    v.outcome = pm_pass.all_certified ? Outcome::Verified : Outcome::Undecided;
    return v;
}

EpsilonSearchResult epsilon_search(const Network& net, const Vec& center, const Vec& clip_lo,
                                   const Vec& clip_hi, const RobustnessProperty& property,
                                   const VerifyConfig& cfg, double eps_hi, int iters,
                                   double eps_lo) {
    if (!(eps_hi > 0.0))
        throw Error("epsilon_search needs eps_hi > 0");
    EpsilonSearchResult res;
    res.lo = eps_lo;
    res.hi = eps_hi;
    for (int it = 0; it < iters; ++it) {
        double mid = 0.5 * (res.lo + res.hi);
        InputRegion region{center, mid, clip_lo, clip_hi};
        Verdict v = verify(net, region, property, cfg);
        switch (v.outcome) {
        case Outcome::Verified:
            res.certified_eps = mid;
            res.lo = mid;
            break;
        case Outcome::Falsified:
            res.falsified_eps = mid;
            res.hi = mid;
            break;
        case Outcome::Undecided:
            res.hi = mid; // only the certified side of the bracket shrinks
            break;
        }
    }
    return res;
}

} // namespace relucert
