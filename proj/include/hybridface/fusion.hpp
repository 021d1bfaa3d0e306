#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/mlp.hpp"

namespace hybridface {

// Which vote carried a fused acceptance.
enum class FusedBranch { pca, ica, agreed };

// Why a fused decision turned a probe away.
enum class DenyReason {
    agreed_below_threshold, // branches agreed but at least one score was too weak
    pca_below_threshold,    // branches disagreed, the stronger (PCA) score was too weak
    ica_below_threshold,    // branches disagreed, the stronger (ICA) score was too weak
};

inline const char* fused_branch_name(FusedBranch b) {
    switch (b) {
    case FusedBranch::pca: return "pca";
    case FusedBranch::ica: return "ica";
    default: return "agreed";
    }
}

inline const char* deny_reason_name(DenyReason r) {
    switch (r) {
    case DenyReason::agreed_below_threshold: return "agreed-below-threshold";
    case DenyReason::pca_below_threshold: return "pca-below-threshold";
    default: return "ica-below-threshold";
    }
}

// Acceptance gates for the two branch scores. Scores live in (-1,1), so a
// meaningful threshold does too; the bounds are enforced where configs enter
// the system (CLI, model load), not on every fuse call.
struct FusionConfig {
    double threshold_pca = 0.5;
    double threshold_ica = 0.5;
};

inline void validate_fusion_config(const FusionConfig& cfg) {
    if (!(cfg.threshold_pca > -1.0 && cfg.threshold_pca < 1.0))
        throw ParamError("pca threshold must lie strictly inside (-1,1), got " +
                         std::to_string(cfg.threshold_pca));
    if (!(cfg.threshold_ica > -1.0 && cfg.threshold_ica < 1.0))
        throw ParamError("ica threshold must lie strictly inside (-1,1), got " +
                         std::to_string(cfg.threshold_ica));
}

// The fused verdict on one probe. `class_id`, `score`, and `branch` are
// meaningful only when `accepted`; `reason` only when not.
struct Decision {
    bool accepted = false;
    int class_id = 0;
    double score = 0.0;
    FusedBranch branch = FusedBranch::agreed;
    DenyReason reason = DenyReason::agreed_below_threshold;
};

namespace detail {

inline Decision accept(int class_id, double score, FusedBranch branch) {
    Decision d;
    d.accepted = true;
    d.class_id = class_id;
    d.score = score;
    d.branch = branch;
    return d;
}

inline Decision deny(DenyReason reason) {
    Decision d;
    d.accepted = false;
    d.reason = reason;
    return d;
}

} // namespace detail

// Combine the two branch score vectors into one accept/deny decision.
//
// Each branch votes with its top-scoring class. If the votes agree, the probe
// is accepted only when BOTH scores clear their thresholds. If they disagree,
// the stronger branch's vote stands alone against its own threshold; a score
// tie between disagreeing branches falls to the ICA side. Every threshold
// comparison is strict, so a score exactly at its threshold is turned away.
inline Decision fuse(const ScoreVector& pca_scores, const ScoreVector& ica_scores,
                     const FusionConfig& cfg) {
    if (pca_scores.class_ids != ica_scores.class_ids)
        throw ConfigError("branch score vectors cover different class sets");

    const TopScore top_p = classify_scores(pca_scores);
    const TopScore top_i = classify_scores(ica_scores);

    if (top_p.class_id == top_i.class_id) {
        if (top_p.score > cfg.threshold_pca && top_i.score > cfg.threshold_ica)
            return detail::accept(top_p.class_id, std::max(top_p.score, top_i.score),
                                  FusedBranch::agreed);
        return detail::deny(DenyReason::agreed_below_threshold);
    }
    if (top_p.score > top_i.score) {
        if (top_p.score > cfg.threshold_pca)
            return detail::accept(top_p.class_id, top_p.score, FusedBranch::pca);
        return detail::deny(DenyReason::pca_below_threshold);
    }
    if (top_i.score > cfg.threshold_ica)
        return detail::accept(top_i.class_id, top_i.score, FusedBranch::ica);
    return detail::deny(DenyReason::ica_below_threshold);
}

// One labeled probe held out for threshold calibration: the raw score vectors
// from both branches plus the ground truth. A probe from outside the enrolled
// set carries `known = false`; its correct outcome is denial.
struct ValidationSample {
    ScoreVector pca_scores;
    ScoreVector ica_scores;
    int true_class = 0; // meaningful only when known
    bool known = true;
};

// Pick the threshold pair that maximizes correct decisions on a validation
// slice: an accepted known probe counts when the fused label matches its true
// class, a denied unknown probe always counts, everything else scores zero.
// Ties break toward the lowest pca threshold, then the lowest ica threshold,
// regardless of grid order.
inline FusionConfig calibrate_thresholds(const std::vector<ValidationSample>& samples,
                                         const std::vector<FusionConfig>& grid) {
    if (samples.empty()) throw ParamError("cannot calibrate on an empty validation set");
    if (grid.empty()) throw ParamError("cannot calibrate over an empty threshold grid");

    bool have_best = false;
    FusionConfig best;
    std::size_t best_correct = 0;
    for (const FusionConfig& cfg : grid) {
        std::size_t correct = 0;
        for (const ValidationSample& s : samples) {
            const Decision d = fuse(s.pca_scores, s.ica_scores, cfg);
            if (d.accepted) {
                if (s.known && d.class_id == s.true_class) ++correct;
            } else {
                if (!s.known) ++correct;
            }
        }
        const bool better =
            !have_best || correct > best_correct ||
            (correct == best_correct &&
             (cfg.threshold_pca < best.threshold_pca ||
              (cfg.threshold_pca == best.threshold_pca &&
               cfg.threshold_ica < best.threshold_ica)));
        if (better) {
            have_best = true;
            best = cfg;
            best_correct = correct;
        }
    }
    return best;
}

} // namespace hybridface
