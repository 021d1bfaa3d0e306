#include "hybridface/fusion.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

using namespace hybridface;

namespace {

// Score vector over an explicit class set: `label` gets `score`, every other
// class a filler strictly below any value the tests use, so the argmax is
// always the intended vote.
ScoreVector vote_over(const std::vector<int>& ids, int label, double score) {
    ScoreVector sv;
    sv.class_ids = ids;
    sv.scores.assign(ids.size(), -0.95);
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == label) sv.scores[i] = score;
    return sv;
}

// Two-class shorthand used by the grid sweeps.
ScoreVector vote(int label, double score) { return vote_over({0, 1}, label, score); }

// Hand transcription of the published decision procedure, kept deliberately
// independent of fuse(): agreement needs both scores past their gates; on
// disagreement the stronger branch stands alone, with score ties falling to
// the ICA side; every comparison is strict.
struct HandOutcome {
    bool accepted = false;
    int label = 0;
    std::string tag; // branch name when accepted, deny reason when not
};

HandOutcome hand_rule(int l_p, double s_p, int l_i, double s_i, double t_p, double t_i) {
    if (l_p == l_i) {
        if (s_p > t_p && s_i > t_i) return {true, l_p, "agreed"};
        return {false, 0, "agreed-below-threshold"};
    }
    if (s_p > s_i) {
        if (s_p > t_p) return {true, l_p, "pca"};
        return {false, 0, "pca-below-threshold"};
    }
    if (s_i > t_i) return {true, l_i, "ica"};
    return {false, 0, "ica-below-threshold"};
}

std::string tag_of(const Decision& d) {
    return d.accepted ? fused_branch_name(d.branch) : deny_reason_name(d.reason);
}

void expect_same_decision(const Decision& a, const Decision& b) {
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(tag_of(a), tag_of(b));
    if (a.accepted && b.accepted) {
        EXPECT_EQ(a.class_id, b.class_id);
        EXPECT_EQ(a.score, b.score);
    }
}

TEST(Fuse, HandCasesAgreementAndDisagreement) {
    const std::vector<int> ids{2, 3, 5};
    const FusionConfig cfg{0.5, 0.5};

    // agreement with both scores past the gates is accepted as AGREED
    Decision d = fuse(vote_over(ids, 3, 0.9), vote_over(ids, 3, 0.8), cfg);
    EXPECT_TRUE(d.accepted);
    EXPECT_EQ(d.class_id, 3);
    EXPECT_EQ(d.branch, FusedBranch::agreed);
    EXPECT_DOUBLE_EQ(d.score, 0.9);

    // agreement with one weak score is still turned away
    d = fuse(vote_over(ids, 3, 0.9), vote_over(ids, 3, 0.4), cfg);
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::agreed_below_threshold);

    // disagreement, PCA stronger and past its gate
    d = fuse(vote_over(ids, 2, 0.7), vote_over(ids, 5, 0.6), cfg);
    EXPECT_TRUE(d.accepted);
    EXPECT_EQ(d.class_id, 2);
    EXPECT_EQ(d.branch, FusedBranch::pca);
    EXPECT_DOUBLE_EQ(d.score, 0.7);

    // disagreement, ICA stronger and past its gate
    d = fuse(vote_over(ids, 2, 0.4), vote_over(ids, 5, 0.6), cfg);
    EXPECT_TRUE(d.accepted);
    EXPECT_EQ(d.class_id, 5);
    EXPECT_EQ(d.branch, FusedBranch::ica);
    EXPECT_DOUBLE_EQ(d.score, 0.6);
}

TEST(Fuse, ScoreTieBetweenDisagreeingBranchesFallsToIca) {
    const std::vector<int> ids{2, 5};
    const FusionConfig cfg{0.5, 0.5};

    Decision d = fuse(vote_over(ids, 2, 0.7), vote_over(ids, 5, 0.7), cfg);
    EXPECT_TRUE(d.accepted);
    EXPECT_EQ(d.class_id, 5);
    EXPECT_EQ(d.branch, FusedBranch::ica);

    // the tie routes through the ICA gate even when only the PCA gate would pass
    d = fuse(vote_over(ids, 2, 0.7), vote_over(ids, 5, 0.7), FusionConfig{0.5, 0.75});
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::ica_below_threshold);
}

TEST(Fuse, ScoreExactlyAtItsThresholdIsDenied) {
    // agreement, PCA score sits exactly on its gate
    Decision d = fuse(vote(1, 0.5), vote(1, 0.9), FusionConfig{0.5, 0.0});
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::agreed_below_threshold);

    // agreement, ICA score sits exactly on its gate
    d = fuse(vote(1, 0.9), vote(1, 0.5), FusionConfig{0.0, 0.5});
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::agreed_below_threshold);

    // disagreement decided by PCA, score on the gate
    d = fuse(vote(0, 0.6), vote(1, 0.4), FusionConfig{0.6, 0.0});
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::pca_below_threshold);

    // disagreement decided by ICA, score on the gate
    d = fuse(vote(0, 0.3), vote(1, 0.6), FusionConfig{0.0, 0.6});
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::ica_below_threshold);
}

TEST(Fuse, ExhaustiveGridMatchesHandRule) {
    const double grid[] = {-0.9, -0.5, 0.0, 0.5, 0.9};
    for (bool same : {true, false}) {
        const int l_p = 0;
        const int l_i = same ? 0 : 1;
        for (double s_p : grid)
            for (double s_i : grid)
                for (double t_p : grid)
                    for (double t_i : grid) {
                        const HandOutcome want = hand_rule(l_p, s_p, l_i, s_i, t_p, t_i);
                        const Decision got =
                            fuse(vote(l_p, s_p), vote(l_i, s_i), FusionConfig{t_p, t_i});
                        ASSERT_EQ(got.accepted, want.accepted)
                            << "same=" << same << " s_p=" << s_p << " s_i=" << s_i
                            << " t_p=" << t_p << " t_i=" << t_i;
                        ASSERT_EQ(tag_of(got), want.tag)
                            << "same=" << same << " s_p=" << s_p << " s_i=" << s_i
                            << " t_p=" << t_p << " t_i=" << t_i;
                        if (want.accepted) ASSERT_EQ(got.class_id, want.label);
                    }
    }
}

TEST(Fuse, RaisingBothThresholdsNeverFlipsDenyToAccept) {
    const double grid[] = {-0.9, -0.5, 0.0, 0.5, 0.9};
    for (bool same : {true, false}) {
        const int l_i = same ? 0 : 1;
        for (double s_p : grid)
            for (double s_i : grid)
                for (double lo_p : grid)
                    for (double lo_i : grid)
                        for (double hi_p : grid)
                            for (double hi_i : grid) {
                                if (hi_p < lo_p || hi_i < lo_i) continue;
                                const Decision lo = fuse(vote(0, s_p), vote(l_i, s_i),
                                                         FusionConfig{lo_p, lo_i});
                                const Decision hi = fuse(vote(0, s_p), vote(l_i, s_i),
                                                         FusionConfig{hi_p, hi_i});
                                if (hi.accepted)
                                    ASSERT_TRUE(lo.accepted)
                                        << "s_p=" << s_p << " s_i=" << s_i << " lo=("
                                        << lo_p << "," << lo_i << ") hi=(" << hi_p
                                        << "," << hi_i << ")";
                            }
    }
}

TEST(Fuse, AgreementPastBothGatesAlwaysYieldsTheAgreedLabel) {
    const double grid[] = {-0.9, -0.5, 0.0, 0.5, 0.9};
    for (double s_p : grid)
        for (double s_i : grid)
            for (double t_p : grid)
                for (double t_i : grid) {
                    if (!(s_p > t_p && s_i > t_i)) continue;
                    const Decision d = fuse(vote(1, s_p), vote(1, s_i), FusionConfig{t_p, t_i});
                    ASSERT_TRUE(d.accepted);
                    ASSERT_EQ(d.class_id, 1);
                    ASSERT_EQ(d.branch, FusedBranch::agreed);
                }
}

TEST(Fuse, NonWinningScoresAreIrrelevant) {
    const std::vector<int> ids{0, 1, 2, 3};
    const FusionConfig cfg{0.1, 0.1};

    ScoreVector p1 = vote_over(ids, 2, 0.8);
    ScoreVector i1 = vote_over(ids, 1, 0.6);
    // same argmax entries, very different losers (still strictly below the winners)
    ScoreVector p2 = p1;
    p2.scores = {0.55, -0.2, 0.8, 0.1};
    ScoreVector i2 = i1;
    i2.scores = {0.3, 0.6, 0.59, -0.9};

    expect_same_decision(fuse(p1, i1, cfg), fuse(p2, i2, cfg));

    // and for an agreement case
    ScoreVector p3 = vote_over(ids, 3, 0.7);
    ScoreVector i3 = vote_over(ids, 3, 0.9);
    ScoreVector p4 = p3;
    p4.scores = {0.69, 0.0, -0.4, 0.7};
    ScoreVector i4 = i3;
    i4.scores = {-0.1, 0.8, 0.2, 0.9};
    expect_same_decision(fuse(p3, i3, cfg), fuse(p4, i4, cfg));
}

TEST(Fuse, NearUnitIcaGateLeavesPcaPathOpen) {
    const FusionConfig cfg{0.5, 0.999};
    // disagreement with PCA stronger still accepts through the PCA gate
    Decision d = fuse(vote(0, 0.9), vote(1, 0.5), cfg);
    EXPECT_TRUE(d.accepted);
    EXPECT_EQ(d.branch, FusedBranch::pca);
    // but any path through the ICA gate is shut
    d = fuse(vote(1, 0.9), vote(1, 0.95), cfg);
    EXPECT_FALSE(d.accepted);
    d = fuse(vote(0, 0.5), vote(1, 0.9), cfg);
    EXPECT_FALSE(d.accepted);
    EXPECT_EQ(d.reason, DenyReason::ica_below_threshold);
}

TEST(Fuse, MismatchedClassSetsRaise) {
    const FusionConfig cfg;
    EXPECT_THROW(fuse(vote_over({0, 1}, 0, 0.9), vote_over({0, 2}, 0, 0.9), cfg), ConfigError);
    EXPECT_THROW(fuse(vote_over({0, 1}, 0, 0.9), vote_over({0, 1, 2}, 0, 0.9), cfg), ConfigError);
    EXPECT_THROW(fuse(ScoreVector{}, ScoreVector{}, cfg), ParamError); // empty, same (empty) set
}

TEST(FusionConfigCheck, AcceptsInteriorRejectsBoundaryAndBeyond) {
    EXPECT_NO_THROW(validate_fusion_config(FusionConfig{0.5, 0.5}));
    EXPECT_NO_THROW(validate_fusion_config(FusionConfig{-0.999, 0.999}));
    EXPECT_THROW(validate_fusion_config(FusionConfig{1.0, 0.5}), ParamError);
    EXPECT_THROW(validate_fusion_config(FusionConfig{0.5, -1.0}), ParamError);
    EXPECT_THROW(validate_fusion_config(FusionConfig{1.5, 0.5}), ParamError);
    EXPECT_THROW(validate_fusion_config(FusionConfig{0.5, -2.0}), ParamError);
}

ValidationSample known_sample(int true_class, int l_p, double s_p, int l_i, double s_i) {
    ValidationSample s;
    s.pca_scores = vote(l_p, s_p);
    s.ica_scores = vote(l_i, s_i);
    s.true_class = true_class;
    s.known = true;
    return s;
}

ValidationSample unknown_sample(int l_p, double s_p, int l_i, double s_i) {
    ValidationSample s = known_sample(0, l_p, s_p, l_i, s_i);
    s.known = false;
    return s;
}

TEST(Calibrate, SingleElementGridIsReturned) {
    const std::vector<ValidationSample> vs{known_sample(1, 1, 0.9, 1, 0.9)};
    const FusionConfig got = calibrate_thresholds(vs, {FusionConfig{0.25, 0.75}});
    EXPECT_DOUBLE_EQ(got.threshold_pca, 0.25);
    EXPECT_DOUBLE_EQ(got.threshold_ica, 0.75);
}

TEST(Calibrate, UnanimousHighScoresTieBreakToLowestPairByValue) {
    // every probe is known, agreed, and correct at 0.9, so any gate below 0.9
    // scores the same; the tie must resolve by threshold value, not grid order
    std::vector<ValidationSample> vs;
    for (int i = 0; i < 3; ++i) vs.push_back(known_sample(1, 1, 0.9, 1, 0.9));
    const std::vector<FusionConfig> grid{
        {0.7, 0.7}, {0.5, 0.7}, {0.7, 0.5}, {0.5, 0.5}};
    const FusionConfig got = calibrate_thresholds(vs, grid);
    EXPECT_DOUBLE_EQ(got.threshold_pca, 0.5);
    EXPECT_DOUBLE_EQ(got.threshold_ica, 0.5);
}

TEST(Calibrate, SingleUnknownProbePicksTheDenyingPair) {
    // scores 0.6/0.6 agreed: (0.5,0.5) wrongly accepts (objective 0) while
    // (0.7,0.7) correctly denies (objective 1)
    const std::vector<ValidationSample> vs{unknown_sample(1, 0.6, 1, 0.6)};
    const FusionConfig got =
        calibrate_thresholds(vs, {FusionConfig{0.5, 0.5}, FusionConfig{0.7, 0.7}});
    EXPECT_DOUBLE_EQ(got.threshold_pca, 0.7);
    EXPECT_DOUBLE_EQ(got.threshold_ica, 0.7);
}

TEST(Calibrate, ObjectiveBalancesAcceptsAndDenials) {
    // hand evaluation: knowns at 0.6, unknown at 0.4, so (0.3,0.3) scores 2
    // (unknown slips through), (0.5,0.5) scores 3, (0.7,0.7) scores 1
    std::vector<ValidationSample> vs{
        known_sample(1, 1, 0.6, 1, 0.6),
        known_sample(0, 0, 0.6, 0, 0.6),
        unknown_sample(1, 0.4, 1, 0.4),
    };
    const FusionConfig got = calibrate_thresholds(
        vs, {FusionConfig{0.3, 0.3}, FusionConfig{0.5, 0.5}, FusionConfig{0.7, 0.7}});
    EXPECT_DOUBLE_EQ(got.threshold_pca, 0.5);
    EXPECT_DOUBLE_EQ(got.threshold_ica, 0.5);
}

TEST(Calibrate, WrongLabelAcceptanceCountsForNothing) {
    // a known probe both branches mislabel earns no credit accepted (wrong
    // class) and none denied (it is not an impostor); all pairs tie at zero
    // and the lowest pair wins
    const std::vector<ValidationSample> vs{known_sample(0, 1, 0.9, 1, 0.9)};
    const FusionConfig got =
        calibrate_thresholds(vs, {FusionConfig{0.95, 0.95}, FusionConfig{0.5, 0.5}});
    EXPECT_DOUBLE_EQ(got.threshold_pca, 0.5);
    EXPECT_DOUBLE_EQ(got.threshold_ica, 0.5);
}

TEST(Calibrate, RejectsEmptyInputs) {
    const std::vector<ValidationSample> vs{known_sample(1, 1, 0.9, 1, 0.9)};
    EXPECT_THROW(calibrate_thresholds({}, {FusionConfig{}}), ParamError);
    EXPECT_THROW(calibrate_thresholds(vs, {}), ParamError);
}

} // namespace
