#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hybridface/dataset.hpp"
#include "hybridface/errors.hpp"
#include "hybridface/fusion.hpp"
#include "hybridface/ica.hpp"
#include "hybridface/mlp.hpp"
#include "hybridface/pca.hpp"
#include "hybridface/preprocess.hpp"

namespace hybridface {

// Every knob the training pipeline takes, grouped by stage.
struct SystemConfig {
    PreprocessConfig preprocess;
    std::size_t m_prime = 0; // eigenface count; 0 = smallest count covering 95% energy
    IcaConfig ica;
    MlpConfig mlp;           // ICA-branch net uses seed + 1 so the twins start apart
    FusionConfig fusion;
    bool concurrent = true;  // train the two branches on separate threads
};

// Everything needed to classify probes: the shared preprocessing recipe, both
// feature extractors, both nets, and the fused acceptance gates.
struct HybridModel {
    int format_version = 1;
    PreprocessConfig preprocess;
    std::vector<int> class_ids; // enrolled subjects, order fixed at training
    EigenModel eigen;
    IcaModel ica;
    MlpNetwork net_pca;
    MlpNetwork net_ica;
    FusionConfig fusion;
};

// Fused verdict plus each branch's own winner, for diagnostics and the
// single-branch baseline modes.
struct ClassifyResult {
    Decision decision;
    TopScore pca_top;
    TopScore ica_top;
};

namespace detail {

// Shortest decimal text that parses back to exactly the same double.
inline std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// Rethrow the in-flight exception with a note saying which half of the
// pipeline it came out of, preserving the concrete error type.
[[noreturn]] inline void rethrow_with_context(const std::string& where) {
    auto tag = [&where](const Error& e) { return where + ": " + e.what(); };
    try {
        throw;
    } catch (const IoError& e) {
        throw IoError(tag(e));
    } catch (const FormatError& e) {
        throw FormatError(tag(e));
    } catch (const LengthError& e) {
        throw LengthError(tag(e));
    } catch (const UnsupportedDepthError& e) {
        throw UnsupportedDepthError(tag(e));
    } catch (const ShapeError& e) {
        throw ShapeError(tag(e));
    } catch (const ParamError& e) {
        throw ParamError(tag(e));
    } catch (const SymmetryError& e) {
        throw SymmetryError(tag(e));
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(tag(e));
    } catch (const SingularError& e) {
        throw SingularError(tag(e));
    } catch (const RankError& e) {
        throw RankError(tag(e));
    } catch (const DivergenceError& e) {
        throw DivergenceError(tag(e));
    } catch (const DegenerateDataError& e) {
        throw DegenerateDataError(tag(e));
    } catch (const VersionError& e) {
        throw VersionError(tag(e));
    } catch (const ValidationError& e) {
        throw ValidationError(tag(e));
    } catch (const ConfigError& e) {
        throw ConfigError(tag(e));
    } catch (const Error& e) {
        throw Error(tag(e));
    } catch (const std::exception& e) {
        throw Error(where + ": " + e.what());
    }
}

template <typename Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (...) {
        rethrow_with_context(where);
    }
}

// Stage shared by both branches: normalized faces, label indices, and the
// eigenface fit every later step hangs off.
struct TrainingBase {
    std::vector<int> class_ids;
    std::vector<std::size_t> labels; // per training face, index into class_ids
    std::vector<FaceVector> faces;
    std::vector<double> mean;
    Matrix centered; // pixel count x training count
    EigenModel eigen;
    std::vector<FeatureVector> feats_pca; // eigenface weights per training face
};

inline TrainingBase prepare_training(const DatasetSplit& split, const SystemConfig& cfg) {
    if (split.train.empty()) throw ParamError("training split is empty");
    validate_fusion_config(cfg.fusion);

    TrainingBase base;
    base.labels.reserve(split.train.size());
    for (const LabeledImage& img : split.train) {
        auto it = std::find(base.class_ids.begin(), base.class_ids.end(), img.subject);
        if (it == base.class_ids.end()) {
            base.labels.push_back(base.class_ids.size());
            base.class_ids.push_back(img.subject);
        } else {
            base.labels.push_back(it - base.class_ids.begin());
        }
    }
    if (base.class_ids.size() < 2)
        throw ParamError("need at least two enrolled subjects for a discriminative task");

    base.faces.reserve(split.train.size());
    for (const LabeledImage& img : split.train)
        base.faces.push_back(normalize(img.image, cfg.preprocess));

    with_context("eigenface fit", [&] {
        base.mean = compute_mean(base.faces);
        base.centered = center(base.faces, base.mean);
        base.eigen = fit_pca(base.centered, base.mean, cfg.m_prime);
        return 0;
    });

    base.feats_pca.reserve(base.faces.size());
    for (const FaceVector& face : base.faces)
        base.feats_pca.push_back(project_pca(base.eigen, face));
    return base;
}

struct IcaBranchFit {
    IcaModel model;
    std::vector<FeatureVector> feats; // independent-component coefficients per face
};

inline IcaBranchFit fit_ica_branch(const TrainingBase& base, const SystemConfig& cfg) {
    const std::size_t dims =
        cfg.ica.pca_prewhiten_dims ? cfg.ica.pca_prewhiten_dims : base.eigen.m_prime;

    Matrix r(base.faces.size(), dims);
    EigenModel pre;
    if (dims == base.eigen.m_prime) {
        pre = base.eigen;
        for (std::size_t i = 0; i < base.feats_pca.size(); ++i)
            for (std::size_t j = 0; j < dims; ++j) r(i, j) = base.feats_pca[i].weights[j];
    } else {
        pre = fit_pca(base.centered, base.mean, dims);
        for (std::size_t i = 0; i < base.faces.size(); ++i) {
            const FeatureVector w = project_pca(pre, base.faces[i]);
            for (std::size_t j = 0; j < dims; ++j) r(i, j) = w.weights[j];
        }
    }

    IcaBranchFit fit;
    fit.model = fit_ica(r, cfg.ica, std::move(pre));
    fit.feats.reserve(base.faces.size());
    for (std::size_t i = 0; i < fit.model.basis.rows; ++i) {
        FeatureVector f;
        f.branch = Branch::ica;
        f.weights.assign(fit.model.basis.data.begin() + i * fit.model.basis.cols,
                         fit.model.basis.data.begin() + (i + 1) * fit.model.basis.cols);
        fit.feats.push_back(std::move(f));
    }
    return fit;
}

inline MlpNetwork train_branch_net(const std::vector<FeatureVector>& feats,
                                   const TrainingBase& base, const MlpConfig& cfg,
                                   TrainReport* report = nullptr) {
    MlpNetwork net =
        init_network(feats.front().weights.size(), cfg.hidden_units, base.class_ids.size(), cfg);
    net.class_ids = base.class_ids;
    auto [trained, rep] = train(std::move(net), feats, base.labels, cfg);
    if (report) *report = std::move(rep);
    return trained;
}

} // namespace detail

// Train the full system: one shared eigenface fit, then the two branch
// pipelines (eigenface net; independent-component fit plus its net), run
// concurrently when asked. Both branches are deterministic given the seeds —
// the ICA-branch net draws from seed + 1 — so the schedule cannot change the
// result. Errors carry a note naming the failing branch.
inline HybridModel train_system(const DatasetSplit& split, const SystemConfig& cfg) {
    detail::TrainingBase base = detail::prepare_training(split, cfg);

    MlpConfig cfg_net_pca = cfg.mlp;
    MlpConfig cfg_net_ica = cfg.mlp;
    cfg_net_ica.seed += 1;

    HybridModel model;
    model.preprocess = cfg.preprocess;
    model.class_ids = base.class_ids;
    model.eigen = base.eigen;
    model.fusion = cfg.fusion;

    if (cfg.concurrent) {
        std::exception_ptr err_pca, err_ica;
        std::thread pca_thread([&] {
            try {
                model.net_pca = detail::train_branch_net(base.feats_pca, base, cfg_net_pca);
            } catch (...) {
                err_pca = std::current_exception();
            }
        });
        std::thread ica_thread([&] {
            try {
                detail::IcaBranchFit fit = detail::fit_ica_branch(base, cfg);
                model.net_ica = detail::train_branch_net(fit.feats, base, cfg_net_ica);
                model.ica = std::move(fit.model);
            } catch (...) {
                err_ica = std::current_exception();
            }
        });
        pca_thread.join();
        ica_thread.join();
        if (err_pca) {
            try {
                std::rethrow_exception(err_pca);
            } catch (...) {
                detail::rethrow_with_context("pca branch");
            }
        }
        if (err_ica) {
            try {
                std::rethrow_exception(err_ica);
            } catch (...) {
                detail::rethrow_with_context("ica branch");
            }
        }
    } else {
        detail::with_context("pca branch", [&] {
            model.net_pca = detail::train_branch_net(base.feats_pca, base, cfg_net_pca);
            return 0;
        });
        detail::with_context("ica branch", [&] {
            detail::IcaBranchFit fit = detail::fit_ica_branch(base, cfg);
            model.net_ica = detail::train_branch_net(fit.feats, base, cfg_net_ica);
            model.ica = std::move(fit.model);
            return 0;
        });
    }
    return model;
}

// Raw per-class scores from both branches for one probe.
struct BranchScores {
    ScoreVector pca;
    ScoreVector ica;
};

inline BranchScores score_branches(const HybridModel& model, const GrayImage& img) {
    const FaceVector face = normalize(img, model.preprocess);
    return {forward(model.net_pca, project_pca(model.eigen, face)),
            forward(model.net_ica, project_ica(model.ica, face))};
}

// Run one probe through both branches and fuse. Preprocessing fixes the
// dimensions, so any shape error here means a corrupted model.
inline ClassifyResult classify(const HybridModel& model, const GrayImage& img) {
    const BranchScores scores = score_branches(model, img);
    ClassifyResult result;
    result.pca_top = classify_scores(scores.pca);
    result.ica_top = classify_scores(scores.ica);
    result.decision = fuse(scores.pca, scores.ica, model.fusion);
    return result;
}

// One evaluated probe. The single-branch verdicts accept on their own
// threshold alone, mirroring what fusion does with that branch's score.
struct ProbeRecord {
    int subject = 0;
    int pose = 0;
    bool known = true;
    TopScore pca_top;
    TopScore ica_top;
    bool pca_accepted = false;
    bool ica_accepted = false;
    Decision hybrid;
    bool pca_correct = false;
    bool ica_correct = false;
    bool hybrid_correct = false;
};

struct SetReport {
    std::string name;
    bool known = false;
    std::size_t count = 0;
    std::size_t correct_pca = 0;
    std::size_t correct_ica = 0;
    std::size_t correct_hybrid = 0;
    std::vector<ProbeRecord> probes;

    double acc_pca() const { return 100.0 * correct_pca / count; }
    double acc_ica() const { return 100.0 * correct_ica / count; }
    double acc_hybrid() const { return 100.0 * correct_hybrid / count; }
    std::size_t miss_pca() const { return count - correct_pca; }
    std::size_t miss_ica() const { return count - correct_ica; }
    std::size_t miss_hybrid() const { return count - correct_hybrid; }
};

struct EvalReport {
    std::vector<SetReport> sets;
    std::vector<std::string> warnings;
};

// Score every test set three ways: eigenface branch alone, independent-
// component branch alone, and the fused system. On a known set a probe counts
// as correct when accepted under its true label; on an unknown set, when
// denied. Empty sets are skipped with a warning.
inline EvalReport evaluate(const HybridModel& model, const DatasetSplit& split) {
    EvalReport report;
    for (const TestSet& set : split.test_sets) {
        if (set.images.empty()) {
            report.warnings.push_back("test set '" + set.name + "' is empty and was skipped");
            continue;
        }
        SetReport row;
        row.name = set.name;
        row.known = set.known;
        row.count = set.images.size();
        for (const LabeledImage& probe : set.images) {
            const ClassifyResult res = classify(model, probe.image);
            ProbeRecord rec;
            rec.subject = probe.subject;
            rec.pose = probe.pose;
            rec.known = set.known;
            rec.pca_top = res.pca_top;
            rec.ica_top = res.ica_top;
            rec.pca_accepted = res.pca_top.score > model.fusion.threshold_pca;
            rec.ica_accepted = res.ica_top.score > model.fusion.threshold_ica;
            rec.hybrid = res.decision;
            if (set.known) {
                rec.pca_correct = rec.pca_accepted && res.pca_top.class_id == probe.subject;
                rec.ica_correct = rec.ica_accepted && res.ica_top.class_id == probe.subject;
                rec.hybrid_correct =
                    res.decision.accepted && res.decision.class_id == probe.subject;
            } else {
                rec.pca_correct = !rec.pca_accepted;
                rec.ica_correct = !rec.ica_accepted;
                rec.hybrid_correct = !res.decision.accepted;
            }
            row.correct_pca += rec.pca_correct;
            row.correct_ica += rec.ica_correct;
            row.correct_hybrid += rec.hybrid_correct;
            row.probes.push_back(std::move(rec));
        }
        report.sets.push_back(std::move(row));
    }
    if (report.sets.empty())
        throw ParamError("no nonempty test sets to evaluate");
    return report;
}

// Plain-text table: one row per test set, accuracy with misclassified counts.
inline std::string format_eval_report(const EvalReport& report) {
    std::string out = "set                 count  pca              ica              hybrid\n";
    for (const SetReport& s : report.sets) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-18s %6zu  %6.2f (%zu miss)  %6.2f (%zu miss)  %6.2f (%zu miss)\n",
                      s.name.c_str(), s.count, s.acc_pca(), s.miss_pca(), s.acc_ica(),
                      s.miss_ica(), s.acc_hybrid(), s.miss_hybrid());
        out += line;
    }
    for (const std::string& w : report.warnings) out += "note: " + w + "\n";
    return out;
}

inline std::string eval_csv(const EvalReport& report) {
    std::string out = "set,count,acc_pca,acc_ica,acc_hybrid,miss_pca,miss_ica,miss_hybrid\n";
    for (const SetReport& s : report.sets) {
        out += s.name + ',' + std::to_string(s.count) + ',' + detail::percent(s.acc_pca()) +
               ',' + detail::percent(s.acc_ica()) + ',' + detail::percent(s.acc_hybrid()) +
               ',' + std::to_string(s.miss_pca()) + ',' + std::to_string(s.miss_ica()) + ',' +
               std::to_string(s.miss_hybrid()) + '\n';
    }
    return out;
}

// One learning-rate/momentum setting to try.
struct SweepPoint {
    double learn_rate = 0.1;
    double momentum = 0.5;
};

struct SweepRow {
    SweepPoint point;
    bool pca_diverged = false;
    bool ica_diverged = false;
    double final_mse_pca = 0.0;
    double final_mse_ica = 0.0;
    std::size_t epochs = 0; // larger of the two branches' epoch counts
};

// Train a fresh pair of nets per grid point on features extracted once. Every
// point starts from the same seeds, so rows differ only through the swept
// settings; a branch that blows up is marked diverged instead of aborting.
inline std::vector<SweepRow> sweep_hyperparams(const DatasetSplit& split,
                                               const std::vector<SweepPoint>& grid,
                                               const SystemConfig& base_cfg) {
    if (grid.empty()) throw ParamError("sweep grid is empty");
    const detail::TrainingBase base = detail::prepare_training(split, base_cfg);
    const detail::IcaBranchFit ica_fit = detail::with_context(
        "ica branch", [&] { return detail::fit_ica_branch(base, base_cfg); });

    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const SweepPoint& point : grid) {
        SweepRow row;
        row.point = point;
        MlpConfig cfg_net = base_cfg.mlp;
        cfg_net.learn_rate = point.learn_rate;
        cfg_net.momentum = point.momentum;

        TrainReport report;
        try {
            detail::train_branch_net(base.feats_pca, base, cfg_net, &report);
            row.final_mse_pca = report.final_mse;
            row.epochs = std::max(row.epochs, report.epochs_run);
        } catch (const DivergenceError&) {
            row.pca_diverged = true;
        }
        cfg_net.seed += 1;
        try {
            detail::train_branch_net(ica_fit.feats, base, cfg_net, &report);
            row.final_mse_ica = report.final_mse;
            row.epochs = std::max(row.epochs, report.epochs_run);
        } catch (const DivergenceError&) {
            row.ica_diverged = true;
        }
        rows.push_back(row);
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "learn_rate,momentum,final_mse_pca,final_mse_ica,epochs\n";
    for (const SweepRow& r : rows) {
        out += detail::shortest(r.point.learn_rate) + ',' + detail::shortest(r.point.momentum) +
               ',' + (r.pca_diverged ? "diverged" : detail::shortest(r.final_mse_pca)) + ',' +
               (r.ica_diverged ? "diverged" : detail::shortest(r.final_mse_ica)) + ',' +
               std::to_string(r.epochs) + '\n';
    }
    return out;
}

} // namespace hybridface
