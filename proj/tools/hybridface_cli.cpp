// Command-line front end: train, classify, evaluate, sweep, calibrate.
//
// Exit codes: 0 success (classify: probe accepted), 3 probe denied,
// 1 runtime failure, CLI11's own codes for bad command lines.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybridface/dataset.hpp"
#include "hybridface/model_io.hpp"
#include "hybridface/pipeline.hpp"

namespace hf = hybridface;

namespace {

constexpr int kExitAccepted = 0;
constexpr int kExitError = 1;
constexpr int kExitDenied = 3;

std::pair<std::size_t, std::size_t> parse_size(const std::string& spec) {
    const auto x = spec.find('x');
    try {
        if (x != std::string::npos) {
            const std::size_t w = std::stoul(spec.substr(0, x));
            const std::size_t h = std::stoul(spec.substr(x + 1));
            if (w > 0 && h > 0) return {w, h};
        }
    } catch (const std::exception&) {
    }
    throw hf::FormatError("bad --size '" + spec + "': expected WxH, e.g. 46x56");
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string part =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            const double v = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            values.push_back(v);
        } catch (const std::exception&) {
            throw hf::FormatError("bad " + what + " value '" + part + "' in grid spec");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

// "<list>x<list>", e.g. "0.1,0.2,0.3x0,0.5,0.9"; the cross product is taken
// with the left list outermost.
std::pair<std::vector<double>, std::vector<double>> parse_grid(const std::string& spec,
                                                               const std::string& left,
                                                               const std::string& right) {
    const auto x = spec.find('x');
    if (x == std::string::npos || spec.find('x', x + 1) != std::string::npos)
        throw hf::FormatError("bad grid spec '" + spec + "': expected <" + left + " list>x<" +
                              right + " list>");
    return {parse_double_list(spec.substr(0, x), left),
            parse_double_list(spec.substr(x + 1), right)};
}

// Options shared by every subcommand that trains networks.
struct TrainFlags {
    std::string size;
    double gamma = 1.0;
    bool no_equalize = false;
    std::size_t m_prime = 0;
    std::size_t hidden = 70;
    double learn_rate = 0.1;
    double momentum = 0.5;
    std::size_t epochs = 1000;
    double target_mse = 0.01;
    unsigned seed = 0;
    double ica_lr = 0.001;
    std::size_t ica_passes = 512;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_net_rates) {
    cmd->add_option("--size", f.size, "preprocess size WxH (default 46x56)");
    cmd->add_option("--gamma", f.gamma, "gamma correction exponent");
    cmd->add_flag("--no-equalize", f.no_equalize, "skip histogram equalization");
    cmd->add_option("--mprime", f.m_prime, "eigenface count (0 = cover 95% energy)");
    cmd->add_option("--hidden", f.hidden, "hidden units per branch net");
    if (with_net_rates) {
        cmd->add_option("--lr", f.learn_rate, "backprop learning rate");
        cmd->add_option("--momentum", f.momentum, "backprop momentum term");
    }
    cmd->add_option("--epochs", f.epochs, "training epoch cap");
    cmd->add_option("--target-mse", f.target_mse, "early-stop error target");
    cmd->add_option("--seed", f.seed, "weight-init seed (ica branch uses seed+1)");
    cmd->add_option("--ica-lr", f.ica_lr, "independent-component learning rate");
    cmd->add_option("--ica-passes", f.ica_passes, "independent-component pass cap");
}

hf::SystemConfig config_from(const TrainFlags& f) {
    hf::SystemConfig cfg;
    if (!f.size.empty()) {
        const auto [w, h] = parse_size(f.size);
        cfg.preprocess.target_width = w;
        cfg.preprocess.target_height = h;
    }
    cfg.preprocess.gamma = f.gamma;
    cfg.preprocess.equalize = !f.no_equalize;
    cfg.m_prime = f.m_prime;
    cfg.mlp.hidden_units = f.hidden;
    cfg.mlp.learn_rate = f.learn_rate;
    cfg.mlp.momentum = f.momentum;
    cfg.mlp.max_epochs = f.epochs;
    cfg.mlp.target_mse = f.target_mse;
    cfg.mlp.seed = f.seed;
    cfg.ica.learn_rate = f.ica_lr;
    cfg.ica.max_passes = f.ica_passes;
    return cfg;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hf::IoError("cannot write: " + path);
    out << text;
    if (!out.good()) throw hf::IoError("failed while writing: " + path);
}

int run_train(const std::string& manifest_path, const std::string& out_path,
              const TrainFlags& flags) {
    const hf::DatasetSplit split = hf::load_split(hf::load_manifest(manifest_path));
    const hf::SystemConfig cfg = config_from(flags);
    const hf::HybridModel model = hf::train_system(split, cfg);
    hf::save_model(model, out_path);
    std::printf("trained %zu classes from %zu images\n", model.class_ids.size(),
                split.train.size());
    std::printf("eigenface components: %zu; independent components: %zu\n",
                model.eigen.m_prime, model.ica.row_means.size());
    std::printf("model written to %s\n", out_path.c_str());
    return kExitAccepted;
}

int run_classify(const std::string& model_path, const std::string& image_path, bool json) {
    const hf::HybridModel model = hf::load_model(model_path);
    const hf::GrayImage img = hf::load_pgm(image_path);
    const hf::ClassifyResult res = hf::classify(model, img);

    if (json) {
        nlohmann::json j;
        j["accepted"] = res.decision.accepted;
        if (res.decision.accepted) {
            j["class_id"] = res.decision.class_id;
            j["branch"] = hf::fused_branch_name(res.decision.branch);
            j["score"] = res.decision.score;
        } else {
            j["reason"] = hf::deny_reason_name(res.decision.reason);
        }
        j["pca"] = {{"class_id", res.pca_top.class_id}, {"score", res.pca_top.score}};
        j["ica"] = {{"class_id", res.ica_top.class_id}, {"score", res.ica_top.score}};
        j["thresholds"] = {{"pca", model.fusion.threshold_pca},
                           {"ica", model.fusion.threshold_ica}};
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("pca:   subject %d  score %.4f\n", res.pca_top.class_id,
                    res.pca_top.score);
        std::printf("ica:   subject %d  score %.4f\n", res.ica_top.class_id,
                    res.ica_top.score);
        if (res.decision.accepted)
            std::printf("fused: accepted subject %d (%s, score %.4f)\n",
                        res.decision.class_id, hf::fused_branch_name(res.decision.branch),
                        res.decision.score);
        else
            std::printf("fused: denied (%s)\n", hf::deny_reason_name(res.decision.reason));
    }
    return res.decision.accepted ? kExitAccepted : kExitDenied;
}

int run_evaluate(const std::string& manifest_path, const std::string& model_path,
                 const std::string& csv_path) {
    const hf::HybridModel model = hf::load_model(model_path);
    const hf::DatasetSplit split = hf::load_split(hf::load_manifest(manifest_path));
    const hf::EvalReport report = hf::evaluate(model, split);
    std::printf("%s", hf::format_eval_report(report).c_str());
    if (!csv_path.empty()) {
        write_file(csv_path, hf::eval_csv(report));
        std::printf("csv written to %s\n", csv_path.c_str());
    }
    return kExitAccepted;
}

int run_sweep(const std::string& manifest_path, const std::string& grid_spec,
              const std::string& csv_path, const TrainFlags& flags) {
    const auto [rates, momenta] = parse_grid(grid_spec, "learning-rate", "momentum");
    if (rates.empty() || momenta.empty())
        throw hf::FormatError("grid spec '" + grid_spec + "' has an empty side");
    std::vector<hf::SweepPoint> grid;
    for (double lr : rates)
        for (double mom : momenta) grid.push_back({lr, mom});

    const hf::DatasetSplit split = hf::load_split(hf::load_manifest(manifest_path));
    const std::vector<hf::SweepRow> rows =
        hf::sweep_hyperparams(split, grid, config_from(flags));
    write_file(csv_path, hf::sweep_csv(rows));
    std::printf("%zu rows written to %s\n", rows.size(), csv_path.c_str());
    return kExitAccepted;
}

int run_calibrate(const std::string& manifest_path, const std::string& model_path,
                  const std::string& grid_spec) {
    const auto [pca_ts, ica_ts] = parse_grid(grid_spec, "pca-threshold", "ica-threshold");
    if (pca_ts.empty() || ica_ts.empty())
        throw hf::FormatError("grid spec '" + grid_spec + "' has an empty side");
    std::vector<hf::FusionConfig> grid;
    for (double tp : pca_ts)
        for (double ti : ica_ts) {
            const hf::FusionConfig cfg{tp, ti};
            hf::validate_fusion_config(cfg);
            grid.push_back(cfg);
        }

    hf::HybridModel model = hf::load_model(model_path);
    const hf::DatasetSplit split = hf::load_split(hf::load_manifest(manifest_path));

    std::vector<hf::ValidationSample> samples;
    for (const hf::TestSet& set : split.test_sets)
        for (const hf::LabeledImage& probe : set.images) {
            hf::BranchScores scores = hf::score_branches(model, probe.image);
            hf::ValidationSample s;
            s.pca_scores = std::move(scores.pca);
            s.ica_scores = std::move(scores.ica);
            s.known = set.known;
            s.true_class = probe.subject;
            samples.push_back(std::move(s));
        }
    if (samples.empty())
        throw hf::ParamError("manifest has no test probes to calibrate on");

    model.fusion = hf::calibrate_thresholds(samples, grid);

    std::size_t correct = 0;
    for (const hf::ValidationSample& s : samples) {
        const hf::Decision d = hf::fuse(s.pca_scores, s.ica_scores, model.fusion);
        if (d.accepted ? (s.known && d.class_id == s.true_class) : !s.known) ++correct;
    }
    hf::save_model(model, model_path);
    std::printf("thresholds set to pca %g ica %g (%zu of %zu validation probes correct)\n",
                model.fusion.threshold_pca, model.fusion.threshold_ica, correct,
                samples.size());
    return kExitAccepted;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid eigenface + independent-component face recognition"};
    app.require_subcommand(1);

    std::string manifest_path, model_path, image_path, out_path, csv_path, grid_spec;
    bool json = false;
    TrainFlags flags;

    CLI::App* train = app.add_subcommand("train", "fit both branches and write a model");
    train->add_option("--manifest", manifest_path, "dataset split manifest")->required();
    train->add_option("--out", out_path, "model file to write")->required();
    add_train_flags(train, flags, true);

    CLI::App* classify = app.add_subcommand("classify", "accept or deny one probe image");
    classify->add_option("--model", model_path, "trained model file")->required();
    classify->add_option("--image", image_path, "probe image (PGM)")->required();
    classify->add_flag("--json", json, "machine-readable output");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score every test set in a manifest");
    evaluate->add_option("--manifest", manifest_path, "dataset split manifest")->required();
    evaluate->add_option("--model", model_path, "trained model file")->required();
    evaluate->add_option("--csv", csv_path, "also write rows to this CSV file");

    CLI::App* sweep = app.add_subcommand("sweep", "train across a learning-rate/momentum grid");
    sweep->add_option("--manifest", manifest_path, "dataset split manifest")->required();
    sweep->add_option("--grid", grid_spec, "grid spec, e.g. 0.1,0.3,0.5x0,0.5,0.9")->required();
    sweep->add_option("--csv", csv_path, "CSV file to write")->required();
    add_train_flags(sweep, flags, false);

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "pick fusion thresholds on the manifest's test sets");
    calibrate->add_option("--manifest", manifest_path, "dataset split manifest")->required();
    calibrate->add_option("--model", model_path, "model file to update in place")->required();
    calibrate->add_option("--grid", grid_spec, "threshold grid, e.g. 0.3,0.5,0.7x0.3,0.5,0.7")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(manifest_path, out_path, flags);
        if (classify->parsed()) return run_classify(model_path, image_path, json);
        if (evaluate->parsed()) return run_evaluate(manifest_path, model_path, csv_path);
        if (sweep->parsed()) return run_sweep(manifest_path, grid_spec, csv_path, flags);
        if (calibrate->parsed()) return run_calibrate(manifest_path, model_path, grid_spec);
    } catch (const hf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError; // unreachable: require_subcommand guarantees one branch
}
