#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/pipeline.hpp"

namespace hybridface {

// Text model format, version 1. One magic line, then fixed-order named
// sections (PREPROCESS, CLASSES, PCA, ICA, NET_PCA, NET_ICA, FUSION, END).
// Every float is written as its shortest round-trippable decimal, so a
// load(save(model)) reproduces each matrix bit for bit. The composed ICA
// unmixing map and its inverse are rebuilt on load from the stored factors,
// which keeps a hand-edited file from smuggling in an inconsistent pair.
inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelMagic = "HYBRIDFACE-MODEL";

namespace detail {

inline void write_scalar(std::string& out, const std::string& name, double v) {
    out += name + ' ' + shortest(v) + '\n';
}

inline void write_scalar(std::string& out, const std::string& name, std::size_t v) {
    out += name + ' ' + std::to_string(v) + '\n';
}

inline void write_vector(std::string& out, const std::string& name,
                         const std::vector<double>& v) {
    out += name + ' ' + std::to_string(v.size()) + '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += shortest(v[i]);
        out += i + 1 == v.size() ? '\n' : ' ';
    }
    if (v.empty()) out += '\n';
}

inline void write_ids(std::string& out, const std::string& name, const std::vector<int>& v) {
    out += name + ' ' + std::to_string(v.size()) + '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += std::to_string(v[i]);
        out += i + 1 == v.size() ? '\n' : ' ';
    }
    if (v.empty()) out += '\n';
}

inline void write_matrix(std::string& out, const std::string& name, const Matrix& m) {
    out += name + ' ' + std::to_string(m.rows) + ' ' + std::to_string(m.cols) + '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            out += shortest(m(r, c));
            out += c + 1 == m.cols ? '\n' : ' ';
        }
    }
}

inline void write_eigen(std::string& out, const EigenModel& eigen) {
    write_vector(out, "mean", eigen.mean);
    write_matrix(out, "eigenfaces", eigen.eigenfaces);
    write_vector(out, "eigenvalues", eigen.eigenvalues);
    write_scalar(out, "m_prime", eigen.m_prime);
    write_scalar(out, "n_train", eigen.n_train);
}

inline void write_net(std::string& out, const MlpNetwork& net) {
    write_matrix(out, "w1", net.w1);
    write_vector(out, "b1", net.b1);
    write_matrix(out, "w2", net.w2);
    write_vector(out, "b2", net.b2);
    write_ids(out, "class_ids", net.class_ids);
}

inline bool same_eigen(const EigenModel& a, const EigenModel& b) {
    return a.m_prime == b.m_prime && a.n_train == b.n_train && a.mean == b.mean &&
           a.eigenvalues == b.eigenvalues && a.eigenfaces.rows == b.eigenfaces.rows &&
           a.eigenfaces.cols == b.eigenfaces.cols && a.eigenfaces.data == b.eigenfaces.data;
}

// Whitespace token stream over the model text; every failure names the
// section it happened in.
class ModelReader {
public:
    explicit ModelReader(std::string text) : in_(std::move(text)) {}

    void set_section(std::string name) { section_ = std::move(name); }
    const std::string& section() const { return section_; }

    bool at_end() {
        std::string t;
        return !(in_ >> t);
    }

    std::string next_token(const std::string& what) {
        std::string t;
        if (!(in_ >> t))
            throw FormatError("model file ends early: section " + section_ + " is missing (" +
                              what + " expected)");
        return t;
    }

    void expect(const std::string& keyword) {
        const std::string t = next_token("'" + keyword + "'");
        if (t != keyword)
            throw FormatError("model file: expected '" + keyword + "' in section " + section_ +
                              ", found '" + t + "'");
    }

    double next_double(const std::string& what) {
        const std::string t = next_token(what);
        double v{};
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
            throw FormatError("model file: bad number '" + t + "' for " + what +
                              " in section " + section_);
        return v;
    }

    long long next_int(const std::string& what) {
        const std::string t = next_token(what);
        long long v{};
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
            throw FormatError("model file: bad integer '" + t + "' for " + what +
                              " in section " + section_);
        return v;
    }

    std::size_t next_size(const std::string& what) {
        const long long v = next_int(what);
        if (v < 0)
            throw FormatError("model file: negative count for " + what + " in section " +
                              section_);
        return static_cast<std::size_t>(v);
    }

    std::vector<double> read_vector(const std::string& name) {
        expect(name);
        const std::size_t n = next_size(name + " length");
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = next_double(name + " entry");
        return v;
    }

    std::vector<int> read_ids(const std::string& name) {
        expect(name);
        const std::size_t n = next_size(name + " length");
        std::vector<int> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = static_cast<int>(next_int(name + " entry"));
        return v;
    }

    Matrix read_matrix(const std::string& name) {
        expect(name);
        const std::size_t rows = next_size(name + " rows");
        const std::size_t cols = next_size(name + " cols");
        Matrix m(rows, cols);
        for (double& x : m.data) x = next_double(name + " entry");
        return m;
    }

    EigenModel read_eigen() {
        EigenModel eigen;
        eigen.mean = read_vector("mean");
        eigen.eigenfaces = read_matrix("eigenfaces");
        eigen.eigenvalues = read_vector("eigenvalues");
        expect("m_prime");
        eigen.m_prime = next_size("m_prime");
        expect("n_train");
        eigen.n_train = next_size("n_train");
        return eigen;
    }

    MlpNetwork read_net() {
        MlpNetwork net;
        net.w1 = read_matrix("w1");
        net.b1 = read_vector("b1");
        net.w2 = read_matrix("w2");
        net.b2 = read_vector("b2");
        net.class_ids = read_ids("class_ids");
        return net;
    }

private:
    std::istringstream in_;
    std::string section_ = "header";
};

inline void check(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("model file violates an invariant: " + what);
}

// Structural invariants a freshly loaded model must satisfy before use.
inline void validate_model(const HybridModel& model) {
    const std::size_t pixels = model.preprocess.target_width * model.preprocess.target_height;
    check(model.preprocess.target_width > 0 && model.preprocess.target_height > 0,
          "preprocess dimensions must be positive");
    check(model.preprocess.gamma > 0.0, "gamma must be positive");
    check(model.class_ids.size() >= 2, "need at least two enrolled classes");

    const EigenModel& e = model.eigen;
    check(e.m_prime >= 1, "eigenface count must be positive");
    check(e.eigenfaces.rows == pixels, "eigenface length must match preprocess dimensions");
    check(e.eigenfaces.cols == e.m_prime, "eigenface matrix width must match m_prime");
    check(e.mean.size() == pixels, "mean face length must match preprocess dimensions");
    check(e.eigenvalues.size() == e.m_prime, "one eigenvalue per kept component");

    const IcaModel& ica = model.ica;
    const std::size_t dims = ica.row_means.size();
    check(dims >= 1, "independent-component model must keep at least one variable");
    check(ica.whitening.rows == dims && ica.whitening.cols == dims,
          "whitening matrix must be square over the kept variables");
    check(ica.learned.rows == dims && ica.learned.cols == dims,
          "separating matrix must be square over the kept variables");
    check(ica.basis.cols == dims, "basis width must match the kept variables");
    if (ica.pre_projection) {
        check(ica.pre_projection->m_prime == dims,
              "pre-projection must emit exactly the kept variables");
        check(ica.pre_projection->eigenfaces.rows == pixels,
              "pre-projection length must match preprocess dimensions");
    }

    check(model.net_pca.inputs() == e.m_prime,
          "pca-branch net input width must equal m_prime");
    check(model.net_ica.inputs() == dims,
          "ica-branch net input width must equal the kept variables");
    check(model.net_pca.outputs() == model.class_ids.size(),
          "pca-branch net must emit one score per class");
    check(model.net_ica.outputs() == model.class_ids.size(),
          "ica-branch net must emit one score per class");
    check(model.net_pca.b1.size() == model.net_pca.hidden() &&
              model.net_pca.b2.size() == model.net_pca.outputs(),
          "pca-branch net bias lengths must match its layer widths");
    check(model.net_ica.b1.size() == model.net_ica.hidden() &&
              model.net_ica.b2.size() == model.net_ica.outputs(),
          "ica-branch net bias lengths must match its layer widths");
    check(model.net_pca.class_ids == model.class_ids &&
              model.net_ica.class_ids == model.class_ids,
          "both nets must carry the model's class list");
    check(model.fusion.threshold_pca > -1.0 && model.fusion.threshold_pca < 1.0 &&
              model.fusion.threshold_ica > -1.0 && model.fusion.threshold_ica < 1.0,
          "fusion thresholds must lie strictly inside (-1,1)");
}

} // namespace detail

inline std::string serialize_model(const HybridModel& model) {
    std::string out;
    out += std::string(kModelMagic) + ' ' + std::to_string(model.format_version) + '\n';

    out += "PREPROCESS\n";
    detail::write_scalar(out, "width", model.preprocess.target_width);
    detail::write_scalar(out, "height", model.preprocess.target_height);
    detail::write_scalar(out, "gamma", model.preprocess.gamma);
    detail::write_scalar(out, "equalize",
                         static_cast<std::size_t>(model.preprocess.equalize ? 1 : 0));

    out += "CLASSES\n";
    detail::write_ids(out, "ids", model.class_ids);

    out += "PCA\n";
    detail::write_eigen(out, model.eigen);

    out += "ICA\n";
    detail::write_vector(out, "row_means", model.ica.row_means);
    detail::write_matrix(out, "whitening", model.ica.whitening);
    detail::write_matrix(out, "learned", model.ica.learned);
    detail::write_matrix(out, "basis", model.ica.basis);
    if (!model.ica.pre_projection) {
        out += "pre none\n";
    } else if (detail::same_eigen(*model.ica.pre_projection, model.eigen)) {
        out += "pre shared\n";
    } else {
        out += "pre own\n";
        detail::write_eigen(out, *model.ica.pre_projection);
    }

    out += "NET_PCA\n";
    detail::write_net(out, model.net_pca);
    out += "NET_ICA\n";
    detail::write_net(out, model.net_ica);

    out += "FUSION\n";
    detail::write_scalar(out, "threshold_pca", model.fusion.threshold_pca);
    detail::write_scalar(out, "threshold_ica", model.fusion.threshold_ica);
    out += "END\n";
    return out;
}

inline HybridModel parse_model(std::string text) {
    detail::ModelReader in(std::move(text));

    const std::string magic = in.next_token("magic");
    if (magic != kModelMagic)
        throw FormatError("not a model file: expected magic '" + std::string(kModelMagic) +
                          "', found '" + magic + "'");
    const long long version = in.next_int("format version");
    if (version != kModelFormatVersion)
        throw VersionError("model format version " + std::to_string(version) +
                           " not understood; this build reads version " +
                           std::to_string(kModelFormatVersion));

    HybridModel model;
    model.format_version = static_cast<int>(version);

    in.set_section("PREPROCESS");
    in.expect("PREPROCESS");
    in.expect("width");
    model.preprocess.target_width = in.next_size("width");
    in.expect("height");
    model.preprocess.target_height = in.next_size("height");
    in.expect("gamma");
    model.preprocess.gamma = in.next_double("gamma");
    in.expect("equalize");
    model.preprocess.equalize = in.next_int("equalize") != 0;

    in.set_section("CLASSES");
    in.expect("CLASSES");
    model.class_ids = in.read_ids("ids");

    in.set_section("PCA");
    in.expect("PCA");
    model.eigen = in.read_eigen();

    in.set_section("ICA");
    in.expect("ICA");
    model.ica.row_means = in.read_vector("row_means");
    model.ica.whitening = in.read_matrix("whitening");
    model.ica.learned = in.read_matrix("learned");
    model.ica.basis = in.read_matrix("basis");
    in.expect("pre");
    const std::string pre_kind = in.next_token("pre-projection kind");
    if (pre_kind == "none") {
        model.ica.pre_projection.reset();
    } else if (pre_kind == "shared") {
        model.ica.pre_projection = model.eigen;
    } else if (pre_kind == "own") {
        model.ica.pre_projection = in.read_eigen();
    } else {
        throw FormatError("model file: unknown pre-projection kind '" + pre_kind + "'");
    }

    in.set_section("NET_PCA");
    in.expect("NET_PCA");
    model.net_pca = in.read_net();
    in.set_section("NET_ICA");
    in.expect("NET_ICA");
    model.net_ica = in.read_net();

    in.set_section("FUSION");
    in.expect("FUSION");
    in.expect("threshold_pca");
    model.fusion.threshold_pca = in.next_double("threshold_pca");
    in.expect("threshold_ica");
    model.fusion.threshold_ica = in.next_double("threshold_ica");
    in.set_section("END");
    in.expect("END");
    if (!in.at_end())
        throw FormatError("model file: unexpected content after END");

    detail::validate_model(model);

    // Rebuild the composed separating map and its inverse from the factors.
    model.ica.unmixing = matmul(model.ica.learned, model.ica.whitening);
    model.ica.unmixing_inv = invert(model.ica.unmixing);
    return model;
}

inline void save_model(const HybridModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // binary: keep \n exactly as written
    if (!out) throw IoError("cannot write model file: " + path.string());
    const std::string text = serialize_model(model);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("failed while writing model file: " + path.string());
}

inline HybridModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_model(std::move(text).str());
}

} // namespace hybridface
