#include "seroclass/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace seroclass {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw DataError("failed writing file: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw DataError("invalid JSON in " + path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

json model_to_json(const TruncatedDensity& density, const std::string& grid_csv_name) {
    json doc;
    doc["family"] = to_string(density.family());
    doc["domain"] = {{"lo", density.domain().lo}, {"hi", density.domain().hi}};
    doc["norm_const"] = density.norm_const();
    doc["shape_integral"] = density.shape_integral();
    doc["convergence"] = {{"refine_delta_rel", density.refine_delta_rel()},
                          {"converged", density.refine_converged()}};
    switch (density.family()) {
        case Family::negative: {
            const auto& p = density.negative_params();
            doc["params"] = {{"theta", p.theta},
                             {"k", p.k},
                             {"alpha", p.alpha},
                             {"mu", p.mu},
                             {"beta", p.beta}};
            break;
        }
        case Family::positive: {
            const auto& p = density.positive_params();
            doc["params"] = {{"alpha", p.alpha},
                             {"beta_shape", p.beta_shape},
                             {"theta", p.theta},
                             {"mu", p.mu},
                             {"z_scale", p.z_scale}};
            break;
        }
        case Family::gridded: {
            const auto& g = density.gridded();
            doc["grid"] = {{"nx", g.xs.size()},
                           {"ny", g.ys.size()},
                           {"values_csv", grid_csv_name}};
            break;
        }
    }
    return doc;
}

namespace {
std::string grid_csv_path_for(const std::string& model_path) {
    fs::path p(model_path);
    p.replace_extension(".grid.csv");
    return p.string();
}
}  // namespace

void save_model(const TruncatedDensity& density, const std::string& path) {
    std::string grid_name;
    if (density.family() == Family::gridded) {
        const std::string csv_path = grid_csv_path_for(path);
        grid_name = fs::path(csv_path).filename().string();
        const auto& g = density.gridded();
        std::string out = "node_x,node_y,value\n";
        for (std::size_t j = 0; j < g.ys.size(); ++j)
            for (std::size_t i = 0; i < g.xs.size(); ++i)
                out += format_double(g.xs[i]) + "," + format_double(g.ys[j]) + "," +
                       format_double(g.values[j * g.xs.size() + i]) + "\n";
        write_text_file(csv_path, out);
    }
    write_json_file(path, model_to_json(density, grid_name));
}

TruncatedDensity load_model(const std::string& path) {
    const json doc = read_json_file(path);
    try {
        const Family family = family_from_string(doc.at("family"));
        const DomainSpec domain{doc.at("domain").at("lo"), doc.at("domain").at("hi")};
        const double norm_const = doc.at("norm_const");
        const double shape_integral = doc.at("shape_integral");
        const double delta = doc.at("convergence").at("refine_delta_rel");

        TruncatedDensity::Model model;
        if (family == Family::negative) {
            const auto& p = doc.at("params");
            NegativeModelParams np{p.at("theta"), p.at("k"), p.at("alpha"), p.at("mu"),
                                   p.at("beta")};
            np.validate();
            model = np;
        } else if (family == Family::positive) {
            const auto& p = doc.at("params");
            PositiveModelParams pp{p.at("alpha"), p.at("beta_shape"), p.at("theta"),
                                   p.at("mu"), p.at("z_scale")};
            pp.validate();
            model = pp;
        } else {
            const std::string csv_name = doc.at("grid").at("values_csv");
            const fs::path csv_path = fs::path(path).parent_path() / csv_name;
            GriddedData g;
            const std::size_t nx = doc.at("grid").at("nx");
            const std::size_t ny = doc.at("grid").at("ny");
            std::ifstream in(csv_path);
            if (!in) throw DataError("cannot open grid CSV: " + csv_path.string());
            std::string line;
            std::getline(in, line);  // header
            g.values.reserve(nx * ny);
            std::vector<double> xs, ys;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                double x, y, v;
                if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3)
                    throw DataError("malformed grid CSV row in " + csv_path.string());
                xs.push_back(x);
                ys.push_back(y);
                g.values.push_back(v);
            }
            if (g.values.size() != nx * ny)
                throw DataError("grid CSV size mismatch in " + csv_path.string());
            g.xs.assign(xs.begin(), xs.begin() + nx);
            g.ys.resize(ny);
            for (std::size_t j = 0; j < ny; ++j) g.ys[j] = ys[j * nx];
            g.validate();
            model = std::move(g);
        }
        return TruncatedDensity(std::move(model), domain, norm_const, shape_integral,
                                delta);
    } catch (const json::exception& e) {
        throw DataError("model JSON " + path + " missing fields: " + e.what());
    }
}

json rule_to_json(const ClassificationRule& rule, const std::string& pos_model_path,
                  const std::string& neg_model_path) {
    json doc;
    doc["kind"] = rule.kind() == RuleKind::binary ? "binary" : "ternary";
    if (rule.kind() == RuleKind::binary)
        doc["prevalence"] = rule.prevalence();
    else
        doc["interval"] = {{"p_lo", rule.interval().p_lo}, {"p_hi", rule.interval().p_hi}};
    doc["weights"] = {{"false_positive", rule.weights().false_positive},
                      {"false_negative", rule.weights().false_negative}};
    doc["pos_model"] = pos_model_path;
    doc["neg_model"] = neg_model_path;
    return doc;
}

ClassificationRule load_rule(const std::string& path) {
    const json doc = read_json_file(path);
    try {
        const fs::path dir = fs::path(path).parent_path();
        auto pos = std::make_shared<TruncatedDensity>(
            load_model((dir / doc.at("pos_model").get<std::string>()).string()));
        auto neg = std::make_shared<TruncatedDensity>(
            load_model((dir / doc.at("neg_model").get<std::string>()).string()));
        ClassWeights weights;
        if (doc.contains("weights")) {
            weights.false_positive = doc["weights"].at("false_positive");
            weights.false_negative = doc["weights"].at("false_negative");
        }
        if (doc.at("kind") == "binary")
            return ClassificationRule::binary(doc.at("prevalence"), pos, neg, weights);
        return ClassificationRule::ternary(
            {doc.at("interval").at("p_lo"), doc.at("interval").at("p_hi")}, pos, neg,
            weights);
    } catch (const json::exception& e) {
        throw DataError("rule JSON " + path + " missing fields: " + e.what());
    }
}

json estimate_to_json(const PrevalenceEstimate& est) {
    return {{"p_hat", est.p_hat},
            {"empirical_fraction", est.empirical_fraction},
            {"pos_mass", est.pos_mass},
            {"neg_mass", est.neg_mass},
            {"clamped", est.clamped},
            {"sample_count", est.sample_count}};
}

json adaptive_to_json(const AdaptiveResult& result) {
    json trace = json::array();
    for (const auto& est : result.estimates) trace.push_back(estimate_to_json(est));
    std::size_t n_pos = 0, n_neg = 0, n_hold = 0;
    for (Label l : result.labels) {
        if (l == Label::positive) ++n_pos;
        else if (l == Label::negative) ++n_neg;
        else ++n_hold;
    }
    return {{"iterations", trace},
            {"converged", result.converged},
            {"final_p_hat",
             result.estimates.empty() ? 0.0 : result.estimates.back().p_hat},
            {"label_counts",
             {{"positive", n_pos}, {"negative", n_neg}, {"holdout", n_hold}}}};
}

void write_rejections_csv(const std::string& path, std::span<const Rejection> rejections) {
    std::string out = "sample_id,reason\n";
    for (const auto& r : rejections) out += r.sample_id + "," + r.reason + "\n";
    write_text_file(path, out);
}

void write_labels_csv(const std::string& path, std::span<const std::string> sample_ids,
                      std::span<const Label> labels, std::span<const double> scores) {
    std::string out = "sample_id,label,score\n";
    for (std::size_t i = 0; i < sample_ids.size(); ++i)
        out += sample_ids[i] + "," + to_string(labels[i]) + "," +
               format_double(scores[i]) + "\n";
    write_text_file(path, out);
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
    std::string out = "q,false_pos,false_neg,total\n";
    for (const auto& row : report.rows)
        out += format_double(row.q) + "," + format_double(row.false_pos) + "," +
               format_double(row.false_neg) + "," + format_double(row.total) + "\n";
    write_text_file(path, out);
}

void write_contours_csv(const std::string& path,
                        std::span<const std::pair<double, std::vector<ContourPolyline>>>
                            families) {
    std::string out = "prevalence,polyline_id,side,x,y\n";
    for (const auto& [prevalence, polylines] : families) {
        int id = 0;
        for (const auto& poly : polylines) {
            const char* side = poly.side == BoundarySide::binary ? "binary"
                               : poly.side == BoundarySide::lower ? "lower"
                                                                  : "upper";
            for (const auto& pt : poly.points)
                out += format_double(prevalence) + "," + std::to_string(id) + "," + side +
                       "," + format_double(pt.lx) + "," + format_double(pt.ly) + "\n";
            ++id;
        }
    }
    write_text_file(path, out);
}

void write_mc_cells_csv(const std::string& path, const McErrorReport& report) {
    std::string out =
        "p,sample_size,mean_error,std_error,mean_plus_3sigma,"
        "mean_prev_rel_error,prev_rel_error_plus_3sigma,failed_trials\n";
    for (const auto& c : report.cells)
        out += format_double(c.p) + "," + std::to_string(c.sample_size) + "," +
               format_double(c.mean_error) + "," + format_double(c.std_error) + "," +
               format_double(c.mean_plus_3sigma) + "," +
               format_double(c.mean_prev_rel_error) + "," +
               format_double(c.prev_rel_error_plus_3sigma) + "," +
               std::to_string(c.failed_trials) + "\n";
    write_text_file(path, out);
}

}  // namespace seroclass
