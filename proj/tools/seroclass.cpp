// Command-line front end: ingestion, model fitting, classification,
// prevalence estimation and the synthetic validation experiments, tied
// together by replayable run manifests.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "seroclass/fit.hpp"
#include "seroclass/harness.hpp"
#include "seroclass/ingest.hpp"
#include "seroclass/prevalence.hpp"
#include "seroclass/serialize.hpp"

namespace fs = std::filesystem;
using namespace seroclass;

namespace {

constexpr const char* kVersion = "seroclass 0.1.0";

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumeric = 4 };

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

// ---------------------------------------------------------------------------
// shared ingestion options
// ---------------------------------------------------------------------------

struct IngestConfig {
    std::string input;
    std::string col_id = "id", col_a = "rbd", col_b = "s1", col_ref = "ref";
    std::string col_label = "label", col_days = "days";
    double offset = 300.0;
    double rejection_floor = -300.0;
    int min_onset_days = 7;  // negative disables the filter

    json to_json() const {
        return {{"input", input},       {"col_id", col_id},
                {"col_a", col_a},       {"col_b", col_b},
                {"col_ref", col_ref},   {"col_label", col_label},
                {"col_days", col_days}, {"offset", offset},
                {"rejection_floor", rejection_floor},
                {"min_onset_days", min_onset_days}};
    }
    void from_json(const json& j) {
        get_if(j, "input", input);
        get_if(j, "col_id", col_id);
        get_if(j, "col_a", col_a);
        get_if(j, "col_b", col_b);
        get_if(j, "col_ref", col_ref);
        get_if(j, "col_label", col_label);
        get_if(j, "col_days", col_days);
        get_if(j, "offset", offset);
        get_if(j, "rejection_floor", rejection_floor);
        get_if(j, "min_onset_days", min_onset_days);
    }

    CsvSchema schema() const {
        return {col_id, col_a, col_b, col_ref, col_label, col_days};
    }
    PreprocessConfig preprocess_config() const {
        PreprocessConfig cfg;
        cfg.offset = offset;
        cfg.rejection_floor = rejection_floor;
        cfg.min_onset_days =
            min_onset_days < 0 ? std::nullopt : std::optional<int>(min_onset_days);
        return cfg;
    }

    void add_options(CLI::App* cmd) {
        cmd->add_option("--input", input, "Input CSV file")->required();
        cmd->add_option("--col-id", col_id, "Sample id column");
        cmd->add_option("--col-a", col_a, "Channel A (RBD) column");
        cmd->add_option("--col-b", col_b, "Channel B (S1) column");
        cmd->add_option("--col-ref", col_ref, "Reference signal column");
        cmd->add_option("--col-label", col_label, "Label column");
        cmd->add_option("--col-days", col_days, "Days-since-onset column (optional)");
        cmd->add_option("--offset", offset, "Additive offset applied to raw MFI");
        cmd->add_option("--rejection-floor", rejection_floor,
                        "Reject records with raw MFI below this");
        cmd->add_option("--min-onset-days", min_onset_days,
                        "Minimum symptom-onset age for positives (negative disables)");
    }
};

struct IngestedData {
    PreprocessResult pre;
    std::vector<ParseIssue> issues;
};

IngestedData ingest(const IngestConfig& cfg) {
    const ParseResult parsed = parse_csv(cfg.input, cfg.schema());
    for (const auto& issue : parsed.issues)
        std::cerr << "warning: " << cfg.input << ":" << issue.line << ": "
                  << issue.message << "\n";
    IngestedData data{preprocess(parsed.records, cfg.preprocess_config()),
                      parsed.issues};
    return data;
}

// ---------------------------------------------------------------------------
// manifest plumbing
// ---------------------------------------------------------------------------

struct RunOutcome {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const std::string& command,
                    const json& config, const RunOutcome& outcome) {
    json inputs = json::array();
    for (const auto& p : outcome.inputs)
        inputs.push_back({{"path", p}, {"fnv1a64", fnv1a64_file(p)}});
    json outputs = json::array();
    for (const auto& p : outcome.outputs)
        outputs.push_back({{"path", p}, {"fnv1a64", fnv1a64_file(p)}});
    const json doc = {{"command", command},
                      {"version", kVersion},
                      {"config", config},
                      {"inputs", inputs},
                      {"outputs", outputs}};
    write_json_file(path, doc);
}

std::string default_manifest_path(const std::string& primary_output) {
    return primary_output + ".manifest.json";
}

DensityPtr load_density(const std::string& path) {
    return std::make_shared<TruncatedDensity>(load_model(path));
}

// Split a comma-separated list of numbers.
std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitConfig {
    IngestConfig ingest;
    std::string family = "negative";
    std::string output = "model.json";
    std::string report;  // default: <output>.report.json
    double domain_lo = 0.0, domain_hi = 7.0;
    int nodes = 512;
    std::string scheme = "gauss";
    double z_scale = 9.0;
    int max_iterations = 2000;
    int restarts = 5;
    std::uint64_t seed = 12345;
    std::string manifest;

    json to_json() const {
        json j = ingest.to_json();
        j.update(json{{"family", family},
                      {"output", output},
                      {"report", report},
                      {"domain_lo", domain_lo},
                      {"domain_hi", domain_hi},
                      {"nodes", nodes},
                      {"scheme", scheme},
                      {"z_scale", z_scale},
                      {"max_iterations", max_iterations},
                      {"restarts", restarts},
                      {"seed", seed},
                      {"manifest", manifest}});
        return j;
    }
    static FitConfig from_json(const json& j) {
        FitConfig c;
        c.ingest.from_json(j);
        get_if(j, "family", c.family);
        get_if(j, "output", c.output);
        get_if(j, "report", c.report);
        get_if(j, "domain_lo", c.domain_lo);
        get_if(j, "domain_hi", c.domain_hi);
        get_if(j, "nodes", c.nodes);
        get_if(j, "scheme", c.scheme);
        get_if(j, "z_scale", c.z_scale);
        get_if(j, "max_iterations", c.max_iterations);
        get_if(j, "restarts", c.restarts);
        get_if(j, "seed", c.seed);
        get_if(j, "manifest", c.manifest);
        return c;
    }
};

QuadratureSpec quad_from(const std::string& scheme, int nodes) {
    if (scheme == "gauss") return {nodes, QuadScheme::tensor_gauss_legendre};
    if (scheme == "trapezoid") return {nodes, QuadScheme::tensor_trapezoid};
    throw ConfigError("unknown quadrature scheme: " + scheme);
}

RunOutcome run_fit(const FitConfig& cfg) {
    if (cfg.family != "negative" && cfg.family != "positive")
        throw ConfigError("fit: --family must be 'negative' or 'positive'");
    const DomainSpec domain{cfg.domain_lo, cfg.domain_hi};
    const QuadratureSpec quad = quad_from(cfg.scheme, cfg.nodes);
    const SampleLabel wanted =
        cfg.family == "negative" ? SampleLabel::negative : SampleLabel::positive;

    IngestedData data = ingest(cfg.ingest);
    auto rejections = data.pre.rejections;

    // Family-support filter: the untruncated likelihoods require z > 0
    // (negative) or 0 < z/z_scale < 1 (positive).
    std::vector<LogPoint> points;
    for (const auto& p : data.pre.points) {
        if (p.label != wanted) continue;
        const double z = rotate(p.point).z;
        const bool ok = cfg.family == "negative"
                            ? z > 0.0
                            : (z > 0.0 && z < cfg.z_scale);
        if (!ok) {
            rejections.push_back({p.sample_id, "outside family support"});
            continue;
        }
        points.push_back(p.point);
    }
    if (points.size() < 10)
        throw DataError("fit: fewer than 10 usable '" + cfg.family + "' points");

    FitOptions opts;
    opts.max_iterations = cfg.max_iterations;
    opts.restarts = cfg.restarts;
    opts.restart_seed = cfg.seed;

    json report;
    TruncatedDensity* fitted = nullptr;
    std::optional<TruncatedDensity> density;
    if (cfg.family == "negative") {
        const auto fit = fit_negative_mle(points, negative_moment_init(points), opts);
        density.emplace(normalize(fit.params, domain, quad));
        report["log_likelihood"] = fit.log_likelihood;
        report["init_log_likelihood"] = fit.init_log_likelihood;
        report["iterations"] = fit.iterations;
        report["converged"] = fit.converged;
        report["truncation_mass"] = density->shape_integral();
    } else {
        auto init = positive_moment_init(points, cfg.z_scale);
        const auto fit = fit_positive_mle(points, init, opts);
        density.emplace(normalize(fit.params, domain, quad));
        report["log_likelihood"] = fit.log_likelihood;
        report["init_log_likelihood"] = fit.init_log_likelihood;
        report["iterations"] = fit.iterations;
        report["converged"] = fit.converged;
        // The positive shape integrates to z_scale before truncation.
        report["truncation_mass"] = density->shape_integral() / cfg.z_scale;
    }
    fitted = &*density;
    report["points_used"] = points.size();
    report["rejections"] = rejections.size();

    const std::string report_path =
        cfg.report.empty() ? cfg.output + ".report.json" : cfg.report;
    const std::string rejections_path = cfg.output + ".rejections.csv";
    save_model(*fitted, cfg.output);
    write_json_file(report_path, report);
    write_rejections_csv(rejections_path, rejections);

    std::cout << "fit: " << cfg.family << " model from " << points.size()
              << " points, log-likelihood "
              << format_double(report["log_likelihood"].get<double>()) << "\n";
    return {{cfg.ingest.input}, {cfg.output, report_path, rejections_path}};
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

struct ClassifyConfig {
    IngestConfig ingest;
    std::string pos_model = "pos.json", neg_model = "neg.json";
    std::string mode = "binary";
    double prevalence = 0.5;
    double p_lo = 0.0, p_hi = 1.0;
    double w_fp = 1.0, w_fn = 1.0;
    std::string output = "labels.csv";
    std::string manifest;

    json to_json() const {
        json j = ingest.to_json();
        j.update(json{{"pos_model", pos_model},
                      {"neg_model", neg_model},
                      {"mode", mode},
                      {"prevalence", prevalence},
                      {"p_lo", p_lo},
                      {"p_hi", p_hi},
                      {"w_fp", w_fp},
                      {"w_fn", w_fn},
                      {"output", output},
                      {"manifest", manifest}});
        return j;
    }
    static ClassifyConfig from_json(const json& j) {
        ClassifyConfig c;
        c.ingest.from_json(j);
        get_if(j, "pos_model", c.pos_model);
        get_if(j, "neg_model", c.neg_model);
        get_if(j, "mode", c.mode);
        get_if(j, "prevalence", c.prevalence);
        get_if(j, "p_lo", c.p_lo);
        get_if(j, "p_hi", c.p_hi);
        get_if(j, "w_fp", c.w_fp);
        get_if(j, "w_fn", c.w_fn);
        get_if(j, "output", c.output);
        get_if(j, "manifest", c.manifest);
        return c;
    }
};

ClassificationRule rule_from_config(const ClassifyConfig& cfg, DensityPtr pos,
                                    DensityPtr neg) {
    const ClassWeights weights{cfg.w_fp, cfg.w_fn};
    if (cfg.mode == "binary")
        return ClassificationRule::binary(cfg.prevalence, pos, neg, weights);
    if (cfg.mode == "ternary")
        return ClassificationRule::ternary({cfg.p_lo, cfg.p_hi}, pos, neg, weights);
    throw ConfigError("classify: --mode must be 'binary' or 'ternary'");
}

RunOutcome run_classify(const ClassifyConfig& cfg) {
    auto pos = load_density(cfg.pos_model);
    auto neg = load_density(cfg.neg_model);
    const auto rule = rule_from_config(cfg, pos, neg);

    IngestedData data = ingest(cfg.ingest);
    auto rejections = data.pre.rejections;

    std::vector<std::string> ids;
    std::vector<Label> labels;
    std::vector<double> scores;
    // The score is the decision discriminant at the rule's prevalence
    // (binary: p; ternary: the positive-side endpoint p_lo).
    const double p_score =
        cfg.mode == "binary" ? rule.prevalence() : rule.interval().p_lo;
    for (const auto& p : data.pre.points) {
        if (!rule.domain().contains(p.point)) {
            rejections.push_back({p.sample_id, "outside model domain"});
            continue;
        }
        const double pv = pos->value(p.point);
        const double nv = neg->value(p.point);
        ids.push_back(p.sample_id);
        labels.push_back(rule.label_from_values(pv, nv));
        scores.push_back(cfg.w_fn * p_score * pv - cfg.w_fp * (1.0 - p_score) * nv);
    }
    if (ids.empty()) throw DataError("classify: no points inside the model domain");

    const std::string rejections_path = cfg.output + ".rejections.csv";
    write_labels_csv(cfg.output, ids, labels, scores);
    write_rejections_csv(rejections_path, rejections);

    std::size_t n_pos = 0, n_neg = 0, n_hold = 0;
    for (Label l : labels) {
        if (l == Label::positive) ++n_pos;
        else if (l == Label::negative) ++n_neg;
        else ++n_hold;
    }
    std::cout << "classify: positive=" << n_pos << " negative=" << n_neg
              << " holdout=" << n_hold << " rejected=" << rejections.size() << "\n";
    return {{cfg.ingest.input, cfg.pos_model, cfg.neg_model},
            {cfg.output, rejections_path}};
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateConfig {
    IngestConfig ingest;
    std::string pos_model = "pos.json", neg_model = "neg.json";
    double p_init = 0.5;
    double tol = 1e-4;
    int max_iterations = 20;
    int nodes = 512;
    std::string output_prefix = "estimate";
    std::string manifest;

    json to_json() const {
        json j = ingest.to_json();
        j.update(json{{"pos_model", pos_model},
                      {"neg_model", neg_model},
                      {"p_init", p_init},
                      {"tol", tol},
                      {"max_iterations", max_iterations},
                      {"nodes", nodes},
                      {"output_prefix", output_prefix},
                      {"manifest", manifest}});
        return j;
    }
    static EstimateConfig from_json(const json& j) {
        EstimateConfig c;
        c.ingest.from_json(j);
        get_if(j, "pos_model", c.pos_model);
        get_if(j, "neg_model", c.neg_model);
        get_if(j, "p_init", c.p_init);
        get_if(j, "tol", c.tol);
        get_if(j, "max_iterations", c.max_iterations);
        get_if(j, "nodes", c.nodes);
        get_if(j, "output_prefix", c.output_prefix);
        get_if(j, "manifest", c.manifest);
        return c;
    }
};

RunOutcome run_estimate(const EstimateConfig& cfg) {
    auto pos = load_density(cfg.pos_model);
    auto neg = load_density(cfg.neg_model);

    IngestedData data = ingest(cfg.ingest);
    auto rejections = data.pre.rejections;

    std::vector<std::string> ids;
    std::vector<LogPoint> points;
    for (const auto& p : data.pre.points) {
        if (!pos->domain().contains(p.point)) {
            rejections.push_back({p.sample_id, "outside model domain"});
            continue;
        }
        ids.push_back(p.sample_id);
        points.push_back(p.point);
    }
    if (points.empty()) throw DataError("estimate: no points inside the model domain");

    AdaptiveOptions opts;
    opts.p_init = cfg.p_init;
    opts.tol = cfg.tol;
    opts.max_iterations = cfg.max_iterations;
    opts.quad = {cfg.nodes, QuadScheme::tensor_gauss_legendre};

    const std::string estimate_path = cfg.output_prefix + ".estimate.json";
    const std::string labels_path = cfg.output_prefix + ".labels.csv";
    const std::string rejections_path = cfg.output_prefix + ".rejections.csv";

    AdaptiveResult result = [&] {
        try {
            return adaptive_classify(points, pos, neg, opts);
        } catch (const SeparationError& e) {
            // Persist the partial trace before propagating the failure.
            json trace = json::array();
            for (const auto& est : e.partial_trace)
                trace.push_back(estimate_to_json(est));
            write_json_file(estimate_path,
                            {{"error", "separation failure"}, {"iterations", trace}});
            throw;
        }
    }();

    json doc = adaptive_to_json(result);
    doc["p_init"] = cfg.p_init;
    write_json_file(estimate_path, doc);

    std::vector<double> scores(points.size());
    const double p_hat = result.estimates.back().p_hat;
    for (std::size_t i = 0; i < points.size(); ++i)
        scores[i] = p_hat * pos->value(points[i]) -
                    (1.0 - p_hat) * neg->value(points[i]);
    write_labels_csv(labels_path, ids, result.labels, scores);
    write_rejections_csv(rejections_path, rejections);

    std::cout << "estimate: p_hat=" << format_double(p_hat)
              << " iterations=" << result.estimates.size()
              << (result.converged ? " (converged)" : " (max iterations)") << "\n";
    return {{cfg.ingest.input, cfg.pos_model, cfg.neg_model},
            {estimate_path, labels_path, rejections_path}};
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateConfig {
    std::string pos_model = "pos.json", neg_model = "neg.json";
    std::string prevalences = "0.1";
    std::string samples = "1000";
    int trials = 1;
    std::string mode = "known";
    std::uint64_t seed = 1;
    int nodes = 512;
    double p_init = 0.5;
    double tol = 1e-4;
    int max_iterations = 20;
    int threads = 1;
    std::string emit_csv;
    double reference = 1000.0;
    double offset = 300.0;
    std::string out_dir = ".";
    std::string manifest;

    json to_json() const {
        return {{"pos_model", pos_model}, {"neg_model", neg_model},
                {"prevalences", prevalences}, {"samples", samples},
                {"trials", trials},       {"mode", mode},
                {"seed", seed},           {"nodes", nodes},
                {"p_init", p_init},       {"tol", tol},
                {"max_iterations", max_iterations},
                {"threads", threads},     {"emit_csv", emit_csv},
                {"reference", reference}, {"offset", offset},
                {"out_dir", out_dir},     {"manifest", manifest}};
    }
    static SimulateConfig from_json(const json& j) {
        SimulateConfig c;
        get_if(j, "pos_model", c.pos_model);
        get_if(j, "neg_model", c.neg_model);
        get_if(j, "prevalences", c.prevalences);
        get_if(j, "samples", c.samples);
        get_if(j, "trials", c.trials);
        get_if(j, "mode", c.mode);
        get_if(j, "seed", c.seed);
        get_if(j, "nodes", c.nodes);
        get_if(j, "p_init", c.p_init);
        get_if(j, "tol", c.tol);
        get_if(j, "max_iterations", c.max_iterations);
        get_if(j, "threads", c.threads);
        get_if(j, "emit_csv", c.emit_csv);
        get_if(j, "reference", c.reference);
        get_if(j, "offset", c.offset);
        get_if(j, "out_dir", c.out_dir);
        get_if(j, "manifest", c.manifest);
        return c;
    }
};

RunOutcome run_simulate(const SimulateConfig& cfg) {
    auto pos = load_density(cfg.pos_model);
    auto neg = load_density(cfg.neg_model);
    const auto prevalences = parse_list(cfg.prevalences);
    const auto sample_list = parse_list(cfg.samples);
    if (prevalences.empty() || sample_list.empty())
        throw ConfigError("simulate: prevalence and sample lists must be non-empty");

    if (!cfg.emit_csv.empty()) {
        // Emit a raw-unit CSV that round-trips through the preprocessing
        // chain: mfi = exp(l) * reference - offset.
        const double p = prevalences.front();
        const auto S = static_cast<std::size_t>(sample_list.front());
        const auto draw = sample_mixture(*pos, *neg, p, S, cfg.seed);
        std::string out = "id,rbd,s1,ref,label\n";
        char id[32];
        for (std::size_t i = 0; i < draw.points.size(); ++i) {
            std::snprintf(id, sizeof(id), "s%06zu", i);
            const double a = std::exp(draw.points[i].lx) * cfg.reference - cfg.offset;
            const double b = std::exp(draw.points[i].ly) * cfg.reference - cfg.offset;
            out += std::string(id) + "," + format_double(a) + "," + format_double(b) +
                   "," + format_double(cfg.reference) + "," +
                   (draw.truth_positive[i] ? "positive" : "negative") + "\n";
        }
        write_text_file(cfg.emit_csv, out);
        std::cout << "simulate: wrote " << draw.points.size() << " samples ("
                  << draw.positive_count << " positive) to " << cfg.emit_csv << "\n";
        return {{cfg.pos_model, cfg.neg_model}, {cfg.emit_csv}};
    }

    ExperimentConfig exp;
    exp.prevalence_grid = prevalences;
    for (double s : sample_list)
        exp.sample_sizes.push_back(static_cast<std::size_t>(s));
    exp.trials = cfg.trials;
    exp.base_seed = cfg.seed;
    exp.quad = {cfg.nodes, QuadScheme::tensor_gauss_legendre};
    exp.pos = pos;
    exp.neg = neg;
    exp.p_init = cfg.p_init;
    exp.tol = cfg.tol;
    exp.max_iterations = cfg.max_iterations;
    exp.threads = cfg.threads;

    const bool known = cfg.mode == "known";
    if (!known && cfg.mode != "adaptive")
        throw ConfigError("simulate: --mode must be 'known' or 'adaptive'");
    const auto report = mc_error_stats(exp, known);

    fs::create_directories(cfg.out_dir);
    const std::string cells_path = (fs::path(cfg.out_dir) / "mc_cells.csv").string();
    const std::string summary_path = (fs::path(cfg.out_dir) / "mc_summary.json").string();
    write_mc_cells_csv(cells_path, report);
    json exponents = json::array();
    for (const auto& e : report.std_exponents)
        exponents.push_back({{"p", e.p}, {"exponent", e.exponent}});
    write_json_file(summary_path,
                    {{"mode", cfg.mode},
                     {"std_exponents", exponents},
                     {"contraction_fraction", report.contraction_fraction},
                     {"cells", report.cells.size()}});
    std::cout << "simulate: " << report.cells.size() << " cells x " << cfg.trials
              << " trials (" << cfg.mode << ")\n";
    return {{cfg.pos_model, cfg.neg_model}, {cells_path, summary_path}};
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
    std::string pos_model = "pos.json", neg_model = "neg.json";
    double true_p = 0.1;
    double q_min = 0.01, q_max = 0.9;
    int q_count = 90;
    int nodes = 512;
    std::string output = "sweep.csv";
    std::string manifest;

    json to_json() const {
        return {{"pos_model", pos_model}, {"neg_model", neg_model},
                {"true_p", true_p},       {"q_min", q_min},
                {"q_max", q_max},         {"q_count", q_count},
                {"nodes", nodes},         {"output", output},
                {"manifest", manifest}};
    }
    static SweepConfig from_json(const json& j) {
        SweepConfig c;
        get_if(j, "pos_model", c.pos_model);
        get_if(j, "neg_model", c.neg_model);
        get_if(j, "true_p", c.true_p);
        get_if(j, "q_min", c.q_min);
        get_if(j, "q_max", c.q_max);
        get_if(j, "q_count", c.q_count);
        get_if(j, "nodes", c.nodes);
        get_if(j, "output", c.output);
        get_if(j, "manifest", c.manifest);
        return c;
    }
};

RunOutcome run_sweep(const SweepConfig& cfg) {
    auto pos = load_density(cfg.pos_model);
    auto neg = load_density(cfg.neg_model);
    const auto qs = linspace(cfg.q_min, cfg.q_max, cfg.q_count);
    const auto report = sweep_loss_vs_q(cfg.true_p, qs, pos, neg,
                                        {cfg.nodes, QuadScheme::tensor_gauss_legendre});
    write_sweep_csv(cfg.output, report);
    const std::string summary_path = cfg.output + ".summary.json";
    write_json_file(summary_path, {{"true_p", cfg.true_p},
                                   {"argmin_q", report.argmin_q},
                                   {"flat", report.flat}});
    std::cout << "sweep: argmin q=" << format_double(report.argmin_q)
              << (report.flat ? " (flat)" : "") << "\n";
    return {{cfg.pos_model, cfg.neg_model}, {cfg.output, summary_path}};
}

// ---------------------------------------------------------------------------
// contour
// ---------------------------------------------------------------------------

struct ContourConfig {
    std::string pos_model = "pos.json", neg_model = "neg.json";
    std::string prevalences = "0.5,0.1446,0.1,0.01,0.001";
    double p_lo = -1.0, p_hi = -1.0;  // >= 0 switches to a ternary family
    int resolution = 512;
    std::string output = "contours.csv";
    std::string manifest;

    json to_json() const {
        return {{"pos_model", pos_model}, {"neg_model", neg_model},
                {"prevalences", prevalences},
                {"p_lo", p_lo},           {"p_hi", p_hi},
                {"resolution", resolution},
                {"output", output},       {"manifest", manifest}};
    }
    static ContourConfig from_json(const json& j) {
        ContourConfig c;
        get_if(j, "pos_model", c.pos_model);
        get_if(j, "neg_model", c.neg_model);
        get_if(j, "prevalences", c.prevalences);
        get_if(j, "p_lo", c.p_lo);
        get_if(j, "p_hi", c.p_hi);
        get_if(j, "resolution", c.resolution);
        get_if(j, "output", c.output);
        get_if(j, "manifest", c.manifest);
        return c;
    }
};

RunOutcome run_contour(const ContourConfig& cfg) {
    auto pos = load_density(cfg.pos_model);
    auto neg = load_density(cfg.neg_model);
    std::vector<std::pair<double, std::vector<ContourPolyline>>> families;
    if (cfg.p_lo >= 0.0 && cfg.p_hi >= 0.0) {
        const auto rule = ClassificationRule::ternary({cfg.p_lo, cfg.p_hi}, pos, neg);
        families.emplace_back(cfg.p_lo, boundary_contour(rule, cfg.resolution));
    } else {
        for (double p : parse_list(cfg.prevalences)) {
            const auto rule = ClassificationRule::binary(p, pos, neg);
            families.emplace_back(p, boundary_contour(rule, cfg.resolution));
        }
    }
    write_contours_csv(cfg.output, families);
    std::cout << "contour: " << families.size() << " families written to "
              << cfg.output << "\n";
    return {{cfg.pos_model, cfg.neg_model}, {cfg.output}};
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

RunOutcome dispatch(const std::string& command, const json& config);

RunOutcome run_replay(const std::string& manifest_path) {
    const json doc = read_json_file(manifest_path);
    const std::string command = doc.at("command");
    // Inputs must match the recorded digests; otherwise the replay cannot
    // promise identical outputs.
    for (const auto& input : doc.at("inputs")) {
        const std::string path = input.at("path");
        if (fnv1a64_file(path) != input.at("fnv1a64").get<std::string>())
            throw DataError("replay: input " + path + " differs from the manifest digest");
    }
    RunOutcome outcome = dispatch(command, doc.at("config"));
    write_manifest(manifest_path, command, doc.at("config"), outcome);
    return outcome;
}

RunOutcome dispatch(const std::string& command, const json& config) {
    if (command == "fit") return run_fit(FitConfig::from_json(config));
    if (command == "classify") return run_classify(ClassifyConfig::from_json(config));
    if (command == "estimate") return run_estimate(EstimateConfig::from_json(config));
    if (command == "simulate") return run_simulate(SimulateConfig::from_json(config));
    if (command == "sweep") return run_sweep(SweepConfig::from_json(config));
    if (command == "contour") return run_contour(ContourConfig::from_json(config));
    throw ConfigError("replay: unknown command in manifest: " + command);
}

json load_config_overlay(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") return read_json_file(argv[i + 1]);
    return json::object();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) +
                 " - decision-theory classification for two-channel assay data"};
    app.require_subcommand(1);

    std::string config_path;  // consumed by the overlay pre-pass
    app.add_option("--config", config_path, "JSON config file (flags override)");

    json overlay;
    try {
        overlay = load_config_overlay(argc, argv);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }

    FitConfig fit_cfg = FitConfig::from_json(overlay);
    ClassifyConfig classify_cfg = ClassifyConfig::from_json(overlay);
    EstimateConfig estimate_cfg = EstimateConfig::from_json(overlay);
    SimulateConfig simulate_cfg = SimulateConfig::from_json(overlay);
    SweepConfig sweep_cfg = SweepConfig::from_json(overlay);
    ContourConfig contour_cfg = ContourConfig::from_json(overlay);
    std::string replay_manifest;

    auto* fit_cmd = app.add_subcommand("fit", "Fit a density model by MLE");
    fit_cfg.ingest.add_options(fit_cmd);
    fit_cmd->add_option("--family", fit_cfg.family, "negative|positive")->required();
    fit_cmd->add_option("--output", fit_cfg.output, "Model JSON path");
    fit_cmd->add_option("--report", fit_cfg.report, "Fit report path");
    fit_cmd->add_option("--domain-lo", fit_cfg.domain_lo, "Truncation domain lower edge");
    fit_cmd->add_option("--domain-hi", fit_cfg.domain_hi, "Truncation domain upper edge");
    fit_cmd->add_option("--nodes", fit_cfg.nodes, "Quadrature nodes per axis");
    fit_cmd->add_option("--scheme", fit_cfg.scheme, "gauss|trapezoid");
    fit_cmd->add_option("--z-scale", fit_cfg.z_scale, "Positive-family diagonal scale");
    fit_cmd->add_option("--max-iter", fit_cfg.max_iterations, "Optimizer iteration cap");
    fit_cmd->add_option("--restarts", fit_cfg.restarts, "Optimizer random restarts");
    fit_cmd->add_option("--seed", fit_cfg.seed, "Restart perturbation seed");
    fit_cmd->add_option("--manifest", fit_cfg.manifest, "Manifest path");

    auto* classify_cmd = app.add_subcommand("classify", "Label samples with a rule");
    classify_cfg.ingest.add_options(classify_cmd);
    classify_cmd->add_option("--pos-model", classify_cfg.pos_model, "Positive model JSON")
        ->required();
    classify_cmd->add_option("--neg-model", classify_cfg.neg_model, "Negative model JSON")
        ->required();
    classify_cmd->add_option("--mode", classify_cfg.mode, "binary|ternary");
    classify_cmd->add_option("--prevalence", classify_cfg.prevalence,
                             "Binary-rule prevalence");
    classify_cmd->add_option("--p-lo", classify_cfg.p_lo, "Ternary interval low end");
    classify_cmd->add_option("--p-hi", classify_cfg.p_hi, "Ternary interval high end");
    classify_cmd->add_option("--w-fp", classify_cfg.w_fp, "False-positive weight");
    classify_cmd->add_option("--w-fn", classify_cfg.w_fn, "False-negative weight");
    classify_cmd->add_option("--output", classify_cfg.output, "Labels CSV path");
    classify_cmd->add_option("--manifest", classify_cfg.manifest, "Manifest path");

    auto* estimate_cmd =
        app.add_subcommand("estimate", "Adaptive prevalence estimation");
    estimate_cfg.ingest.add_options(estimate_cmd);
    estimate_cmd->add_option("--pos-model", estimate_cfg.pos_model, "Positive model JSON")
        ->required();
    estimate_cmd->add_option("--neg-model", estimate_cfg.neg_model, "Negative model JSON")
        ->required();
    estimate_cmd->add_option("--p-init", estimate_cfg.p_init, "Initial prevalence");
    estimate_cmd->add_option("--tol", estimate_cfg.tol, "Fixed-point tolerance");
    estimate_cmd->add_option("--max-iter", estimate_cfg.max_iterations,
                             "Iteration cap (1 = single update)");
    estimate_cmd->add_option("--nodes", estimate_cfg.nodes, "Quadrature nodes per axis");
    estimate_cmd->add_option("--output-prefix", estimate_cfg.output_prefix,
                             "Prefix for estimate/labels/rejections files");
    estimate_cmd->add_option("--manifest", estimate_cfg.manifest, "Manifest path");

    auto* simulate_cmd =
        app.add_subcommand("simulate", "Synthetic draws and Monte Carlo error stats");
    simulate_cmd->add_option("--pos-model", simulate_cfg.pos_model, "Positive model JSON")
        ->required();
    simulate_cmd->add_option("--neg-model", simulate_cfg.neg_model, "Negative model JSON")
        ->required();
    simulate_cmd->add_option("--prevalences", simulate_cfg.prevalences,
                             "Comma-separated prevalence grid");
    simulate_cmd->add_option("--samples", simulate_cfg.samples,
                             "Comma-separated sample sizes");
    simulate_cmd->add_option("--trials", simulate_cfg.trials, "Trials per cell");
    simulate_cmd->add_option("--mode", simulate_cfg.mode, "known|adaptive");
    simulate_cmd->add_option("--seed", simulate_cfg.seed, "Base seed");
    simulate_cmd->add_option("--nodes", simulate_cfg.nodes, "Quadrature nodes per axis");
    simulate_cmd->add_option("--p-init", simulate_cfg.p_init, "Adaptive initial prevalence");
    simulate_cmd->add_option("--tol", simulate_cfg.tol, "Adaptive tolerance");
    simulate_cmd->add_option("--max-iter", simulate_cfg.max_iterations,
                             "Adaptive iteration cap");
    simulate_cmd->add_option("--threads", simulate_cfg.threads, "Worker threads");
    simulate_cmd->add_option("--emit-csv", simulate_cfg.emit_csv,
                             "Write one raw-unit sample CSV instead of running stats");
    simulate_cmd->add_option("--reference", simulate_cfg.reference,
                             "Reference signal for emitted CSV");
    simulate_cmd->add_option("--offset", simulate_cfg.offset,
                             "Offset used when emitting raw units");
    simulate_cmd->add_option("--out-dir", simulate_cfg.out_dir, "Report directory");
    simulate_cmd->add_option("--manifest", simulate_cfg.manifest, "Manifest path");

    auto* sweep_cmd = app.add_subcommand("sweep", "Loss versus assumed prevalence");
    sweep_cmd->add_option("--pos-model", sweep_cfg.pos_model, "Positive model JSON")
        ->required();
    sweep_cmd->add_option("--neg-model", sweep_cfg.neg_model, "Negative model JSON")
        ->required();
    sweep_cmd->add_option("--true-p", sweep_cfg.true_p, "True prevalence")->required();
    sweep_cmd->add_option("--q-min", sweep_cfg.q_min, "Grid lower end");
    sweep_cmd->add_option("--q-max", sweep_cfg.q_max, "Grid upper end");
    sweep_cmd->add_option("--q-count", sweep_cfg.q_count, "Grid size");
    sweep_cmd->add_option("--nodes", sweep_cfg.nodes, "Quadrature nodes per axis");
    sweep_cmd->add_option("--output", sweep_cfg.output, "Sweep CSV path");
    sweep_cmd->add_option("--manifest", sweep_cfg.manifest, "Manifest path");

    auto* contour_cmd = app.add_subcommand("contour", "Decision-boundary polylines");
    contour_cmd->add_option("--pos-model", contour_cfg.pos_model, "Positive model JSON")
        ->required();
    contour_cmd->add_option("--neg-model", contour_cfg.neg_model, "Negative model JSON")
        ->required();
    contour_cmd->add_option("--prevalences", contour_cfg.prevalences,
                            "Comma-separated binary prevalences");
    contour_cmd->add_option("--p-lo", contour_cfg.p_lo, "Ternary interval low end");
    contour_cmd->add_option("--p-hi", contour_cfg.p_hi, "Ternary interval high end");
    contour_cmd->add_option("--resolution", contour_cfg.resolution, "Lattice resolution");
    contour_cmd->add_option("--output", contour_cfg.output, "Contour CSV path");
    contour_cmd->add_option("--manifest", contour_cfg.manifest, "Manifest path");

    auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded manifest");
    replay_cmd->add_option("manifest", replay_manifest, "Manifest JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (replay_cmd->parsed()) {
            run_replay(replay_manifest);
            return kOk;
        }
        std::string command;
        json config;
        RunOutcome outcome;
        std::string manifest_path;
        if (fit_cmd->parsed()) {
            command = "fit";
            config = fit_cfg.to_json();
            outcome = run_fit(fit_cfg);
            manifest_path = fit_cfg.manifest;
        } else if (classify_cmd->parsed()) {
            command = "classify";
            config = classify_cfg.to_json();
            outcome = run_classify(classify_cfg);
            manifest_path = classify_cfg.manifest;
        } else if (estimate_cmd->parsed()) {
            command = "estimate";
            config = estimate_cfg.to_json();
            outcome = run_estimate(estimate_cfg);
            manifest_path = estimate_cfg.manifest;
        } else if (simulate_cmd->parsed()) {
            command = "simulate";
            config = simulate_cfg.to_json();
            outcome = run_simulate(simulate_cfg);
            manifest_path = simulate_cfg.manifest;
        } else if (sweep_cmd->parsed()) {
            command = "sweep";
            config = sweep_cfg.to_json();
            outcome = run_sweep(sweep_cfg);
            manifest_path = sweep_cfg.manifest;
        } else if (contour_cmd->parsed()) {
            command = "contour";
            config = contour_cfg.to_json();
            outcome = run_contour(contour_cfg);
            manifest_path = contour_cfg.manifest;
        }
        if (manifest_path.empty())
            manifest_path = default_manifest_path(outcome.outputs.front());
        write_manifest(manifest_path, command, config, outcome);
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
