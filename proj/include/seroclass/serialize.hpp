#ifndef SEROCLASS_SERIALIZE_HPP_
#define SEROCLASS_SERIALIZE_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "seroclass/classifier.hpp"
#include "seroclass/harness.hpp"
#include "seroclass/ingest.hpp"
#include "seroclass/prevalence.hpp"

namespace seroclass {

using json = nlohmann::json;

// Shortest exact decimal representation (%.17g); used for every number we
// write to CSV so replayed runs are byte-identical.
std::string format_double(double v);

// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string fnv1a64_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& doc);

// --- density models ---------------------------------------------------
// Parametric models serialize to a single JSON document.  Gridded models
// additionally write the (node_x, node_y, value) triples to a CSV next to
// the JSON sidecar.
json model_to_json(const TruncatedDensity& density, const std::string& grid_csv_name = "");
void save_model(const TruncatedDensity& density, const std::string& path);
TruncatedDensity load_model(const std::string& path);

// --- classification rules ----------------------------------------------
json rule_to_json(const ClassificationRule& rule, const std::string& pos_model_path,
                  const std::string& neg_model_path);
ClassificationRule load_rule(const std::string& path);

// --- estimates and reports ----------------------------------------------
json estimate_to_json(const PrevalenceEstimate& est);
json adaptive_to_json(const AdaptiveResult& result);

void write_rejections_csv(const std::string& path, std::span<const Rejection> rejections);
void write_labels_csv(const std::string& path,
                      std::span<const std::string> sample_ids,
                      std::span<const Label> labels, std::span<const double> scores);
void write_sweep_csv(const std::string& path, const SweepReport& report);
void write_contours_csv(const std::string& path,
                        std::span<const std::pair<double, std::vector<ContourPolyline>>>
                            families);
void write_mc_cells_csv(const std::string& path, const McErrorReport& report);

}  // namespace seroclass

#endif  // SEROCLASS_SERIALIZE_HPP_
