#include "seroclass/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace seroclass {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

bool parse_label(std::string s, SampleLabel& out) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (s == "positive") out = SampleLabel::positive;
    else if (s == "negative") out = SampleLabel::negative;
    else if (s == "unknown") out = SampleLabel::unknown;
    else return false;
    return true;
}

std::ptrdiff_t find_column(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
}

}  // namespace

ParseResult parse_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw DataError("empty input file (no header): " + path);
    const auto header = split_fields(line);

    const std::ptrdiff_t c_id = find_column(header, schema.id);
    const std::ptrdiff_t c_a = find_column(header, schema.mfi_a);
    const std::ptrdiff_t c_b = find_column(header, schema.mfi_b);
    const std::ptrdiff_t c_ref = find_column(header, schema.reference);
    const std::ptrdiff_t c_label = find_column(header, schema.label);
    const std::ptrdiff_t c_days = find_column(header, schema.days);  // optional
    for (auto [col, name] : {std::pair{c_id, schema.id}, {c_a, schema.mfi_a},
                             {c_b, schema.mfi_b}, {c_ref, schema.reference},
                             {c_label, schema.label}}) {
        if (col < 0)
            throw DataError("column '" + name + "' not found in header of " + path);
    }

    ParseResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        auto field = [&](std::ptrdiff_t col) -> const std::string* {
            return (col >= 0 && col < static_cast<std::ptrdiff_t>(fields.size()))
                       ? &fields[col]
                       : nullptr;
        };

        RawSampleRecord rec;
        const std::string* f = field(c_id);
        if (!f) {
            result.issues.push_back({line_no, "too few fields"});
            continue;
        }
        rec.sample_id = *f;

        bool ok = true;
        std::string msg;
        if (const auto* s = field(c_a); !s || !parse_double(*s, rec.mfi_a)) {
            ok = false;
            msg = "non-numeric value in column '" + schema.mfi_a + "'";
        } else if (const auto* t = field(c_b); !t || !parse_double(*t, rec.mfi_b)) {
            ok = false;
            msg = "non-numeric value in column '" + schema.mfi_b + "'";
        } else if (const auto* u = field(c_ref); !u || !parse_double(*u, rec.reference)) {
            ok = false;
            msg = "non-numeric value in column '" + schema.reference + "'";
        } else if (const auto* v = field(c_label); !v || !parse_label(*v, rec.label)) {
            ok = false;
            msg = "unrecognized label in column '" + schema.label + "'";
        }
        if (ok && c_days >= 0) {
            if (const auto* d = field(c_days); d && !d->empty()) {
                double days = 0.0;
                if (!parse_double(*d, days) || days < 0.0) {
                    ok = false;
                    msg = "invalid value in column '" + schema.days + "'";
                } else {
                    rec.days_since_onset = static_cast<int>(days);
                }
            }
        }
        if (!ok) {
            result.issues.push_back({line_no, msg});
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

void PreprocessConfig::validate() const {
    if (offset < 0.0) throw ConfigError("preprocess: offset must be >= 0");
    if (rejection_floor > 0.0)
        throw ConfigError("preprocess: rejection_floor must be <= 0");
    if (offset + rejection_floor < 0.0)
        throw ConfigError("preprocess: offset + rejection_floor must be >= 0");
}

PreprocessResult preprocess(std::span<const RawSampleRecord> records,
                            const PreprocessConfig& cfg) {
    cfg.validate();
    PreprocessResult result;

    struct Accepted {
        const RawSampleRecord* rec;
        double va, vb;  // post-offset, reference-normalized values
    };
    std::vector<Accepted> accepted;
    accepted.reserve(records.size());

    for (const auto& rec : records) {
        if (rec.mfi_a < cfg.rejection_floor || rec.mfi_b < cfg.rejection_floor) {
            result.rejections.push_back({rec.sample_id, "below rejection floor"});
            continue;
        }
        if (cfg.min_onset_days && rec.label == SampleLabel::positive &&
            rec.days_since_onset && *rec.days_since_onset < *cfg.min_onset_days) {
            result.rejections.push_back({rec.sample_id, "symptom onset too recent"});
            continue;
        }
        if (rec.reference <= 0.0) {
            result.rejections.push_back({rec.sample_id, "nonpositive reference signal"});
            continue;
        }
        const double va = (rec.mfi_a + cfg.offset) / rec.reference;
        const double vb = (rec.mfi_b + cfg.offset) / rec.reference;
        // The floor guarantees post-offset values >= 0; exactly-zero values
        // cannot enter the logarithm, so they reject as well.
        if (va <= 0.0 || vb <= 0.0) {
            result.rejections.push_back({rec.sample_id, "nonpositive value after offset"});
            continue;
        }
        accepted.push_back({&rec, va, vb});
    }

    if (accepted.empty())
        throw DataError("preprocess: all records rejected, no output");

    double min_a = std::numeric_limits<double>::infinity();
    double min_b = std::numeric_limits<double>::infinity();
    for (const auto& a : accepted) {
        min_a = std::min(min_a, a.va);
        min_b = std::min(min_b, a.vb);
    }
    result.scale_a = min_a;
    result.scale_b = min_b;

    result.points.reserve(accepted.size());
    for (const auto& a : accepted) {
        double x = a.va / min_a;
        double y = a.vb / min_b;
        if (cfg.log_transform) {
            x = std::log(x);
            y = std::log(y);
        }
        result.points.push_back({a.rec->sample_id, a.rec->label, LogPoint{x, y}});
    }
    return result;
}

}  // namespace seroclass
