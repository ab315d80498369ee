#ifndef SEROCLASS_INGEST_HPP_
#define SEROCLASS_INGEST_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seroclass/types.hpp"

namespace seroclass {

// One assay measurement row in raw instrument units.
struct RawSampleRecord {
    std::string sample_id;
    double mfi_a = 0.0;     // raw mean-fluorescence intensity, channel A (RBD)
    double mfi_b = 0.0;     // raw MFI, channel B (S1)
    double reference = 1.0; // reference signal used for normalization
    SampleLabel label = SampleLabel::unknown;
    std::optional<int> days_since_onset;
};

// Column-name mapping for CSV ingestion.  The `days` column is optional;
// all others must be present in the header.
struct CsvSchema {
    std::string id = "id";
    std::string mfi_a = "rbd";
    std::string mfi_b = "s1";
    std::string reference = "ref";
    std::string label = "label";
    std::string days = "days";
};

struct ParseIssue {
    std::size_t line = 0;  // 1-based line number in the file
    std::string message;
};

struct ParseResult {
    std::vector<RawSampleRecord> records;
    std::vector<ParseIssue> issues;  // malformed rows, reported not dropped silently
};

// Comma-separated, first row header, '.' decimal separator, no quoting.
// Throws DataError for a missing file or missing mapped column; malformed
// rows are collected in `issues`.
ParseResult parse_csv(const std::string& path, const CsvSchema& schema = {});

struct PreprocessConfig {
    double offset = 300.0;           // added to raw MFI before normalization
    double rejection_floor = -300.0; // raw MFI below this rejects the record
    std::optional<int> min_onset_days = 7;  // applies to positive-labeled records
    bool log_transform = true;

    void validate() const;
};

struct PreprocessedPoint {
    std::string sample_id;
    SampleLabel label = SampleLabel::unknown;
    LogPoint point;
};

struct Rejection {
    std::string sample_id;
    std::string reason;
};

struct PreprocessResult {
    std::vector<PreprocessedPoint> points;
    std::vector<Rejection> rejections;
    // Per-channel divisors applied in the relative-scale step (the smallest
    // post-normalization value over the accepted set).
    double scale_a = 1.0;
    double scale_b = 1.0;
};

// Preprocessing chain, applied per channel in order:
//   1. reject if either raw MFI < rejection_floor
//   2. reject positive-labeled records with days_since_onset < min_onset_days
//   3. add offset
//   4. divide by the record's reference signal
//   5. divide by the smallest post-normalization value of the channel
//      (computed over accepted records only)
//   6. natural logarithm
// Deterministic; throws DataError when every record is rejected.
PreprocessResult preprocess(std::span<const RawSampleRecord> records,
                            const PreprocessConfig& cfg = {});

}  // namespace seroclass

#endif  // SEROCLASS_INGEST_HPP_
