#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medeeg/core.hpp"
#include "medeeg/cv.hpp"
#include "medeeg/exec.hpp"

namespace medeeg::io {

namespace fs = std::filesystem;
using Bytes = std::vector<unsigned char>;

// EEGB, little-endian:
//   "EEGB" | version u16 | n_channels u16 | n_samples u32 | sample_rate f32 |
//   condition u8 (0 rest, 1 meditation) | 3 reserved zero bytes |
//   float32 samples, channel-major.
inline constexpr std::uint16_t kEegbVersion = 1;
inline constexpr std::size_t kEegbHeaderSize = 20;

Bytes encode_eegb(const Recording& rec);
Recording decode_eegb(std::span<const unsigned char> bytes, const std::string& subject_id);

void write_eegb(const fs::path& path, const Recording& rec);
Recording read_eegb(const fs::path& path, const std::string& subject_id);

Bytes read_file(const fs::path& path);
/// Writes through a temporary sibling and renames, so readers never see a partial file.
void write_file_atomic(const fs::path& path, std::span<const unsigned char> bytes);
void write_file_atomic(const fs::path& path, const std::string& text);

std::string sha256_hex(std::span<const unsigned char> bytes);

struct ManifestEntry {
  std::string subject_id;
  Condition condition{Condition::Rest};
  std::string file;  // relative to the manifest directory
  std::string sha256;
};

nlohmann::json manifest_to_json(std::span<const ManifestEntry> entries);
/// Structural validation only; throws FormatError.
std::vector<ManifestEntry> manifest_from_json(const nlohmann::json& j);

/// Reads dir/manifest.json, checks every file's hash, and returns the raw
/// cohort (no filtering). Subjects keep manifest order of first appearance.
CohortDataset load_cohort_raw(const fs::path& dir);

/// load_cohort_raw followed by an optional notch and the band-pass into band.
CohortDataset load_cohort(const fs::path& dir, Band band, std::optional<double> notch_hz = std::nullopt,
                          Exec exec = Exec::Parallel);

/// Shortest text that parses back to exactly v.
std::string format_double(double v);
double parse_double(std::string_view text);

nlohmann::json report_to_json(const cv::CvReport& report);
nlohmann::json reports_to_json(std::span<const cv::CvReport> reports);

/// Per-fold CSV: subject,fold,n_test,accuracy_pct,k.
std::string report_csv(const cv::CvReport& report);

struct SweepTable {
  std::vector<int> pair_counts;                 // rows
  std::vector<double> alphas;                   // columns, 0 = classical
  std::vector<std::vector<cv::Summary>> cells;  // [row][column]
};

/// Grid in the appendix layout: one row per pair count, one column per alpha
/// (the zero alpha labelled "classical"), cells "mean±sd" in percent.
/// reports must come from grid_sweep with the same grids.
std::string sweep_csv(std::span<const cv::CvReport> reports, std::span<const double> alphas,
                      std::span<const int> pair_counts);
SweepTable parse_sweep_csv(const std::string& text);

}  // namespace medeeg::io
