#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medeeg/cv.hpp"
#include "medeeg/error.hpp"
#include "medeeg/synth.hpp"

namespace medeeg::cli {

namespace fs = std::filesystem;

struct ExperimentConfig {
  cv::Pipeline pipeline{cv::Pipeline::CspLda};
  Band band{Band::Beta};
  cv::CvMode mode{cv::CvMode::IntraSubject10Fold};
  cv::Hyperparams hyperparams;
  // Mandatory; validate() rejects a config that leaves any of them unset.
  std::optional<std::uint64_t> seed_cohort;
  std::optional<std::uint64_t> seed_plan;
  std::optional<std::uint64_t> seed_train;
  fs::path data_dir;
  fs::path out_dir;
  std::optional<double> notch_hz;
  // grid for cmd_sweep
  std::vector<double> alphas = cv::default_alphas();
  std::vector<int> pair_counts = cv::default_pair_counts();

  void validate() const;  // InvalidParams
  cv::Seeds seeds() const;
};

struct SynthConfig {
  synth::SynthParams params;
  bool seed_given{false};
  fs::path out_dir;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
SynthConfig synth_from_json(const nlohmann::json& j);
nlohmann::json read_json_file(const fs::path& path);

// Thrown for anything detected before the computation starts; maps to exit 2.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit ValidationError(const Error& e) : std::runtime_error(e.what()), code_(e.code()) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

void cmd_synth(const SynthConfig& cfg);
/// Writes out_dir/report.json and out_dir/report.csv.
void cmd_run(const ExperimentConfig& cfg);
/// Writes out_dir/sweep.csv (pair counts x alphas) and out_dir/sweep.json.
void cmd_sweep(const ExperimentConfig& cfg);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace medeeg::cli
