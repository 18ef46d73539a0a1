#include "medeeg/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <set>

#include "medeeg/io.hpp"

namespace medeeg::cli {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidParams, msg);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    require(keys.count(key) > 0, "unknown key '" + key + "' in " + where);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (std::size_t start = 0; start <= text.size();) {
    const auto end = std::min(text.find(',', start), text.size());
    out.push_back(static_cast<int>(io::parse_double(std::string_view(text).substr(start, end - start))));
    start = end + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (std::size_t start = 0; start <= text.size();) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto item = std::string_view(text).substr(start, end - start);
    out.push_back(item == "classical" ? 0.0 : io::parse_double(item));
    start = end + 1;
  }
  return out;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

// Loads and checks everything a run needs before any computation starts.
CohortDataset load_validated(const ExperimentConfig& cfg) {
  try {
    cfg.validate();
    CohortDataset cohort = io::load_cohort(cfg.data_dir, cfg.band, cfg.notch_hz);
    const auto channels = cohort.subjects.front().meditation.n_channels();
    if (cfg.pipeline != cv::Pipeline::SvdNn) {
      require(2 * static_cast<Eigen::Index>(cfg.hyperparams.n_pairs) <= channels,
              "n_pairs exceeds half the channel count");
      for (int p : cfg.pair_counts) require(2 * static_cast<Eigen::Index>(p) <= channels, "pair count exceeds half the channel count");
    }
    return cohort;
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  require(seed_cohort && seed_plan && seed_train, "seeds cohort, plan and train are all required");
  require(!data_dir.empty() && fs::is_directory(data_dir), "data directory '" + data_dir.string() + "' does not exist");
  require(!out_dir.empty(), "output directory is required");
  const auto& hp = hyperparams;
  require(std::isfinite(hp.alpha) && hp.alpha >= 0.0, "alpha must be finite and >= 0");
  require(hp.n_pairs >= 1, "n_pairs must be >= 1");
  require(!hp.k_grid.empty(), "k_grid must not be empty");
  for (int k : hp.k_grid) require(k >= 1 && k <= svdnn::kDefaultWidth, "k values must lie in [1, 384]");
  if (hp.fixed_k) require(*hp.fixed_k >= 1 && *hp.fixed_k <= svdnn::kDefaultWidth, "fixed_k must lie in [1, 384]");
  require(hp.lstm.hidden >= 1 && hp.lstm.epochs >= 1 && hp.lstm.batch >= 1 && hp.lstm.adam.lr > 0, "bad lstm settings");
  require(hp.nn.batch >= 1 && hp.nn.max_epochs >= 1 && hp.nn.patience >= 1 && hp.nn.adam.lr > 0, "bad nn settings");
  require(!alphas.empty() && !pair_counts.empty(), "sweep grids must not be empty");
  for (double a : alphas) require(std::isfinite(a) && a >= 0.0, "sweep alphas must be finite and >= 0");
  for (int p : pair_counts) require(p >= 1, "sweep pair counts must be >= 1");
  if (notch_hz) require(*notch_hz > 0.0, "notch frequency must be positive");
}

cv::Seeds ExperimentConfig::seeds() const {
  validate();
  return {*seed_cohort, *seed_plan, *seed_train};
}

void SynthConfig::validate() const {
  require(seed_given, "seed is required");
  require(!out_dir.empty(), "output directory is required");
  params.validate();
}

ExperimentConfig experiment_from_json(const json& j) {
  reject_unknown_keys(j, {"pipeline", "band", "mode", "alpha", "n_pairs", "k_grid", "refine_k", "fixed_k", "lstm", "nn",
                          "seeds", "data_dir", "out_dir", "notch_hz", "alphas", "pair_counts"},
                      "experiment config");
  ExperimentConfig cfg;
  auto& hp = cfg.hyperparams;
  if (j.contains("pipeline")) cfg.pipeline = cv::parse_pipeline(j["pipeline"].get<std::string>());
  if (j.contains("band")) cfg.band = parse_band(j["band"].get<std::string>());
  if (j.contains("mode")) cfg.mode = cv::parse_mode(j["mode"].get<std::string>());
  read_if(j, "alpha", hp.alpha);
  read_if(j, "n_pairs", hp.n_pairs);
  read_if(j, "k_grid", hp.k_grid);
  read_if(j, "refine_k", hp.refine_k);
  if (j.contains("fixed_k") && !j["fixed_k"].is_null()) hp.fixed_k = j["fixed_k"].get<int>();
  if (j.contains("lstm")) {
    const auto& l = j["lstm"];
    reject_unknown_keys(l, {"hidden", "epochs", "batch", "lr"}, "lstm");
    read_if(l, "hidden", hp.lstm.hidden);
    read_if(l, "epochs", hp.lstm.epochs);
    read_if(l, "batch", hp.lstm.batch);
    read_if(l, "lr", hp.lstm.adam.lr);
  }
  if (j.contains("nn")) {
    const auto& n = j["nn"];
    reject_unknown_keys(n, {"lr", "batch", "max_epochs", "patience"}, "nn");
    read_if(n, "lr", hp.nn.adam.lr);
    read_if(n, "batch", hp.nn.batch);
    read_if(n, "max_epochs", hp.nn.max_epochs);
    read_if(n, "patience", hp.nn.patience);
  }
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    reject_unknown_keys(s, {"cohort", "plan", "train"}, "seeds");
    if (s.contains("cohort")) cfg.seed_cohort = s["cohort"].get<std::uint64_t>();
    if (s.contains("plan")) cfg.seed_plan = s["plan"].get<std::uint64_t>();
    if (s.contains("train")) cfg.seed_train = s["train"].get<std::uint64_t>();
  }
  if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("notch_hz") && !j["notch_hz"].is_null()) cfg.notch_hz = j["notch_hz"].get<double>();
  read_if(j, "alphas", cfg.alphas);
  read_if(j, "pair_counts", cfg.pair_counts);
  return cfg;
}

SynthConfig synth_from_json(const json& j) {
  reject_unknown_keys(j, {"n_subjects", "n_channels", "fs", "minutes_per_condition", "n_sources", "n_discriminative",
                          "class_variance_ratio", "subject_jitter", "noise_power", "band", "seed", "out_dir"},
                      "synth config");
  SynthConfig cfg;
  auto& p = cfg.params;
  read_if(j, "n_subjects", p.n_subjects);
  read_if(j, "n_channels", p.n_channels);
  read_if(j, "fs", p.fs);
  read_if(j, "minutes_per_condition", p.minutes_per_condition);
  read_if(j, "n_sources", p.n_sources);
  read_if(j, "n_discriminative", p.n_discriminative);
  read_if(j, "class_variance_ratio", p.class_variance_ratio);
  read_if(j, "subject_jitter", p.subject_jitter);
  read_if(j, "noise_power", p.noise_power);
  if (j.contains("band")) p.band = parse_band(j["band"].get<std::string>());
  if (j.contains("seed")) {
    p.seed = j["seed"].get<std::uint64_t>();
    cfg.seed_given = true;
  }
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  return cfg;
}

json read_json_file(const fs::path& path) {
  try {
    const auto bytes = io::read_file(path);
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ValidationError(ErrorCode::FormatError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ValidationError(e);
  }
}

void cmd_synth(const SynthConfig& cfg) {
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ValidationError(e);
  }
  prepare_out_dir(cfg.out_dir);
  std::vector<io::ManifestEntry> manifest;
  for (int i = 0; i < cfg.params.n_subjects; ++i) {
    const auto id = synth::subject_name(static_cast<std::size_t>(i));
    const auto subject = synth::generate_subject(cfg.params, synth::subject_seed(cfg.params, static_cast<std::size_t>(i)), id);
    for (const Recording* rec : {&subject.meditation, &subject.rest}) {
      const std::string file = id + "_" + std::string(to_string(rec->condition)) + ".eegb";
      const auto bytes = io::encode_eegb(*rec);
      io::write_file_atomic(cfg.out_dir / file, bytes);
      manifest.push_back({id, rec->condition, file, io::sha256_hex(bytes)});
    }
  }
  io::write_file_atomic(cfg.out_dir / "manifest.json", io::manifest_to_json(manifest).dump(2) + "\n");
}

void cmd_run(const ExperimentConfig& cfg) {
  const CohortDataset cohort = load_validated(cfg);
  const auto report = cv::run_experiment(cohort, cfg.pipeline, cfg.hyperparams, cfg.mode, cfg.seeds());
  const std::string report_json = io::report_to_json(report).dump(2) + "\n";
  const std::string report_csv = io::report_csv(report);
  prepare_out_dir(cfg.out_dir);
  io::write_file_atomic(cfg.out_dir / "report.json", report_json);
  io::write_file_atomic(cfg.out_dir / "report.csv", report_csv);
}

void cmd_sweep(const ExperimentConfig& cfg) {
  if (cfg.pipeline != cv::Pipeline::CspLda)
    throw ValidationError(ErrorCode::InvalidParams, "sweep is defined for the CspLda pipeline only");
  const CohortDataset cohort = load_validated(cfg);
  const auto reports = cv::grid_sweep(cohort, cfg.alphas, cfg.pair_counts, cfg.mode, cfg.seeds());
  const std::string csv = io::sweep_csv(reports, cfg.alphas, cfg.pair_counts);
  const std::string all = io::reports_to_json(reports).dump(2) + "\n";
  prepare_out_dir(cfg.out_dir);
  io::write_file_atomic(cfg.out_dir / "sweep.csv", csv);
  io::write_file_atomic(cfg.out_dir / "sweep.json", all);
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Meditation-state EEG classification experiments"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cohort as EEGB files plus manifest.json");
  std::string synth_config;
  synth::SynthParams sp;
  std::uint64_t synth_seed = 0;
  std::string synth_band;
  std::string synth_out;
  synth_cmd->add_option("--config", synth_config, "JSON config");
  synth_cmd->add_option("--subjects", sp.n_subjects);
  synth_cmd->add_option("--channels", sp.n_channels);
  synth_cmd->add_option("--minutes", sp.minutes_per_condition, "minutes per condition");
  synth_cmd->add_option("--sources", sp.n_sources);
  synth_cmd->add_option("--discriminative", sp.n_discriminative);
  synth_cmd->add_option("--ratio", sp.class_variance_ratio, "meditation/rest variance ratio of the planted sources");
  synth_cmd->add_option("--jitter", sp.subject_jitter, "per-subject mixing perturbation");
  synth_cmd->add_option("--noise", sp.noise_power);
  synth_cmd->add_option("--band", synth_band);
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out);

  // run and sweep share their flags
  struct ExpFlags {
    std::string config, pipeline, band, mode, k_grid, data, out, alphas, pair_counts;
    double alpha = 0, notch = 0;
    int pairs = 0, fixed_k = 0, lstm_epochs = 0;
    std::uint64_t seed_cohort = 0, seed_plan = 0, seed_train = 0;
  };
  ExpFlags rf, wf;
  auto add_exp_flags = [](CLI::App* cmd, ExpFlags& f) {
    cmd->add_option("--config", f.config, "JSON config; flags override its values");
    cmd->add_option("--pipeline", f.pipeline, "CspLda | CspLdaLstm | SvdNn");
    cmd->add_option("--band", f.band, "Alpha | Beta | LowGamma | HighGamma");
    cmd->add_option("--mode", f.mode, "intra | inter");
    cmd->add_option("--alpha", f.alpha, "Tikhonov weight (0 = classical CSP)");
    cmd->add_option("--pairs", f.pairs, "filter pairs");
    cmd->add_option("--k-grid", f.k_grid, "comma-separated k candidates");
    cmd->add_option("--fixed-k", f.fixed_k, "skip k selection");
    cmd->add_option("--lstm-epochs", f.lstm_epochs);
    cmd->add_option("--notch", f.notch, "notch frequency in Hz applied before the band-pass");
    cmd->add_option("--seed-cohort", f.seed_cohort);
    cmd->add_option("--seed-plan", f.seed_plan);
    cmd->add_option("--seed-train", f.seed_train);
    cmd->add_option("--data", f.data, "directory holding manifest.json");
    cmd->add_option("--out", f.out, "output directory");
  };
  auto* run_cmd = app.add_subcommand("run", "Run one pipeline under one protocol; writes report.json and report.csv");
  add_exp_flags(run_cmd, rf);
  auto* sweep_cmd = app.add_subcommand("sweep", "CSP-LDA alpha x filter-pair grid; writes sweep.csv and sweep.json");
  add_exp_flags(sweep_cmd, wf);
  sweep_cmd->add_option("--alphas", wf.alphas, "comma-separated alphas; 'classical' = 0");
  sweep_cmd->add_option("--pair-counts", wf.pair_counts, "comma-separated pair counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto build_experiment = [](CLI::App* cmd, const ExpFlags& f) {
    ExperimentConfig cfg;
    try {
      if (!f.config.empty()) cfg = experiment_from_json(read_json_file(f.config));
      auto given = [&](const char* name) { return cmd->count(name) > 0; };
      auto& hp = cfg.hyperparams;
      if (given("--pipeline")) cfg.pipeline = cv::parse_pipeline(f.pipeline);
      if (given("--band")) cfg.band = parse_band(f.band);
      if (given("--mode")) cfg.mode = cv::parse_mode(f.mode);
      if (given("--alpha")) hp.alpha = f.alpha;
      if (given("--pairs")) hp.n_pairs = f.pairs;
      if (given("--k-grid")) hp.k_grid = parse_int_list(f.k_grid);
      if (given("--fixed-k")) hp.fixed_k = f.fixed_k;
      if (given("--lstm-epochs")) hp.lstm.epochs = f.lstm_epochs;
      if (given("--notch")) cfg.notch_hz = f.notch;
      if (given("--seed-cohort")) cfg.seed_cohort = f.seed_cohort;
      if (given("--seed-plan")) cfg.seed_plan = f.seed_plan;
      if (given("--seed-train")) cfg.seed_train = f.seed_train;
      if (given("--data")) cfg.data_dir = f.data;
      if (given("--out")) cfg.out_dir = f.out;
      if (cmd->get_option_no_throw("--alphas") && given("--alphas")) cfg.alphas = parse_double_list(f.alphas);
      if (cmd->get_option_no_throw("--pair-counts") && given("--pair-counts")) cfg.pair_counts = parse_int_list(f.pair_counts);
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(e);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(ErrorCode::InvalidParams, e.what());
    }
    return cfg;
  };

  try {
    if (synth_cmd->parsed()) {
      SynthConfig cfg;
      try {
        if (!synth_config.empty()) cfg = synth_from_json(read_json_file(synth_config));
        auto given = [&](const char* name) { return synth_cmd->count(name) > 0; };
        auto& p = cfg.params;
        if (given("--subjects")) p.n_subjects = sp.n_subjects;
        if (given("--channels")) p.n_channels = sp.n_channels;
        if (given("--minutes")) p.minutes_per_condition = sp.minutes_per_condition;
        if (given("--sources")) p.n_sources = sp.n_sources;
        if (given("--discriminative")) p.n_discriminative = sp.n_discriminative;
        if (given("--ratio")) p.class_variance_ratio = sp.class_variance_ratio;
        if (given("--jitter")) p.subject_jitter = sp.subject_jitter;
        if (given("--noise")) p.noise_power = sp.noise_power;
        if (given("--band")) p.band = parse_band(synth_band);
        if (given("--seed")) {
          p.seed = synth_seed;
          cfg.seed_given = true;
        }
        if (given("--out")) cfg.out_dir = synth_out;
      } catch (const ValidationError&) {
        throw;
      } catch (const Error& e) {
        throw ValidationError(e);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(ErrorCode::InvalidParams, e.what());
      }
      cmd_synth(cfg);
    } else if (run_cmd->parsed()) {
      cmd_run(build_experiment(run_cmd, rf));
    } else if (sweep_cmd->parsed()) {
      cmd_sweep(build_experiment(sweep_cmd, wf));
    }
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace medeeg::cli
