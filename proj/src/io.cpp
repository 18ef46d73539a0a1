#include "medeeg/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "medeeg/dsp.hpp"
#include "medeeg/error.hpp"

namespace medeeg::io {
namespace {

template <typename U>
void put(Bytes& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

template <typename U>
U get(std::span<const unsigned char> in, std::size_t offset) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in[offset + i]) << (8 * i);
  return v;
}

nlohmann::json band_json(const BandDef& b) {
  return {{"name", std::string(to_string(b.name))}, {"lo_hz", b.lo_hz}, {"hi_hz", b.hi_hz}};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

constexpr std::string_view kPlusMinus = "\xC2\xB1";  // UTF-8 "±"

}  // namespace

Bytes encode_eegb(const Recording& rec) {
  if (rec.n_channels() < 1 || rec.n_channels() > 65535)
    throw Error(ErrorCode::InvalidParams, "EEGB supports 1..65535 channels");
  if (rec.n_samples() > static_cast<Eigen::Index>(UINT32_MAX)) throw Error(ErrorCode::InvalidParams, "too many samples for EEGB");
  Bytes out;
  out.reserve(kEegbHeaderSize + 4 * static_cast<std::size_t>(rec.data.size()));
  for (char c : {'E', 'E', 'G', 'B'}) out.push_back(static_cast<unsigned char>(c));
  put<std::uint16_t>(out, kEegbVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(rec.n_channels()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.n_samples()));
  put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(rec.sample_rate_hz)));
  out.push_back(static_cast<unsigned char>(label_of(rec.condition)));
  out.insert(out.end(), 3, 0);
  for (Eigen::Index c = 0; c < rec.n_channels(); ++c)
    for (Eigen::Index s = 0; s < rec.n_samples(); ++s)
      put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(rec.data(c, s))));
  return out;
}

Recording decode_eegb(std::span<const unsigned char> bytes, const std::string& subject_id) {
  if (bytes.size() < kEegbHeaderSize || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "EEGB")
    throw Error(ErrorCode::FormatError, "not an EEGB file");
  if (get<std::uint16_t>(bytes, 4) != kEegbVersion) throw Error(ErrorCode::FormatError, "unsupported EEGB version");
  const auto channels = get<std::uint16_t>(bytes, 6);
  const auto samples = get<std::uint32_t>(bytes, 8);
  const float rate = std::bit_cast<float>(get<std::uint32_t>(bytes, 12));
  const auto cond = bytes[16];
  if (cond > 1) throw Error(ErrorCode::FormatError, "EEGB condition byte must be 0 or 1");
  const std::size_t expected = kEegbHeaderSize + 4ull * channels * samples;
  if (bytes.size() != expected)
    throw Error(ErrorCode::FormatError, "EEGB size " + std::to_string(bytes.size()) + " != expected " + std::to_string(expected));

  Recording rec;
  rec.subject_id = subject_id;
  rec.condition = cond == 1 ? Condition::Meditation : Condition::Rest;
  rec.sample_rate_hz = rate;
  rec.data.resize(channels, samples);
  std::size_t off = kEegbHeaderSize;
  for (Eigen::Index c = 0; c < channels; ++c)
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(samples); ++s, off += 4)
      rec.data(c, s) = std::bit_cast<float>(get<std::uint32_t>(bytes, off));
  return rec;
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const fs::path& path, std::span<const unsigned char> bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename into " + path.string() + ": " + ec.message());
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

void write_eegb(const fs::path& path, const Recording& rec) { write_file_atomic(path, encode_eegb(rec)); }

Recording read_eegb(const fs::path& path, const std::string& subject_id) {
  return decode_eegb(read_file(path), subject_id);
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

nlohmann::json manifest_to_json(std::span<const ManifestEntry> entries) {
  auto j = nlohmann::json::array();
  for (const auto& e : entries)
    j.push_back({{"subject_id", e.subject_id},
                 {"condition", std::string(to_string(e.condition))},
                 {"file", e.file},
                 {"sha256", e.sha256}});
  return j;
}

std::vector<ManifestEntry> manifest_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::FormatError, "manifest must be a non-empty array");
  std::vector<ManifestEntry> out;
  for (const auto& item : j) {
    if (!item.is_object()) throw Error(ErrorCode::FormatError, "manifest entries must be objects");
    for (const char* key : {"subject_id", "condition", "file", "sha256"})
      if (!item.contains(key) || !item[key].is_string())
        throw Error(ErrorCode::FormatError, std::string("manifest entry lacks string field '") + key + "'");
    ManifestEntry e;
    e.subject_id = item["subject_id"].get<std::string>();
    const auto cond = item["condition"].get<std::string>();
    if (cond != "meditation" && cond != "rest") throw Error(ErrorCode::FormatError, "bad condition '" + cond + "'");
    e.condition = parse_condition(cond);
    e.file = item["file"].get<std::string>();
    e.sha256 = item["sha256"].get<std::string>();
    if (e.subject_id.empty() || e.file.empty()) throw Error(ErrorCode::FormatError, "empty subject_id or file");
    if (fs::path(e.file).is_absolute() || e.file.find("..") != std::string::npos)
      throw Error(ErrorCode::FormatError, "manifest file paths must stay inside the data directory");
    out.push_back(std::move(e));
  }
  return out;
}

CohortDataset load_cohort_raw(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::FormatError, "missing " + manifest_path.string());
  nlohmann::json j;
  try {
    const auto bytes = read_file(manifest_path);
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("manifest is not valid JSON: ") + e.what());
  }
  const auto entries = manifest_from_json(j);

  std::vector<std::string> order;
  std::map<std::string, SubjectData> subjects;
  std::map<std::pair<std::string, int>, bool> seen;
  for (const auto& e : entries) {
    if (seen[{e.subject_id, label_of(e.condition)}])
      throw Error(ErrorCode::FormatError, "duplicate entry for " + e.subject_id + "/" + std::string(to_string(e.condition)));
    seen[{e.subject_id, label_of(e.condition)}] = true;
    const fs::path file = dir / e.file;
    if (!fs::exists(file)) throw Error(ErrorCode::FormatError, "manifest references missing file " + file.string());
    const auto bytes = read_file(file);
    if (sha256_hex(bytes) != e.sha256) throw Error(ErrorCode::FormatError, "sha256 mismatch for " + file.string());
    Recording rec = decode_eegb(bytes, e.subject_id);
    if (rec.condition != e.condition)
      throw Error(ErrorCode::FormatError, "condition in " + file.string() + " disagrees with the manifest");
    if (!subjects.count(e.subject_id)) {
      order.push_back(e.subject_id);
      subjects[e.subject_id].subject_id = e.subject_id;
    }
    (e.condition == Condition::Meditation ? subjects[e.subject_id].meditation : subjects[e.subject_id].rest) = std::move(rec);
  }

  CohortDataset cohort;
  for (const auto& id : order) {
    if (!seen[{id, 0}] || !seen[{id, 1}])
      throw Error(ErrorCode::FormatError, "subject " + id + " lacks one of the two conditions");
    cohort.subjects.push_back(std::move(subjects[id]));
  }
  try {
    cohort.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
  return cohort;
}

CohortDataset load_cohort(const fs::path& dir, Band band, std::optional<double> notch_hz, Exec exec) {
  CohortDataset cohort = load_cohort_raw(dir);
  cohort.band = band_def(band);
  for (auto& s : cohort.subjects) {
    for (Recording* r : {&s.meditation, &s.rest}) {
      if (notch_hz) *r = dsp::notch(*r, *notch_hz, 30.0, exec);
      *r = dsp::bandpass(*r, cohort.band, exec);
    }
  }
  return cohort;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorCode::FormatError, "not a number: '" + std::string(text) + "'");
  return v;
}

nlohmann::json report_to_json(const cv::CvReport& r) {
  nlohmann::json hp;
  switch (r.pipeline) {
    case cv::Pipeline::CspLda:
      hp = {{"alpha", r.hyperparams.alpha}, {"n_pairs", r.hyperparams.n_pairs}};
      break;
    case cv::Pipeline::CspLdaLstm:
      hp = {{"alpha", 0.0},
            {"n_pairs", r.hyperparams.n_pairs},
            {"lstm",
             {{"hidden", r.hyperparams.lstm.hidden},
              {"epochs", r.hyperparams.lstm.epochs},
              {"batch", r.hyperparams.lstm.batch},
              {"lr", r.hyperparams.lstm.adam.lr}}}};
      break;
    case cv::Pipeline::SvdNn: {
      hp = {{"k_grid", r.hyperparams.k_grid},
            {"refine_k", r.hyperparams.refine_k},
            {"fixed_k", r.hyperparams.fixed_k ? nlohmann::json(*r.hyperparams.fixed_k) : nlohmann::json(nullptr)},
            {"nn",
             {{"lr", r.hyperparams.nn.adam.lr},
              {"batch", r.hyperparams.nn.batch},
              {"max_epochs", r.hyperparams.nn.max_epochs},
              {"patience", r.hyperparams.nn.patience}}}};
      break;
    }
  }

  auto folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json jf = {{"subject", f.subject_id}, {"fold", f.fold},     {"accuracy", f.accuracy},
                         {"n_test", f.n_test},      {"n_fit", f.n_fit},   {"leakage_ok", f.leakage_ok}};
    if (f.k >= 0) jf["k"] = f.k;
    folds.push_back(std::move(jf));
  }

  auto selections = nlohmann::json::array();
  bool frozen_ok = true;
  for (const auto& s : r.selections) {
    auto scores = nlohmann::json::array();
    for (const auto& [k, acc] : s.validation_accuracy) scores.push_back({{"k", k}, {"validation_accuracy", acc}});
    selections.push_back({{"scope", s.scope},
                          {"selected_k", s.selected_k},
                          {"selected_in_fold", s.selected_in_fold},
                          {"frozen_reused", s.frozen_reused},
                          {"scores", scores}});
    frozen_ok = frozen_ok && s.frozen_reused;
  }

  nlohmann::json j = {{"pipeline", std::string(cv::to_string(r.pipeline))},
                      {"band", band_json(r.band)},
                      {"mode", std::string(cv::to_string(r.mode))},
                      {"hyperparams", hp},
                      {"folds", folds},
                      {"mean", r.mean},
                      {"sd", r.sd},
                      {"sd_kind", "population"},
                      {"seeds", {{"cohort", r.seeds.cohort}, {"plan", r.seeds.plan}, {"train", r.seeds.train}}},
                      {"leakage_audit", r.leakage_audit_passed ? "pass" : "fail"}};
  if (r.pipeline == cv::Pipeline::SvdNn) {
    j["k_selection"] = selections;
    j["frozen_selection_audit"] = r.hyperparams.fixed_k ? true : frozen_ok;
  }
  return j;
}

nlohmann::json reports_to_json(std::span<const cv::CvReport> reports) {
  auto j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(report_to_json(r));
  return j;
}

std::string report_csv(const cv::CvReport& r) {
  std::string out = "subject,fold,n_test,accuracy_pct,k\n";
  for (const auto& f : r.folds) {
    out += f.subject_id + "," + std::to_string(f.fold) + "," + std::to_string(f.n_test) + "," +
           format_double(f.accuracy) + "," + (f.k >= 0 ? std::to_string(f.k) : std::string()) + "\n";
  }
  return out;
}

std::string sweep_csv(std::span<const cv::CvReport> reports, std::span<const double> alphas,
                      std::span<const int> pair_counts) {
  if (reports.size() != alphas.size() * pair_counts.size())
    throw Error(ErrorCode::DimensionMismatch, "report count does not match the sweep grid");
  std::string out = "n_pairs";
  for (double a : alphas) out += "," + (a == 0.0 ? std::string("classical") : format_double(a));
  out += "\n";
  for (std::size_t p = 0; p < pair_counts.size(); ++p) {
    out += std::to_string(pair_counts[p]);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const auto& r = reports[p * alphas.size() + a];
      if (r.hyperparams.n_pairs != pair_counts[p] || r.hyperparams.alpha != alphas[a])
        throw Error(ErrorCode::InvalidArgument, "reports are not in sweep order");
      out += "," + format_double(r.mean) + std::string(kPlusMinus) + format_double(r.sd);
    }
    out += "\n";
  }
  return out;
}

SweepTable parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "empty sweep CSV");
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "n_pairs") throw Error(ErrorCode::FormatError, "sweep CSV header must start with n_pairs");
  SweepTable t;
  for (std::size_t i = 1; i < header.size(); ++i)
    t.alphas.push_back(header[i] == "classical" ? 0.0 : parse_double(header[i]));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw Error(ErrorCode::FormatError, "ragged sweep CSV row");
    t.pair_counts.push_back(static_cast<int>(parse_double(cells[0])));
    std::vector<cv::Summary> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto pos = cells[i].find(kPlusMinus);
      if (pos == std::string::npos) throw Error(ErrorCode::FormatError, "cell lacks mean±sd: " + cells[i]);
      row.push_back({parse_double(std::string_view(cells[i]).substr(0, pos)),
                     parse_double(std::string_view(cells[i]).substr(pos + kPlusMinus.size()))});
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

}  // namespace medeeg::io
