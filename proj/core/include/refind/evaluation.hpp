#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refind/csr.hpp"
#include "refind/dataset.hpp"
#include "refind/spans.hpp"

namespace refind::eval {

// |pred ∩ gold| / |pred ∪ gold| over character indices; 1.0 when both are
// empty. Throws ValidationError when the text lengths differ.
double iou(const CharSpanSet& pred, const CharSpanSet& gold);

// One line of a prediction file.
struct Prediction {
  std::string id;
  std::string lang;
  std::vector<CharRange> spans;
  std::optional<std::size_t> text_len;
  std::optional<double> delta;
  std::vector<double> csr;
  nlohmann::json extra = nlohmann::json::object();  // provenance fields passed through

  nlohmann::json to_json() const;
  static Prediction from_json(const nlohmann::json& j);
};

std::vector<Prediction> read_predictions(const std::filesystem::path& path);
std::string serialize_predictions(const std::vector<Prediction>& preds);

struct LanguageScore {
  double mean_iou = 0.0;
  std::size_t n_records = 0;
};

struct EvalReport {
  std::string label = "REFIND";
  std::map<std::string, LanguageScore> per_language;
  double average = 0.0;        // unweighted mean over languages
  double micro_average = 0.0;  // mean over records
  std::size_t n_records = 0;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Per-record IoU, averaged per language, then macro-averaged. Every gold id
// needs exactly one prediction: missing, duplicate or unknown ids are errors.
EvalReport evaluate_dataset(const std::vector<Prediction>& predictions, const std::vector<AnnotatedResponse>& gold,
                            nlohmann::json config = nlohmann::json::object());

// Fixed-width text table: a header of language codes, one row per report.
struct TableRow {
  std::string label;
  std::vector<std::pair<std::string, double>> values;  // column order
  double average = 0.0;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

std::string format_table(const std::vector<TableRow>& rows);
std::vector<TableRow> parse_table(const std::string& table);
TableRow table_row(const EvalReport& report);

struct SweepCell {
  std::string lang;
  double delta = 0.0;
  double mean_iou = 0.0;
  std::size_t n_records = 0;
};

// Re-thresholds cached CSR series at each delta; nothing is re-scored.
// Records without a cached series are errors.
std::vector<SweepCell> threshold_sweep(const std::vector<AnnotatedResponse>& records,
                                       const std::map<std::string, csr::CsrSeries>& csr_cache,
                                       const std::vector<double>& deltas, const csr::DetectorConfig& base);

// "lang\tdelta\tmean_iou\tn_records" with one row per (lang, delta).
std::string format_sweep(const std::vector<SweepCell>& cells);

}  // namespace refind::eval
