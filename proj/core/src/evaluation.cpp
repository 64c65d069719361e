#include "refind/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "refind/error.hpp"
#include "refind/io.hpp"

namespace refind::eval {

using nlohmann::json;

double iou(const CharSpanSet& pred, const CharSpanSet& gold) {
  if (pred.text_len() != gold.text_len()) {
    throw ValidationError(
        fmt::format("span sets cover texts of different length ({} vs {})", pred.text_len(), gold.text_len()));
  }
  const auto& a = pred.spans();
  const auto& b = gold.spans();
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const auto lo = std::max(a[i].start, b[j].start);
    const auto hi = std::min(a[i].end, b[j].end);
    if (lo < hi) inter += hi - lo;
    if (a[i].end < b[j].end) ++i;
    else ++j;
  }
  const auto uni = pred.covered() + gold.covered() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

json Prediction::to_json() const {
  json j = extra;
  j["id"] = id;
  j["lang"] = lang;
  json arr = json::array();
  for (const auto& s : spans) arr.push_back(json::array({s.start, s.end}));
  j["spans"] = std::move(arr);
  if (text_len) j["text_len"] = *text_len;
  if (delta) j["delta"] = *delta;
  j["csr"] = csr;
  return j;
}

Prediction Prediction::from_json(const json& j) {
  Prediction p;
  try {
    p.id = j.at("id").get<std::string>();
    p.lang = j.value("lang", std::string{});
    for (const auto& s : j.at("spans")) p.spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    if (j.contains("text_len")) p.text_len = j.at("text_len").get<std::size_t>();
    if (j.contains("delta") && !j.at("delta").is_null()) p.delta = j.at("delta").get<double>();
    if (j.contains("csr")) p.csr = j.at("csr").get<std::vector<double>>();
    for (const auto& [k, v] : j.items()) {
      if (k != "id" && k != "lang" && k != "spans" && k != "text_len" && k != "delta" && k != "csr") p.extra[k] = v;
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("prediction '{}': {}", p.id, e.what()), p.id);
  }
  return p;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(Prediction::from_json(j));
  return out;
}

std::string serialize_predictions(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    out += io::dump(p.to_json());
    out += '\n';
  }
  return out;
}

json EvalReport::to_json() const {
  json langs = json::object();
  for (const auto& [lang, s] : per_language) langs[lang] = {{"mean_iou", s.mean_iou}, {"n_records", s.n_records}};
  return json{{"label", label},
              {"per_language", std::move(langs)},
              {"average", average},
              {"micro_average", micro_average},
              {"n_records", n_records},
              {"config", config}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  try {
    r.label = j.at("label").get<std::string>();
    for (const auto& [lang, s] : j.at("per_language").items()) {
      r.per_language[lang] = {s.at("mean_iou").get<double>(), s.at("n_records").get<std::size_t>()};
    }
    r.average = j.at("average").get<double>();
    r.micro_average = j.at("micro_average").get<double>();
    r.n_records = j.at("n_records").get<std::size_t>();
    r.config = j.value("config", json::object());
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed report: {}", e.what()));
  }
  return r;
}

EvalReport evaluate_dataset(const std::vector<Prediction>& predictions, const std::vector<AnnotatedResponse>& gold,
                            json config) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) throw DuplicateIdError(p.id);
  }
  std::vector<std::string> missing;
  std::unordered_set<std::string> gold_ids;
  for (const auto& g : gold) {
    gold_ids.insert(g.id);
    if (!by_id.contains(g.id)) missing.push_back(g.id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw DataError(fmt::format("{} gold record(s) have no prediction: {}", missing.size(), list));
  }
  std::vector<std::string> unknown;
  for (const auto& p : predictions) {
    if (!gold_ids.contains(p.id)) unknown.push_back(p.id);
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw DataError(fmt::format("{} prediction(s) have no gold record: {}", unknown.size(), list));
  }

  // Deterministic fold: records sorted by id.
  std::vector<const AnnotatedResponse*> ordered;
  for (const auto& g : gold) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

  EvalReport report;
  report.config = std::move(config);
  std::map<std::string, double> sums;
  double total = 0.0;
  for (const auto* g : ordered) {
    const auto& p = *by_id.at(g->id);
    if (p.text_len && *p.text_len != g->text_len()) {
      throw ValidationError(fmt::format("prediction '{}' was made for a text of length {}, gold has {}", p.id,
                                        *p.text_len, g->text_len()));
    }
    const auto pred = CharSpanSet::normalized(p.spans, g->text_len());
    const double score = iou(pred, g->gold_spans);
    sums[g->lang] += score;
    ++report.per_language[g->lang].n_records;
    total += score;
  }
  report.n_records = ordered.size();
  double macro = 0.0;
  for (auto& [lang, s] : report.per_language) {
    s.mean_iou = sums[lang] / static_cast<double>(s.n_records);
    macro += s.mean_iou;
  }
  if (!report.per_language.empty()) {
    report.average = macro / static_cast<double>(report.per_language.size());
    report.micro_average = total / static_cast<double>(report.n_records);
  }
  return report;
}

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TableRow table_row(const EvalReport& report) {
  TableRow row;
  row.label = report.label;
  for (const auto& [lang, s] : report.per_language) row.values.emplace_back(upper(lang), s.mean_iou);
  row.average = report.average;
  return row;
}

std::string format_table(const std::vector<TableRow>& rows) {
  if (rows.empty()) return {};
  std::size_t label_w = 6;
  for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
  label_w += 2;
  std::string out = fmt::format("{:<{}}", "Method", label_w);
  for (const auto& [lang, v] : rows.front().values) out += fmt::format("{:<8}", lang);
  out += "Average\n";
  for (const auto& r : rows) {
    if (r.values.size() != rows.front().values.size()) throw ValidationError("table rows have different columns");
    out += fmt::format("{:<{}}", r.label, label_w);
    for (const auto& [lang, v] : r.values) out += fmt::format("{:<8.4f}", v);
    out += fmt::format("{:.4f}\n", r.average);
  }
  return out;
}

std::vector<TableRow> parse_table(const std::string& table) {
  std::istringstream in(table);
  std::string line;
  std::vector<std::string> header;
  std::vector<TableRow> rows;
  const auto split = [](const std::string& s) {
    std::istringstream ls(s);
    std::vector<std::string> parts;
    std::string w;
    while (ls >> w) parts.push_back(w);
    return parts;
  };
  while (std::getline(in, line)) {
    auto parts = split(line);
    if (parts.empty()) continue;
    if (header.empty()) {
      if (parts.size() < 2 || parts.front() != "Method" || parts.back() != "Average") {
        throw DataError("report table must start with a 'Method ... Average' header");
      }
      header.assign(parts.begin() + 1, parts.end() - 1);
      continue;
    }
    const auto n_numbers = header.size() + 1;
    if (parts.size() <= n_numbers) throw DataError(fmt::format("report row '{}' has too few columns", line));
    TableRow row;
    const auto label_parts = parts.size() - n_numbers;
    for (std::size_t i = 0; i < label_parts; ++i) row.label += (i ? " " : "") + parts[i];
    try {
      for (std::size_t c = 0; c < header.size(); ++c) {
        row.values.emplace_back(header[c], std::stod(parts[label_parts + c]));
      }
      row.average = std::stod(parts.back());
    } catch (const std::exception&) {
      throw DataError(fmt::format("report row '{}' has a non-numeric cell", line));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepCell> threshold_sweep(const std::vector<AnnotatedResponse>& records,
                                       const std::map<std::string, csr::CsrSeries>& csr_cache,
                                       const std::vector<double>& deltas, const csr::DetectorConfig& base) {
  if (deltas.empty()) throw ValidationError("threshold sweep needs at least one delta");
  for (double d : deltas) {
    if (!(d >= 0.0)) throw ValidationError("sweep deltas must be >= 0");
  }
  std::vector<SweepCell> cells;
  std::map<std::string, std::vector<SweepCell>> by_lang;
  for (double delta : deltas) {
    auto cfg = base;
    cfg.delta = delta;
    std::vector<Prediction> preds;
    preds.reserve(records.size());
    for (const auto& r : records) {
      const auto it = csr_cache.find(r.id);
      if (it == csr_cache.end()) throw DataError(fmt::format("no CSR series cached for record '{}'", r.id), r.id);
      Prediction p;
      p.id = r.id;
      p.lang = r.lang;
      p.spans = csr::spans_at(r, it->second, cfg).spans();
      preds.push_back(std::move(p));
    }
    const auto report = evaluate_dataset(preds, records);
    for (const auto& [lang, s] : report.per_language) by_lang[lang].push_back({lang, delta, s.mean_iou, s.n_records});
  }
  for (auto& [lang, list] : by_lang) cells.insert(cells.end(), list.begin(), list.end());
  return cells;
}

std::string format_sweep(const std::vector<SweepCell>& cells) {
  std::string out = "lang\tdelta\tmean_iou\tn_records\n";
  for (const auto& c : cells) out += fmt::format("{}\t{}\t{:.17g}\t{}\n", c.lang, c.delta, c.mean_iou, c.n_records);
  return out;
}

}  // namespace refind::eval
