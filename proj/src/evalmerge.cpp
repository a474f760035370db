#include "deid/evalmerge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "deid/error.hpp"

#include "json.hpp"

namespace deid {

int merge_votes(const std::vector<int>& votes, const LabelSchema& schema) {
  if (votes.empty()) throw Error("UncoveredToken", "token has no votes");
  int best = -1;
  for (int v : votes) {
    if (schema.is_outside(v)) continue;
    if (v > best) best = v;
  }
  // only O votes left -> rule 1 keeps O; otherwise rules 2+3 pick the
  // largest-index PHI label
  return best < 0 ? schema.outside_id() : best;
}

namespace {

std::vector<std::vector<int>> collect_votes(const std::vector<WindowPrediction>& preds,
                                            size_t doc_len) {
  std::vector<std::vector<int>> votes(doc_len);
  for (const WindowPrediction& wp : preds) {
    for (int j = 0; j < wp.n_real; ++j) {
      size_t pos = wp.start + static_cast<size_t>(j);
      if (pos >= doc_len)
        throw Error("UncoveredToken",
                    "window position " + std::to_string(pos) + " outside document");
      votes[pos].push_back(wp.labels[j]);
    }
  }
  return votes;
}

}  // namespace

std::vector<int> merge_document(const std::vector<WindowPrediction>& window_predictions,
                                size_t doc_len, const LabelSchema& schema) {
  auto votes = collect_votes(window_predictions, doc_len);
  std::vector<int> merged(doc_len);
  for (size_t i = 0; i < doc_len; ++i) {
    if (votes[i].empty())
      throw Error("UncoveredToken", "token " + std::to_string(i) + " has no votes");
    merged[i] = merge_votes(votes[i], schema);
  }
  return merged;
}

std::vector<std::optional<int>> merge_covered(
    const std::vector<WindowPrediction>& window_predictions, size_t doc_len,
    const LabelSchema& schema) {
  auto votes = collect_votes(window_predictions, doc_len);
  std::vector<std::optional<int>> merged(doc_len);
  for (size_t i = 0; i < doc_len; ++i)
    if (!votes[i].empty()) merged[i] = merge_votes(votes[i], schema);
  return merged;
}

namespace {

void derive_metrics(CategoryCounts& c) {
  c.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  c.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  c.f = c.precision + c.recall > 0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
}

void finalize(EvalReport& r) {
  r.all = CategoryCounts{};
  double mp = 0.0, mr = 0.0, mf = 0.0;
  for (auto& [name, c] : r.categories) {
    derive_metrics(c);
    r.all.tp += c.tp;
    r.all.fp += c.fp;
    r.all.fn += c.fn;
    mp += c.precision;
    mr += c.recall;
    mf += c.f;
  }
  derive_metrics(r.all);
  size_t n = r.categories.size();
  if (n > 0) {
    r.macro_precision = mp / static_cast<double>(n);
    r.macro_recall = mr / static_cast<double>(n);
    r.macro_f = mf / static_cast<double>(n);
  }
}

EvalReport empty_report(const LabelSchema& schema) {
  EvalReport r;
  for (const std::string& c : schema.categories()) r.categories[c];
  return r;
}

}  // namespace

EvalReport score_covered(const std::vector<int>& gold,
                         const std::vector<std::optional<int>>& pred, const LabelSchema& schema,
                         bool exact_label) {
  if (gold.size() != pred.size())
    throw Error("LengthMismatch", "gold and predicted sequences have different lengths");
  EvalReport r = empty_report(schema);
  for (size_t i = 0; i < gold.size(); ++i) {
    if (!pred[i].has_value()) continue;
    int g = gold[i], p = *pred[i];
    const std::string& gc = schema.category_of(g);
    const std::string& pc = schema.category_of(p);
    bool match = exact_label ? g == p : (!gc.empty() && gc == pc);
    if (match) {
      ++r.categories[gc].tp;
    } else {
      if (!pc.empty()) ++r.categories[pc].fp;
      if (!gc.empty()) ++r.categories[gc].fn;
    }
  }
  finalize(r);
  return r;
}

EvalReport score(const std::vector<int>& gold, const std::vector<int>& pred,
                 const LabelSchema& schema, bool exact_label) {
  std::vector<std::optional<int>> wrapped(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) wrapped[i] = pred[i];
  return score_covered(gold, wrapped, schema, exact_label);
}

EvalReport combine(const EvalReport& a, const EvalReport& b) {
  EvalReport r = a;
  for (const auto& [name, c] : b.categories) {
    auto& dst = r.categories[name];
    dst.tp += c.tp;
    dst.fp += c.fp;
    dst.fn += c.fn;
  }
  finalize(r);
  return r;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %9s %9s %9s %8s %8s %8s\n", "Key", "Precision",
                "Recall", "F-measure", "TP", "FP", "FN");
  out += line;
  auto row = [&](const std::string& name, const CategoryCounts& c) {
    std::snprintf(line, sizeof(line), "%-10s %9.3f %9.3f %9.3f %8lld %8lld %8lld\n",
                  name.c_str(), c.precision, c.recall, c.f, c.tp, c.fp, c.fn);
    out += line;
  };
  for (const auto& [name, c] : report.categories) row(name, c);
  row("All", report.all);
  std::snprintf(line, sizeof(line), "%-10s %9.3f %9.3f %9.3f\n", "Macro",
                report.macro_precision, report.macro_recall, report.macro_f);
  out += line;
  return out;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  auto counts = [](const CategoryCounts& c) {
    return nlohmann::json{{"tp", c.tp},
                          {"fp", c.fp},
                          {"fn", c.fn},
                          {"precision", c.precision},
                          {"recall", c.recall},
                          {"f", c.f}};
  };
  for (const auto& [name, c] : report.categories) j["categories"][name] = counts(c);
  j["all"] = counts(report.all);
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f", report.macro_f}};
  return j.dump(2);
}

std::string deidentify_text(const AnnotatedDocument& doc, const std::vector<int>& pred,
                            const LabelSchema& schema) {
  if (pred.size() != doc.tokens.size())
    throw Error("LengthMismatch", "prediction count does not match token count");
  std::string out;
  out.reserve(doc.text.size());
  size_t copied = 0;
  size_t t = 0;
  while (t < doc.tokens.size()) {
    const std::string& cat = schema.category_of(pred[t]);
    if (cat.empty()) {
      ++t;
      continue;
    }
    size_t run_end = t + 1;
    while (run_end < doc.tokens.size() && schema.category_of(pred[run_end]) == cat) ++run_end;
    std::string tag = cat;
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out.append(doc.text, copied, doc.tokens[t].start - copied);
    out += "[" + tag + "]";
    copied = doc.tokens[run_end - 1].end;
    t = run_end;
  }
  out.append(doc.text, copied, doc.text.size() - copied);
  return out;
}

}  // namespace deid
