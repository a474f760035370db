#ifndef DEID_EVALMERGE_HPP
#define DEID_EVALMERGE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/labels.hpp"
#include "deid/seqlabel.hpp"

namespace deid {

// The three merge rules for a token's votes from overlapping windows:
//   1. all votes identical -> keep that label
//   2. a mixture of O and PHI labels -> drop the O votes
//   3. conflicting PHI labels -> the one with the largest schema index
int merge_votes(const std::vector<int>& votes, const LabelSchema& schema);

// Applies merge_votes per token. Padding positions carry no votes; a real
// position with zero votes raises UncoveredToken.
std::vector<int> merge_document(const std::vector<WindowPrediction>& window_predictions,
                                size_t doc_len, const LabelSchema& schema);

// Partial-coverage variant for split-level evaluation: uncovered positions
// stay empty instead of raising.
std::vector<std::optional<int>> merge_covered(
    const std::vector<WindowPrediction>& window_predictions, size_t doc_len,
    const LabelSchema& schema);

struct CategoryCounts {
  long long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f = 0.0;
};

struct EvalReport {
  std::map<std::string, CategoryCounts> categories;  // always the schema's categories
  CategoryCounts all;                                // micro aggregate of summed counts
  double macro_precision = 0.0, macro_recall = 0.0, macro_f = 0.0;
};

// Token-level scoring with B/I collapsed to the category (exact_label
// compares full label ids instead). P/R/F are 0 whenever the denominator is.
EvalReport score(const std::vector<int>& gold, const std::vector<int>& pred,
                 const LabelSchema& schema, bool exact_label = false);

// Scoring over positions that carry a prediction (split-level evaluation).
EvalReport score_covered(const std::vector<int>& gold,
                         const std::vector<std::optional<int>>& pred, const LabelSchema& schema,
                         bool exact_label = false);

// Count accumulation across documents; derived metrics are recomputed.
EvalReport combine(const EvalReport& a, const EvalReport& b);

std::string format_report(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

// Original text with every predicted PHI token span replaced by [CATEGORY].
std::string deidentify_text(const AnnotatedDocument& doc, const std::vector<int>& pred,
                            const LabelSchema& schema);

}  // namespace deid

#endif  // DEID_EVALMERGE_HPP
