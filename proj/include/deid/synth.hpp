#ifndef DEID_SYNTH_HPP
#define DEID_SYNTH_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/labels.hpp"

namespace deid {

// Synthetic clinical-note corpus with a configurable PHI token mix. Category
// weights default to the observed optometry distribution (Date 1203,
// Doctor 462, Hospital 10, Location 258, Patient 119, Phone 19).
struct GenConfig {
  uint64_t seed = 1;
  int n_docs = 2000;
  int min_tokens = 20;
  int max_tokens = 60;
  std::map<std::string, double> category_weights = {
      {"Date", 1203}, {"Doctor", 462}, {"Hospital", 10},
      {"Location", 258}, {"Patient", 119}, {"Phone", 19}};
  double misspelling_rate = 0.02;   // adjacent-character swaps, filler only
  double abbreviation_rate = 0.02;  // truncations, filler only
  // When set, filler occasionally reuses PHI lexicon words, removing the
  // learnability ceiling the disjoint default provides.
  bool overlap_lexicons = false;
};

struct GeneratedDoc {
  std::string doc_id;
  std::string tagged_text;  // inline <PHI TYPE="..."> markup
};

struct GenResult {
  std::vector<GeneratedDoc> files;
  std::vector<AnnotatedDocument> documents;  // parsed from the tagged text
  std::map<std::string, long long> phi_token_counts;
  long long total_phi_tokens = 0;
};

GenResult generate(const GenConfig& config, const LabelSchema& schema);

// One file per document plus a manifest.json with realized counts.
void write_corpus(const GenResult& result, const GenConfig& config, const std::string& dir);

// Word pools, exposed so the lexicon/filler disjointness invariant can be
// checked directly.
struct SynthLexicons {
  std::vector<std::string> filler;
  std::map<std::string, std::vector<std::string>> phi;  // per category, fixed word pools
};
const SynthLexicons& synth_lexicons();

}  // namespace deid

#endif  // DEID_SYNTH_HPP
