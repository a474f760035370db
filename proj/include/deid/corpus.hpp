#ifndef DEID_CORPUS_HPP
#define DEID_CORPUS_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "deid/labels.hpp"

namespace deid {

struct Token {
  std::string text;
  size_t start = 0;  // byte offset into the source text
  size_t end = 0;    // exclusive
};

struct AnnotatedDocument {
  std::string doc_id;
  std::string text;           // markup-free UTF-8
  std::vector<Token> tokens;  // non-overlapping, sorted by start
  std::vector<int> labels;    // schema ids, one per token
};

// Maximal runs of letters-or-digits become one token each; every other
// non-whitespace character is a single-character token. Bytes >= 0x80 are
// treated as letters so multi-byte UTF-8 sequences stay inside word tokens.
std::vector<Token> tokenize(const std::string& text);

// Every decimal digit becomes the literal "DIGIT"; everything else is
// lower-cased. Already-produced "DIGIT" atoms are preserved verbatim so the
// function is idempotent.
std::string normalize(const std::string& token_text);

bool is_digit_pattern(const std::string& normalized);

// Inline markup `<PHI TYPE="X">...</PHI>`, no nesting, no other markup.
// Throws UnbalancedTag / UnknownCategory / NestedTag with a byte offset.
AnnotatedDocument parse_annotated(const std::string& raw, const LabelSchema& schema,
                                  const std::string& doc_id = "");

// Inverse of parse_annotated for well-formed documents.
std::string serialize_annotated(const AnnotatedDocument& doc, const LabelSchema& schema);

class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr const char* kPadWord = "PAD";
  static constexpr const char* kUnkWord = "UNK";

  Vocabulary();

  // Words are stored in deterministic order: PAD, UNK, then by descending
  // frequency with lexicographic tie-break. Words below min_count are folded
  // into UNK; DIGIT-pattern words are reserved and kept regardless of count.
  static Vocabulary build(const std::vector<std::vector<std::string>>& normalized_docs,
                          int min_count = 2);
  static Vocabulary build_from_documents(const std::vector<AnnotatedDocument>& docs,
                                         int min_count = 2);

  // Reconstructs a vocabulary from an ordered word list (embedding file
  // order). PAD/UNK are prepended when absent.
  static Vocabulary from_word_list(const std::vector<std::string>& words);

  // id for a normalized word; falls back to UNK, never fails
  int lookup(const std::string& normalized) const;
  // true only for stored words (no UNK fallback)
  bool contains(const std::string& normalized) const;

  int size() const { return static_cast<int>(id_to_word_.size()); }
  const std::string& word(int id) const { return id_to_word_[id]; }
  long long freq(int id) const { return freq_[id]; }
  const std::vector<long long>& frequencies() const { return freq_; }

 private:
  int add(const std::string& word, long long freq);

  std::unordered_map<std::string, int> word_to_id_;
  std::vector<std::string> id_to_word_;
  std::vector<long long> freq_;
};

// Fixed-length training/inference segment. Positions >= n_real are padding
// (PAD input id, O label) and must be ignored when merging predictions.
struct Window {
  std::string doc_id;
  size_t start = 0;                // index of the first token in the document
  int n_real = 0;                  // number of non-padding positions
  std::vector<int> input_ids;      // n vocabulary ids
  std::vector<int> label_ids;      // n schema ids, after the broken-tag rule
  std::vector<std::string> words;  // n normalized token strings ("PAD" at padding)
};

// Windows start at 0, stride, 2*stride, ...; documents shorter than n yield
// one right-padded window. Any entity not fully contained in a window has all
// of its in-window labels rewritten to O.
std::vector<Window> slide_windows(const AnnotatedDocument& doc, const Vocabulary& vocab,
                                  const LabelSchema& schema, int n = 15, int stride = 1);

// Normalized token streams, one per document (CBOW training input).
std::vector<std::vector<std::string>> normalized_streams(
    const std::vector<AnnotatedDocument>& docs);

// CoNLL-style debugging dump: "token<TAB>label" lines, blank line between
// documents.
void dump_conll(const std::vector<AnnotatedDocument>& docs, const LabelSchema& schema,
                std::ostream& out);
void dump_conll_labels(const AnnotatedDocument& doc, const std::vector<int>& labels,
                       const LabelSchema& schema, std::ostream& out);

struct ConllDocument {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
};
std::vector<ConllDocument> read_conll(std::istream& in);

}  // namespace deid

#endif  // DEID_CORPUS_HPP
