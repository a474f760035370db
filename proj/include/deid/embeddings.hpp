#ifndef DEID_EMBEDDINGS_HPP
#define DEID_EMBEDDINGS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/rng.hpp"
#include "deid/stats.hpp"

namespace deid {

// CBOW word vectors: an input (projection) matrix and an output (context
// prediction) matrix, one row per vocabulary word. Analogy and downstream
// lookup use the input rows.
class EmbeddingModel {
 public:
  EmbeddingModel(Vocabulary vocab, int dim);

  const Vocabulary& vocab() const { return vocab_; }
  int dim() const { return dim_; }

  const double* input_row(int id) const { return input_.data() + static_cast<size_t>(id) * dim_; }
  double* input_row(int id) { return input_.data() + static_cast<size_t>(id) * dim_; }
  const double* output_row(int id) const {
    return output_.data() + static_cast<size_t>(id) * dim_;
  }
  double* output_row(int id) { return output_.data() + static_cast<size_t>(id) * dim_; }

  std::vector<double> input_vector(int id) const;
  void set_input_vector(int id, const std::vector<double>& v);
  void set_output_vector(int id, const std::vector<double>& v);

  const std::vector<double>& input_matrix() const { return input_; }
  const std::vector<double>& output_matrix() const { return output_; }

 private:
  Vocabulary vocab_;
  int dim_;
  std::vector<double> input_;   // |V| x dim, row-major
  std::vector<double> output_;  // |V| x dim, row-major
};

struct CbowOptions {
  int dim = 200;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr0 = 0.025;
  uint64_t seed = 1;
};

// One training example: averaged context input vectors scored against the
// center word and k noise words.
struct CbowExample {
  std::vector<int> context;  // at least one id
  int center = 0;
  std::vector<int> negatives;
};

double cbow_example_loss(const EmbeddingModel& model, const CbowExample& ex);

// Analytic gradients of cbow_example_loss, keyed by vocabulary id. Duplicate
// ids in context/negatives accumulate into one entry.
void cbow_example_gradients(const EmbeddingModel& model, const CbowExample& ex,
                            std::unordered_map<int, std::vector<double>>& input_grads,
                            std::unordered_map<int, std::vector<double>>& output_grads);

// Deterministic single-threaded CBOW training over normalized token streams.
// Context windows are truncated at document edges; negatives are drawn from
// the unigram distribution raised to 0.75; the learning rate decays linearly
// from lr0 to lr0 * 1e-4 over all epoch-position pairs.
EmbeddingModel train_cbow(const std::vector<std::vector<std::string>>& docs,
                          const Vocabulary& vocab, const CbowOptions& opts);

double cosine(const std::vector<double>& u, const std::vector<double>& v);

struct ScoredWord {
  std::string word;
  double cosine = 0.0;
};

// Top-k words nearest to v(w1) - v(w2) + v(w4) by cosine similarity; the
// query words themselves, PAD, and zero vectors are excluded.
std::vector<ScoredWord> analogy(const EmbeddingModel& model, const std::string& w1,
                                const std::string& w2, const std::string& w4, int top_k);

// The relation reads w1:w2 :: w4:w3, i.e. v(w1)-v(w2)+v(w4) should land near
// v(w3).
struct AnalogyQuestion {
  std::string w1, w2, w3, w4;
};

// One question per line, "w1 w2 w3 w4"; '#' comment lines and ':' section
// headers are ignored.
std::vector<AnalogyQuestion> parse_questions(std::istream& in);
std::vector<AnalogyQuestion> load_questions(const std::string& path);

struct AnalogyQuality {
  double mean_cosine = 0.0;
  std::vector<double> per_question;  // answered questions, in input order
  std::vector<size_t> answered_indices;
  size_t skipped = 0;
};

AnalogyQuality analogy_quality(const EmbeddingModel& model,
                               const std::vector<AnalogyQuestion>& questions);

struct DatasizeOptions {
  std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
  CbowOptions cbow;
  int min_count = 2;
  uint64_t seed = 1;
};

struct DatasizeStudy {
  std::vector<double> fractions;
  std::vector<size_t> docs_used;
  std::vector<size_t> vocab_sizes;
  size_t question_count = 0;  // fixed set answerable by the smallest model
  size_t total_questions = 0;
  std::vector<double> means;                      // one per fraction
  std::vector<std::vector<double>> per_question;  // aligned across fractions
  std::vector<PairedTTest> tests;                 // consecutive fraction pairs
};

// Shuffles documents once, then trains one model per cumulative fraction and
// compares consecutive models on the question set answerable by the smallest.
DatasizeStudy datasize_study(const std::vector<std::vector<std::string>>& docs,
                             const std::vector<AnalogyQuestion>& questions,
                             const DatasizeOptions& opts);

enum class LookupSource { kPrimary, kFallback, kUnknown };

struct LookupCounters {
  long long from_primary = 0;
  long long from_fallback = 0;
  long long unknown = 0;
  long long total() const { return from_primary + from_fallback + unknown; }
};

// Embedding resolution order: primary model, then optional fallback, then the
// primary's UNK vector. Both models must share one dimension.
class ComposedLookup {
 public:
  explicit ComposedLookup(const EmbeddingModel* primary,
                          const EmbeddingModel* fallback = nullptr);

  struct Result {
    const double* vec;
    LookupSource source;
  };
  Result lookup(const std::string& word);

  int dim() const;
  const EmbeddingModel& primary() const { return *primary_; }
  bool has_fallback() const { return fallback_ != nullptr; }
  const LookupCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = LookupCounters{}; }

 private:
  const EmbeddingModel* primary_;
  const EmbeddingModel* fallback_;
  LookupCounters counters_;
};

// word2vec text format: first line "|V| dim", then one "word v1 ... vd" line
// per word. Values are written with 17 significant digits so they round-trip
// exactly. Only the input matrix is persisted.
void save_text(const EmbeddingModel& model, std::ostream& out);
void save_text_file(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_text(std::istream& in, int expected_dim = -1);
EmbeddingModel load_text_file(const std::string& path, int expected_dim = -1);

}  // namespace deid

#endif  // DEID_EMBEDDINGS_HPP
