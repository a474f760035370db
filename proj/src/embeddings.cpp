#include "deid/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "deid/error.hpp"

namespace deid {

namespace {

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^x) without overflow
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Shared analytic core for the negative-sampling objective. Signals are
// computed against the pre-update matrices; callers apply them afterwards.
struct CbowSignals {
  std::vector<double> h;       // averaged context input vectors
  std::vector<double> grad_h;  // dL/dh
  std::vector<double> out_signal;  // per [center, negatives...]: dL/d(u.h)
  double loss = 0.0;
};

void compute_signals(const EmbeddingModel& model, const CbowExample& ex, CbowSignals& s) {
  const int d = model.dim();
  s.h.assign(d, 0.0);
  for (int id : ex.context) {
    const double* row = model.input_row(id);
    for (int i = 0; i < d; ++i) s.h[i] += row[i];
  }
  const double inv_c = 1.0 / static_cast<double>(ex.context.size());
  for (int i = 0; i < d; ++i) s.h[i] *= inv_c;

  s.grad_h.assign(d, 0.0);
  s.out_signal.assign(1 + ex.negatives.size(), 0.0);
  s.loss = 0.0;

  auto accumulate = [&](int word, bool positive, size_t slot) {
    const double* u = model.output_row(word);
    double x = dot(u, s.h.data(), d);
    double g = positive ? sigmoid(x) - 1.0 : sigmoid(x);
    s.loss += positive ? softplus(-x) : softplus(x);
    s.out_signal[slot] = g;
    for (int i = 0; i < d; ++i) s.grad_h[i] += g * u[i];
  };
  accumulate(ex.center, true, 0);
  for (size_t k = 0; k < ex.negatives.size(); ++k) accumulate(ex.negatives[k], false, k + 1);
}

// cumulative unigram^0.75 table for negative sampling
struct NegativeSampler {
  std::vector<int> ids;
  std::vector<double> cumulative;

  explicit NegativeSampler(const Vocabulary& vocab) {
    double sum = 0.0;
    for (int id = 0; id < vocab.size(); ++id) {
      if (vocab.freq(id) <= 0) continue;
      sum += std::pow(static_cast<double>(vocab.freq(id)), 0.75);
      ids.push_back(id);
      cumulative.push_back(sum);
    }
  }

  bool empty() const { return ids.empty(); }

  int draw(Rng& rng) const {
    double x = rng.uniform() * cumulative.back();
    size_t lo = std::lower_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin();
    if (lo >= ids.size()) lo = ids.size() - 1;
    return ids[lo];
  }
};

}  // namespace

EmbeddingModel::EmbeddingModel(Vocabulary vocab, int dim)
    : vocab_(std::move(vocab)), dim_(dim) {
  if (dim < 1) throw Error("DimZero", "embedding dimension must be >= 1");
  input_.assign(static_cast<size_t>(vocab_.size()) * dim_, 0.0);
  output_.assign(static_cast<size_t>(vocab_.size()) * dim_, 0.0);
}

std::vector<double> EmbeddingModel::input_vector(int id) const {
  const double* row = input_row(id);
  return std::vector<double>(row, row + dim_);
}

void EmbeddingModel::set_input_vector(int id, const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != dim_)
    throw Error("DimMismatch", "vector length does not match model dimension");
  std::copy(v.begin(), v.end(), input_row(id));
}

void EmbeddingModel::set_output_vector(int id, const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != dim_)
    throw Error("DimMismatch", "vector length does not match model dimension");
  std::copy(v.begin(), v.end(), output_row(id));
}

double cbow_example_loss(const EmbeddingModel& model, const CbowExample& ex) {
  CbowSignals s;
  compute_signals(model, ex, s);
  return s.loss;
}

void cbow_example_gradients(const EmbeddingModel& model, const CbowExample& ex,
                            std::unordered_map<int, std::vector<double>>& input_grads,
                            std::unordered_map<int, std::vector<double>>& output_grads) {
  const int d = model.dim();
  CbowSignals s;
  compute_signals(model, ex, s);

  input_grads.clear();
  output_grads.clear();
  const double inv_c = 1.0 / static_cast<double>(ex.context.size());
  for (int id : ex.context) {
    auto& g = input_grads.try_emplace(id, d, 0.0).first->second;
    for (int i = 0; i < d; ++i) g[i] += s.grad_h[i] * inv_c;
  }
  auto add_out = [&](int id, double signal) {
    auto& g = output_grads.try_emplace(id, d, 0.0).first->second;
    for (int i = 0; i < d; ++i) g[i] += signal * s.h[i];
  };
  add_out(ex.center, s.out_signal[0]);
  for (size_t k = 0; k < ex.negatives.size(); ++k)
    add_out(ex.negatives[k], s.out_signal[k + 1]);
}

EmbeddingModel train_cbow(const std::vector<std::vector<std::string>>& docs,
                          const Vocabulary& vocab, const CbowOptions& opts) {
  if (opts.dim < 1) throw Error("DimZero", "embedding dimension must be >= 1");

  std::vector<std::vector<int>> streams;
  streams.reserve(docs.size());
  long long total_positions = 0;
  for (const auto& doc : docs) {
    std::vector<int> ids;
    ids.reserve(doc.size());
    for (const auto& w : doc) ids.push_back(vocab.lookup(w));
    total_positions += static_cast<long long>(ids.size());
    streams.push_back(std::move(ids));
  }
  if (total_positions == 0) throw Error("EmptyCorpus", "no tokens to train on");

  EmbeddingModel model(vocab, opts.dim);
  Rng init_rng = Rng::for_stage(opts.seed, "cbow-init");
  const double half = 0.5 / opts.dim;
  for (int id = 0; id < vocab.size(); ++id) {
    double* row = model.input_row(id);
    for (int i = 0; i < opts.dim; ++i) row[i] = init_rng.uniform(-half, half);
  }
  // output matrix starts at zero

  NegativeSampler sampler(vocab);
  Rng train_rng = Rng::for_stage(opts.seed, "cbow-train");
  const double total = static_cast<double>(opts.epochs) * static_cast<double>(total_positions);
  const double lr_floor = opts.lr0 * 1e-4;
  long long processed = 0;

  CbowSignals sig;
  CbowExample ex;
  const int d = opts.dim;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (const auto& stream : streams) {
      const int len = static_cast<int>(stream.size());
      for (int t = 0; t < len; ++t) {
        double lr = opts.lr0 * (1.0 - static_cast<double>(processed) / total);
        if (lr < lr_floor) lr = lr_floor;
        ++processed;

        ex.context.clear();
        for (int j = std::max(0, t - opts.window);
             j < std::min(len, t + opts.window + 1); ++j)
          if (j != t) ex.context.push_back(stream[j]);
        if (ex.context.empty()) continue;

        ex.center = stream[t];
        ex.negatives.clear();
        if (!sampler.empty()) {
          for (int k = 0; k < opts.negatives; ++k) {
            int id = sampler.draw(train_rng);
            if (id == ex.center) continue;  // skip collisions with the target
            ex.negatives.push_back(id);
          }
        }

        compute_signals(model, ex, sig);
        double* u = model.output_row(ex.center);
        for (int i = 0; i < d; ++i) u[i] -= lr * sig.out_signal[0] * sig.h[i];
        for (size_t k = 0; k < ex.negatives.size(); ++k) {
          double* un = model.output_row(ex.negatives[k]);
          for (int i = 0; i < d; ++i) un[i] -= lr * sig.out_signal[k + 1] * sig.h[i];
        }
        const double scale = lr / static_cast<double>(ex.context.size());
        for (int id : ex.context) {
          double* v = model.input_row(id);
          for (int i = 0; i < d; ++i) v[i] -= scale * sig.grad_h[i];
        }
      }
    }
  }
  return model;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw Error("DimMismatch", "cosine of vectors with different dimensions");
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error("ZeroVector", "cosine of an all-zero vector");
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

namespace {

int require_word(const EmbeddingModel& model, const std::string& word) {
  std::string norm = normalize(word);
  if (!model.vocab().contains(norm))
    throw Error("OutOfVocabulary", "word '" + word + "' not in vocabulary");
  return model.vocab().lookup(norm);
}

}  // namespace

std::vector<ScoredWord> analogy(const EmbeddingModel& model, const std::string& w1,
                                const std::string& w2, const std::string& w4, int top_k) {
  const int d = model.dim();
  int id1 = require_word(model, w1);
  int id2 = require_word(model, w2);
  int id4 = require_word(model, w4);

  std::vector<double> x(d);
  const double *v1 = model.input_row(id1), *v2 = model.input_row(id2),
               *v4 = model.input_row(id4);
  double xx = 0.0;
  for (int i = 0; i < d; ++i) {
    x[i] = v1[i] - v2[i] + v4[i];
    xx += x[i] * x[i];
  }
  if (xx == 0.0) throw Error("ZeroVector", "analogy query vector is zero");
  const double xnorm = std::sqrt(xx);

  std::vector<std::pair<double, int>> scored;
  for (int id = 0; id < model.vocab().size(); ++id) {
    if (id == id1 || id == id2 || id == id4 || id == Vocabulary::kPadId) continue;
    const double* row = model.input_row(id);
    double rr = dot(row, row, d);
    if (rr == 0.0) continue;
    scored.emplace_back(dot(x.data(), row, d) / (xnorm * std::sqrt(rr)), id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (top_k >= 0 && scored.size() > static_cast<size_t>(top_k)) scored.resize(top_k);

  std::vector<ScoredWord> out;
  out.reserve(scored.size());
  for (const auto& [cos, id] : scored) out.push_back({model.vocab().word(id), cos});
  return out;
}

std::vector<AnalogyQuestion> parse_questions(std::istream& in) {
  std::vector<AnalogyQuestion> questions;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#' || line[first] == ':') continue;
    std::istringstream ss(line);
    AnalogyQuestion q;
    std::string extra;
    if (!(ss >> q.w1 >> q.w2 >> q.w3 >> q.w4) || (ss >> extra))
      throw Error("MalformedQuestion",
                  "line " + std::to_string(lineno) + " does not hold exactly four words");
    questions.push_back(std::move(q));
  }
  return questions;
}

std::vector<AnalogyQuestion> load_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileError", "cannot open question file '" + path + "'");
  return parse_questions(in);
}

AnalogyQuality analogy_quality(const EmbeddingModel& model,
                               const std::vector<AnalogyQuestion>& questions) {
  AnalogyQuality q;
  const int d = model.dim();
  for (size_t qi = 0; qi < questions.size(); ++qi) {
    const AnalogyQuestion& question = questions[qi];
    const Vocabulary& vocab = model.vocab();
    std::string n1 = normalize(question.w1), n2 = normalize(question.w2),
                n3 = normalize(question.w3), n4 = normalize(question.w4);
    if (!vocab.contains(n1) || !vocab.contains(n2) || !vocab.contains(n3) ||
        !vocab.contains(n4)) {
      ++q.skipped;
      continue;
    }
    const double *v1 = model.input_row(vocab.lookup(n1)), *v2 = model.input_row(vocab.lookup(n2)),
                 *v4 = model.input_row(vocab.lookup(n4));
    std::vector<double> x(d), target = model.input_vector(vocab.lookup(n3));
    for (int i = 0; i < d; ++i) x[i] = v1[i] - v2[i] + v4[i];
    try {
      q.per_question.push_back(cosine(x, target));
    } catch (const Error&) {  // zero query or target vector
      ++q.skipped;
      continue;
    }
    q.answered_indices.push_back(qi);
  }
  if (q.per_question.empty())
    throw Error("NoAnswerableQuestions", "no question has all four words in the vocabulary");
  double sum = 0.0;
  for (double c : q.per_question) sum += c;
  q.mean_cosine = sum / static_cast<double>(q.per_question.size());
  return q;
}

DatasizeStudy datasize_study(const std::vector<std::vector<std::string>>& docs,
                             const std::vector<AnalogyQuestion>& questions,
                             const DatasizeOptions& opts) {
  if (opts.fractions.empty()) throw Error("BadArgument", "no fractions given");
  for (size_t i = 0; i < opts.fractions.size(); ++i) {
    if (opts.fractions[i] <= 0.0 || opts.fractions[i] > 1.0)
      throw Error("BadArgument", "fractions must lie in (0, 1]");
    if (i > 0 && opts.fractions[i] < opts.fractions[i - 1])
      throw Error("BadArgument", "fractions must be non-decreasing");
  }

  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = Rng::for_stage(opts.seed, "datasize-shuffle");
  shuffle_rng.shuffle(order);

  DatasizeStudy study;
  study.fractions = opts.fractions;
  study.total_questions = questions.size();

  std::vector<EmbeddingModel> models;
  for (double f : opts.fractions) {
    size_t count = static_cast<size_t>(std::llround(f * static_cast<double>(docs.size())));
    count = std::min(std::max<size_t>(count, 1), docs.size());
    std::vector<std::vector<std::string>> subset;
    subset.reserve(count);
    for (size_t i = 0; i < count; ++i) subset.push_back(docs[order[i]]);
    Vocabulary vocab = Vocabulary::build(subset, opts.min_count);
    study.docs_used.push_back(count);
    study.vocab_sizes.push_back(static_cast<size_t>(vocab.size()));
    models.push_back(train_cbow(subset, vocab, opts.cbow));
  }

  // fix the question set to those answerable by the smallest model
  std::vector<AnalogyQuestion> fixed;
  {
    const Vocabulary& vocab = models.front().vocab();
    for (const auto& q : questions) {
      if (vocab.contains(normalize(q.w1)) && vocab.contains(normalize(q.w2)) &&
          vocab.contains(normalize(q.w3)) && vocab.contains(normalize(q.w4)))
        fixed.push_back(q);
    }
  }
  if (fixed.empty())
    throw Error("NoAnswerableQuestions",
                "no question has all four words in the smallest model's vocabulary");
  study.question_count = fixed.size();

  for (const auto& model : models) {
    AnalogyQuality quality = analogy_quality(model, fixed);
    if (quality.per_question.size() != fixed.size())
      throw Error("NoAnswerableQuestions", "fixed question set not answerable by all models");
    study.per_question.push_back(quality.per_question);
    study.means.push_back(quality.mean_cosine);
  }
  for (size_t i = 0; i + 1 < models.size(); ++i)
    study.tests.push_back(paired_t_test(study.per_question[i], study.per_question[i + 1]));
  return study;
}

ComposedLookup::ComposedLookup(const EmbeddingModel* primary, const EmbeddingModel* fallback)
    : primary_(primary), fallback_(fallback) {
  if (!primary_) throw Error("BadArgument", "composed lookup needs a primary model");
  if (fallback_ && fallback_->dim() != primary_->dim())
    throw Error("DimMismatch", "fallback dimension " + std::to_string(fallback_->dim()) +
                                   " does not match primary dimension " +
                                   std::to_string(primary_->dim()));
}

int ComposedLookup::dim() const { return primary_->dim(); }

ComposedLookup::Result ComposedLookup::lookup(const std::string& word) {
  std::string norm = normalize(word);
  if (primary_->vocab().contains(norm)) {
    ++counters_.from_primary;
    return {primary_->input_row(primary_->vocab().lookup(norm)), LookupSource::kPrimary};
  }
  if (fallback_ && fallback_->vocab().contains(norm)) {
    ++counters_.from_fallback;
    return {fallback_->input_row(fallback_->vocab().lookup(norm)), LookupSource::kFallback};
  }
  ++counters_.unknown;
  return {primary_->input_row(Vocabulary::kUnkId), LookupSource::kUnknown};
}

void save_text(const EmbeddingModel& model, std::ostream& out) {
  out << model.vocab().size() << ' ' << model.dim() << '\n';
  char buf[40];
  for (int id = 0; id < model.vocab().size(); ++id) {
    out << model.vocab().word(id);
    const double* row = model.input_row(id);
    for (int i = 0; i < model.dim(); ++i) {
      std::snprintf(buf, sizeof(buf), " %.17g", row[i]);
      out << buf;
    }
    out << '\n';
  }
}

void save_text_file(const EmbeddingModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("FileError", "cannot write embedding file '" + path + "'");
  save_text(model, out);
}

EmbeddingModel load_text(std::istream& in, int expected_dim) {
  std::string header;
  if (!std::getline(in, header)) throw Error("MalformedHeader", "empty embedding file");
  std::istringstream hs(header);
  long long count = 0, dim = 0;
  std::string extra;
  if (!(hs >> count >> dim) || (hs >> extra) || count < 0 || dim < 1)
    throw Error("MalformedHeader", "expected '|V| dim' on the first line");
  if (expected_dim > 0 && dim != expected_dim)
    throw Error("DimMismatch", "file dimension " + std::to_string(dim) + ", expected " +
                                   std::to_string(expected_dim));

  std::vector<std::string> words;
  std::vector<std::vector<double>> vectors;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> v(dim);
    for (long long i = 0; i < dim; ++i)
      if (!(ls >> v[i]))
        throw Error("DimMismatch", "row for '" + word + "' has fewer than " +
                                       std::to_string(dim) + " values");
    if (ls >> extra)
      throw Error("DimMismatch", "row for '" + word + "' has more than " +
                                     std::to_string(dim) + " values");
    words.push_back(word);
    vectors.push_back(std::move(v));
  }
  if (static_cast<long long>(words.size()) != count)
    throw Error("CountMismatch", "header declares " + std::to_string(count) + " words, file has " +
                                     std::to_string(words.size()));

  Vocabulary vocab = Vocabulary::from_word_list(words);
  EmbeddingModel model(std::move(vocab), static_cast<int>(dim));
  for (size_t i = 0; i < words.size(); ++i)
    model.set_input_vector(model.vocab().lookup(words[i]), vectors[i]);
  return model;
}

EmbeddingModel load_text_file(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error("FileError", "cannot open embedding file '" + path + "'");
  return load_text(in, expected_dim);
}

}  // namespace deid
