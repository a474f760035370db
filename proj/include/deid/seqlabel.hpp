#ifndef DEID_SEQLABEL_HPP
#define DEID_SEQLABEL_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "deid/corpus.hpp"
#include "deid/embeddings.hpp"
#include "deid/labels.hpp"
#include "deid/rng.hpp"

namespace deid {

struct TaggerConfig {
  int input_dim = 200;
  int hidden_dim = 200;
  int window_len = 15;
  int label_width = LabelSchema::kWidth;
  double dropout = 0.2;
  bool softmax_output = false;  // alternative to the per-element sigmoid + BCE head
};

// Parameter bundle for one LSTM layer plus the dense head. Gate order is
// input, forget, output, candidate throughout (weights, gradients, moments,
// checkpoints).
struct TaggerTensors {
  std::array<std::vector<double>, 4> w;  // hidden x input
  std::array<std::vector<double>, 4> u;  // hidden x hidden
  std::array<std::vector<double>, 4> b;  // hidden
  std::vector<double> wy;                // labels x hidden
  std::vector<double> by;                // labels

  void resize(const TaggerConfig& cfg);
  void fill(double value);
  std::vector<std::vector<double>*> tensors();
  std::vector<const std::vector<double>*> tensors() const;
};

// Per-window activations cached by the forward pass for backpropagation.
struct ForwardCache {
  int steps = 0;
  std::vector<double> x;                  // steps x d
  std::vector<double> gi, gf, go, gg;     // steps x h gate activations
  std::vector<double> c, tc, h;           // steps x h
  std::vector<double> mask;               // steps x h dropout scales; empty = inference
  std::vector<double> z, y;               // steps x L pre-activations and probabilities
};

class LstmTagger {
 public:
  LstmTagger(TaggerConfig cfg, uint64_t schema_hash);

  // Weights uniform in [-0.08, 0.08]; forget-gate bias 1, all other biases 0.
  static LstmTagger init(const TaggerConfig& cfg, uint64_t schema_hash, uint64_t seed);

  const TaggerConfig& config() const { return cfg_; }
  uint64_t schema_hash() const { return schema_hash_; }
  TaggerTensors& params() { return params_; }
  const TaggerTensors& params() const { return params_; }

  // One LSTM cell update: i,f,o = sigmoid gates, g = tanh candidate,
  // c = f*c_prev + i*g, h = o*tanh(c).
  void lstm_step(const double* x, const double* h_prev, const double* c_prev, double* h_out,
                 double* c_out) const;

  // Unrolls the cell from zero state over `steps` inputs and applies the
  // dense head per step. `masks` (steps x h inverted-dropout scales) enables
  // training mode; pass nullptr for inference.
  void forward(const double* xs, int steps, const double* masks, ForwardCache& cache) const;

  // Exact loss gradients via BPTT; `targets` is steps x L one-hot rows.
  // Gradients are accumulated into zeroed `grads`.
  void backward(const ForwardCache& cache, const double* targets, TaggerTensors& grads) const;

  uint64_t parameter_checksum() const;

 private:
  TaggerConfig cfg_;
  uint64_t schema_hash_;
  TaggerTensors params_;
};

// Mean over all steps x L elements of -[t log p + (1-t) log(1-p)] with p
// clamped to [1e-7, 1 - 1e-7].
double bce_loss(const double* probs, const double* targets, int count);
double bce_loss(const std::vector<double>& probs, const std::vector<double>& targets);

// Mean over steps of the categorical cross entropy (softmax head).
double softmax_ce_loss(const double* probs, const double* targets, int steps, int width);

double window_loss(const LstmTagger& tagger, const ForwardCache& cache,
                   const double* targets);

// steps x h inverted-dropout scales: 0 with probability rate, 1/(1-rate)
// otherwise.
std::vector<double> make_dropout_masks(int steps, int hidden, double rate, Rng& rng);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(const TaggerConfig& cfg);
  void step(TaggerTensors& params, const TaggerTensors& grads, const AdamOptions& opts);
  uint64_t steps_taken() const { return t_; }

 private:
  uint64_t t_ = 0;
  TaggerTensors m_, v_;
};

struct SplitIndices {
  std::vector<size_t> train, val, test;
};

// 56/19/25 random split over windows (the default), or over documents when
// split_by_document is set (windows follow their document).
SplitIndices split_windows(const std::vector<Window>& windows, double train_fraction,
                           double val_fraction, bool split_by_document, Rng& rng);

struct TrainOptions {
  int epochs = 10;
  uint64_t seed = 1;
  double train_fraction = 0.56;
  double val_fraction = 0.19;
  bool split_by_document = false;
  AdamOptions adam;
  TaggerConfig config;
  bool measure_train_loss = false;  // extra inference passes before/after training
  std::ostream* log = nullptr;
};

struct EpochStats {
  int epoch = 0;
  double val_loss = -1.0;
  double val_f = -1.0;
};

struct TrainResult {
  LstmTagger tagger;
  SplitIndices split;
  std::vector<EpochStats> epochs;
  double initial_train_loss = -1.0;
  double final_train_loss = -1.0;
};

// Batch-size-1 Adam training over the train partition, reshuffled per epoch.
TrainResult train_tagger(const std::vector<Window>& windows, ComposedLookup& lookup,
                         const LabelSchema& schema, const TrainOptions& opts);

// Inference-mode label ids for each window position (padding positions get
// whatever the net decodes; callers drop them).
std::vector<std::vector<int>> predict_windows(const std::vector<Window>& windows,
                                              const LstmTagger& tagger, ComposedLookup& lookup,
                                              const LabelSchema& schema);

struct WindowPrediction {
  size_t start = 0;
  int n_real = 0;
  std::vector<int> labels;
};

// Stride-1 windows over a document, decoded per step.
std::vector<WindowPrediction> predict_document(const AnnotatedDocument& doc,
                                               const LstmTagger& tagger, ComposedLookup& lookup,
                                               const LabelSchema& schema);

// Self-describing little-endian checkpoint; load rejects header mismatches
// (magic, version, byte order, label width, schema hash).
void save_checkpoint(const LstmTagger& tagger, std::ostream& out);
void save_checkpoint_file(const LstmTagger& tagger, const std::string& path);
LstmTagger load_checkpoint(std::istream& in, const LabelSchema* schema = nullptr);
LstmTagger load_checkpoint_file(const std::string& path, const LabelSchema* schema = nullptr);

}  // namespace deid

#endif  // DEID_SEQLABEL_HPP
