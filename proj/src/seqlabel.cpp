#include "deid/seqlabel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "deid/error.hpp"

namespace deid {

namespace {

constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void TaggerTensors::resize(const TaggerConfig& cfg) {
  const size_t hd = static_cast<size_t>(cfg.hidden_dim) * cfg.input_dim;
  const size_t hh = static_cast<size_t>(cfg.hidden_dim) * cfg.hidden_dim;
  for (int g = 0; g < 4; ++g) {
    w[g].assign(hd, 0.0);
    u[g].assign(hh, 0.0);
    b[g].assign(cfg.hidden_dim, 0.0);
  }
  wy.assign(static_cast<size_t>(cfg.label_width) * cfg.hidden_dim, 0.0);
  by.assign(cfg.label_width, 0.0);
}

void TaggerTensors::fill(double value) {
  for (auto* t : tensors()) std::fill(t->begin(), t->end(), value);
}

std::vector<std::vector<double>*> TaggerTensors::tensors() {
  std::vector<std::vector<double>*> out;
  for (int g = 0; g < 4; ++g) out.push_back(&w[g]);
  for (int g = 0; g < 4; ++g) out.push_back(&u[g]);
  for (int g = 0; g < 4; ++g) out.push_back(&b[g]);
  out.push_back(&wy);
  out.push_back(&by);
  return out;
}

std::vector<const std::vector<double>*> TaggerTensors::tensors() const {
  std::vector<const std::vector<double>*> out;
  for (int g = 0; g < 4; ++g) out.push_back(&w[g]);
  for (int g = 0; g < 4; ++g) out.push_back(&u[g]);
  for (int g = 0; g < 4; ++g) out.push_back(&b[g]);
  out.push_back(&wy);
  out.push_back(&by);
  return out;
}

LstmTagger::LstmTagger(TaggerConfig cfg, uint64_t schema_hash)
    : cfg_(cfg), schema_hash_(schema_hash) {
  if (cfg_.input_dim < 1 || cfg_.hidden_dim < 1 || cfg_.window_len < 1 || cfg_.label_width < 1)
    throw Error("BadArgument", "tagger dimensions must be >= 1");
  params_.resize(cfg_);
}

LstmTagger LstmTagger::init(const TaggerConfig& cfg, uint64_t schema_hash, uint64_t seed) {
  LstmTagger tagger(cfg, schema_hash);
  Rng rng = Rng::for_stage(seed, "tagger-init");
  for (int g = 0; g < 4; ++g) {
    for (double& v : tagger.params_.w[g]) v = rng.uniform(-0.08, 0.08);
    for (double& v : tagger.params_.u[g]) v = rng.uniform(-0.08, 0.08);
  }
  for (double& v : tagger.params_.wy) v = rng.uniform(-0.08, 0.08);
  std::fill(tagger.params_.b[1].begin(), tagger.params_.b[1].end(), 1.0);  // forget gate
  return tagger;
}

void LstmTagger::lstm_step(const double* x, const double* h_prev, const double* c_prev,
                           double* h_out, double* c_out) const {
  const int d = cfg_.input_dim, h = cfg_.hidden_dim;
  for (int j = 0; j < h; ++j) {
    double a[4];
    for (int g = 0; g < 4; ++g) {
      const double* wrow = params_.w[g].data() + static_cast<size_t>(j) * d;
      const double* urow = params_.u[g].data() + static_cast<size_t>(j) * h;
      double s = params_.b[g][j];
      for (int i = 0; i < d; ++i) s += wrow[i] * x[i];
      for (int k = 0; k < h; ++k) s += urow[k] * h_prev[k];
      a[g] = s;
    }
    double gi = sigmoid(a[0]), gf = sigmoid(a[1]), go = sigmoid(a[2]), gg = std::tanh(a[3]);
    double c = gf * c_prev[j] + gi * gg;
    c_out[j] = c;
    h_out[j] = go * std::tanh(c);
  }
}

void LstmTagger::forward(const double* xs, int steps, const double* masks,
                         ForwardCache& cache) const {
  const int d = cfg_.input_dim, h = cfg_.hidden_dim, L = cfg_.label_width;
  cache.steps = steps;
  cache.x.assign(xs, xs + static_cast<size_t>(steps) * d);
  const size_t sh = static_cast<size_t>(steps) * h;
  cache.gi.resize(sh);
  cache.gf.resize(sh);
  cache.go.resize(sh);
  cache.gg.resize(sh);
  cache.c.resize(sh);
  cache.tc.resize(sh);
  cache.h.resize(sh);
  if (masks)
    cache.mask.assign(masks, masks + sh);
  else
    cache.mask.clear();
  cache.z.resize(static_cast<size_t>(steps) * L);
  cache.y.resize(static_cast<size_t>(steps) * L);

  std::vector<double> zeros(h, 0.0);
  for (int t = 0; t < steps; ++t) {
    const double* x_t = cache.x.data() + static_cast<size_t>(t) * d;
    const double* h_prev = t > 0 ? cache.h.data() + static_cast<size_t>(t - 1) * h : zeros.data();
    const double* c_prev = t > 0 ? cache.c.data() + static_cast<size_t>(t - 1) * h : zeros.data();
    double* gi = cache.gi.data() + static_cast<size_t>(t) * h;
    double* gf = cache.gf.data() + static_cast<size_t>(t) * h;
    double* go = cache.go.data() + static_cast<size_t>(t) * h;
    double* gg = cache.gg.data() + static_cast<size_t>(t) * h;
    double* c = cache.c.data() + static_cast<size_t>(t) * h;
    double* tc = cache.tc.data() + static_cast<size_t>(t) * h;
    double* hv = cache.h.data() + static_cast<size_t>(t) * h;

    for (int j = 0; j < h; ++j) {
      double a[4];
      for (int g = 0; g < 4; ++g) {
        const double* wrow = params_.w[g].data() + static_cast<size_t>(j) * d;
        const double* urow = params_.u[g].data() + static_cast<size_t>(j) * h;
        double s = params_.b[g][j];
        for (int i = 0; i < d; ++i) s += wrow[i] * x_t[i];
        for (int k = 0; k < h; ++k) s += urow[k] * h_prev[k];
        a[g] = s;
      }
      gi[j] = sigmoid(a[0]);
      gf[j] = sigmoid(a[1]);
      go[j] = sigmoid(a[2]);
      gg[j] = std::tanh(a[3]);
      c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
      tc[j] = std::tanh(c[j]);
      hv[j] = go[j] * tc[j];
    }

    const double* mask_t = cache.mask.empty() ? nullptr : cache.mask.data() + static_cast<size_t>(t) * h;
    double* z = cache.z.data() + static_cast<size_t>(t) * L;
    double* y = cache.y.data() + static_cast<size_t>(t) * L;
    for (int k = 0; k < L; ++k) {
      const double* wyrow = params_.wy.data() + static_cast<size_t>(k) * h;
      double s = params_.by[k];
      if (mask_t)
        for (int j = 0; j < h; ++j) s += wyrow[j] * hv[j] * mask_t[j];
      else
        for (int j = 0; j < h; ++j) s += wyrow[j] * hv[j];
      z[k] = s;
    }
    if (cfg_.softmax_output) {
      double zmax = z[0];
      for (int k = 1; k < L; ++k) zmax = std::max(zmax, z[k]);
      double sum = 0.0;
      for (int k = 0; k < L; ++k) {
        y[k] = std::exp(z[k] - zmax);
        sum += y[k];
      }
      for (int k = 0; k < L; ++k) y[k] /= sum;
    } else {
      for (int k = 0; k < L; ++k) y[k] = sigmoid(z[k]);
    }
  }
}

void LstmTagger::backward(const ForwardCache& cache, const double* targets,
                          TaggerTensors& grads) const {
  const int d = cfg_.input_dim, h = cfg_.hidden_dim, L = cfg_.label_width;
  const int steps = cache.steps;
  grads.resize(cfg_);

  std::vector<double> dh_rec(h, 0.0), dc_rec(h, 0.0), dh(h), dz(L), head_back(h);
  std::vector<double> da[4];
  for (int g = 0; g < 4; ++g) da[g].resize(h);
  std::vector<double> dc_next(h);
  std::vector<double> zeros(h, 0.0);

  const double inv_bce = 1.0 / (static_cast<double>(steps) * L);
  const double inv_ce = 1.0 / static_cast<double>(steps);

  for (int t = steps - 1; t >= 0; --t) {
    const double* y_t = cache.y.data() + static_cast<size_t>(t) * L;
    const double* tgt = targets + static_cast<size_t>(t) * L;
    const double* h_t = cache.h.data() + static_cast<size_t>(t) * h;
    const double* mask_t = cache.mask.empty() ? nullptr : cache.mask.data() + static_cast<size_t>(t) * h;

    if (cfg_.softmax_output) {
      for (int k = 0; k < L; ++k) dz[k] = (y_t[k] - tgt[k]) * inv_ce;
    } else {
      for (int k = 0; k < L; ++k) {
        // the loss is flat where the probability has been clamped
        if (y_t[k] < kClampLo || y_t[k] > kClampHi)
          dz[k] = 0.0;
        else
          dz[k] = (y_t[k] - tgt[k]) * inv_bce;
      }
    }

    std::fill(head_back.begin(), head_back.end(), 0.0);
    for (int k = 0; k < L; ++k) {
      double dzk = dz[k];
      grads.by[k] += dzk;
      if (dzk == 0.0) continue;
      double* gwy = grads.wy.data() + static_cast<size_t>(k) * h;
      const double* wyrow = params_.wy.data() + static_cast<size_t>(k) * h;
      if (mask_t) {
        for (int j = 0; j < h; ++j) {
          gwy[j] += dzk * h_t[j] * mask_t[j];
          head_back[j] += dzk * wyrow[j];
        }
      } else {
        for (int j = 0; j < h; ++j) {
          gwy[j] += dzk * h_t[j];
          head_back[j] += dzk * wyrow[j];
        }
      }
    }

    const double* gi = cache.gi.data() + static_cast<size_t>(t) * h;
    const double* gf = cache.gf.data() + static_cast<size_t>(t) * h;
    const double* go = cache.go.data() + static_cast<size_t>(t) * h;
    const double* gg = cache.gg.data() + static_cast<size_t>(t) * h;
    const double* tc = cache.tc.data() + static_cast<size_t>(t) * h;
    const double* c_prev = t > 0 ? cache.c.data() + static_cast<size_t>(t - 1) * h : zeros.data();
    const double* h_prev = t > 0 ? cache.h.data() + static_cast<size_t>(t - 1) * h : zeros.data();
    const double* x_t = cache.x.data() + static_cast<size_t>(t) * d;

    for (int j = 0; j < h; ++j) {
      double dhj = dh_rec[j] + (mask_t ? head_back[j] * mask_t[j] : head_back[j]);
      double dov = dhj * tc[j];
      da[2][j] = dov * go[j] * (1.0 - go[j]);
      double dcj = dhj * go[j] * (1.0 - tc[j] * tc[j]) + dc_rec[j];
      double div = dcj * gg[j];
      da[0][j] = div * gi[j] * (1.0 - gi[j]);
      double dfv = dcj * c_prev[j];
      da[1][j] = dfv * gf[j] * (1.0 - gf[j]);
      double dgv = dcj * gi[j];
      da[3][j] = dgv * (1.0 - gg[j] * gg[j]);
      dc_next[j] = dcj * gf[j];
    }

    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    for (int g = 0; g < 4; ++g) {
      for (int j = 0; j < h; ++j) {
        double a = da[g][j];
        grads.b[g][j] += a;
        if (a == 0.0) continue;
        double* gw = grads.w[g].data() + static_cast<size_t>(j) * d;
        for (int i = 0; i < d; ++i) gw[i] += a * x_t[i];
        double* gu = grads.u[g].data() + static_cast<size_t>(j) * h;
        const double* urow = params_.u[g].data() + static_cast<size_t>(j) * h;
        for (int k = 0; k < h; ++k) {
          gu[k] += a * h_prev[k];
          dh_rec[k] += a * urow[k];
        }
      }
    }
    std::swap(dc_rec, dc_next);
  }
}

uint64_t LstmTagger::parameter_checksum() const {
  uint64_t hash = 1469598103934665603ULL;
  for (const auto* t : params_.tensors())
    for (double v : *t) {
      uint64_t bits = std::bit_cast<uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        hash ^= (bits >> (8 * i)) & 0xff;
        hash *= 1099511628211ULL;
      }
    }
  return hash;
}

double bce_loss(const double* probs, const double* targets, int count) {
  double sum = 0.0;
  for (int i = 0; i < count; ++i) {
    double p = std::min(std::max(probs[i], kClampLo), kClampHi);
    sum -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(count);
}

double bce_loss(const std::vector<double>& probs, const std::vector<double>& targets) {
  if (probs.size() != targets.size())
    throw Error("ShapeMismatch", "probability and target shapes differ");
  if (probs.empty()) throw Error("ShapeMismatch", "empty probability vector");
  return bce_loss(probs.data(), targets.data(), static_cast<int>(probs.size()));
}

double softmax_ce_loss(const double* probs, const double* targets, int steps, int width) {
  double sum = 0.0;
  for (int t = 0; t < steps; ++t)
    for (int k = 0; k < width; ++k) {
      double tk = targets[t * width + k];
      if (tk != 0.0) sum -= tk * std::log(std::max(probs[t * width + k], 1e-300));
    }
  return sum / static_cast<double>(steps);
}

double window_loss(const LstmTagger& tagger, const ForwardCache& cache, const double* targets) {
  const int L = tagger.config().label_width;
  if (tagger.config().softmax_output)
    return softmax_ce_loss(cache.y.data(), targets, cache.steps, L);
  return bce_loss(cache.y.data(), targets, cache.steps * L);
}

std::vector<double> make_dropout_masks(int steps, int hidden, double rate, Rng& rng) {
  std::vector<double> masks(static_cast<size_t>(steps) * hidden, 1.0);
  if (rate <= 0.0) return masks;
  if (rate >= 1.0) throw Error("BadArgument", "dropout rate must be < 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : masks) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  return masks;
}

AdamState::AdamState(const TaggerConfig& cfg) {
  m_.resize(cfg);
  v_.resize(cfg);
}

void AdamState::step(TaggerTensors& params, const TaggerTensors& grads, const AdamOptions& opts) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t_));
  auto ps = params.tensors();
  auto gs = grads.tensors();
  auto ms = m_.tensors();
  auto vs = v_.tensors();
  for (size_t ti = 0; ti < ps.size(); ++ti) {
    auto& p = *ps[ti];
    const auto& g = *gs[ti];
    auto& m = *ms[ti];
    auto& v = *vs[ti];
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      p[i] -= opts.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts.eps);
    }
  }
}

SplitIndices split_windows(const std::vector<Window>& windows, double train_fraction,
                           double val_fraction, bool split_by_document, Rng& rng) {
  SplitIndices split;
  const size_t n = windows.size();
  if (!split_by_document) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    size_t cut1 = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(n)));
    size_t cut2 = static_cast<size_t>(
        std::llround((train_fraction + val_fraction) * static_cast<double>(n)));
    cut1 = std::min(cut1, n);
    cut2 = std::min(std::max(cut2, cut1), n);
    split.train.assign(order.begin(), order.begin() + cut1);
    split.val.assign(order.begin() + cut1, order.begin() + cut2);
    split.test.assign(order.begin() + cut2, order.end());
    return split;
  }

  std::vector<std::string> docs;
  std::unordered_map<std::string, size_t> doc_index;
  for (const Window& w : windows)
    if (doc_index.emplace(w.doc_id, docs.size()).second) docs.push_back(w.doc_id);
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cut1 = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(docs.size())));
  size_t cut2 = static_cast<size_t>(
      std::llround((train_fraction + val_fraction) * static_cast<double>(docs.size())));
  cut1 = std::min(cut1, docs.size());
  cut2 = std::min(std::max(cut2, cut1), docs.size());
  // partition id per document: 0 train, 1 val, 2 test
  std::vector<int> part(docs.size(), 2);
  for (size_t i = 0; i < cut1; ++i) part[order[i]] = 0;
  for (size_t i = cut1; i < cut2; ++i) part[order[i]] = 1;
  for (size_t i = 0; i < n; ++i) {
    switch (part[doc_index[windows[i].doc_id]]) {
      case 0: split.train.push_back(i); break;
      case 1: split.val.push_back(i); break;
      default: split.test.push_back(i); break;
    }
  }
  return split;
}

namespace {

// Resolves every window position to a row in a dense matrix of unique
// vectors, so the training loop never touches the hash maps. Lookup counters
// are incremented once per token occurrence, matching the provenance
// bookkeeping of the composed-lookup contract.
class WindowVectorizer {
 public:
  WindowVectorizer(const std::vector<Window>& windows, ComposedLookup& lookup)
      : dim_(lookup.dim()) {
    const double* pad = lookup.primary().input_row(Vocabulary::kPadId);
    std::unordered_map<const double*, int32_t> row_of;
    auto row_for = [&](const double* src) {
      auto [it, inserted] = row_of.try_emplace(src, static_cast<int32_t>(row_of.size()));
      if (inserted) data_.insert(data_.end(), src, src + dim_);
      return it->second;
    };
    for (const Window& w : windows) {
      n_ = static_cast<int>(w.input_ids.size());
      for (int j = 0; j < n_; ++j) {
        const double* src = j < w.n_real ? lookup.lookup(w.words[j]).vec : pad;
        rows_.push_back(row_for(src));
      }
    }
  }

  int steps() const { return n_; }

  void fill(size_t window_idx, std::vector<double>& xs) const {
    xs.resize(static_cast<size_t>(n_) * dim_);
    const int32_t* r = rows_.data() + window_idx * n_;
    for (int j = 0; j < n_; ++j)
      std::memcpy(xs.data() + static_cast<size_t>(j) * dim_,
                  data_.data() + static_cast<size_t>(r[j]) * dim_, sizeof(double) * dim_);
  }

 private:
  int dim_;
  int n_ = 0;
  std::vector<double> data_;
  std::vector<int32_t> rows_;
};

void one_hot_targets(const Window& w, int width, std::vector<double>& out) {
  out.assign(w.label_ids.size() * static_cast<size_t>(width), 0.0);
  for (size_t j = 0; j < w.label_ids.size(); ++j) out[j * width + w.label_ids[j]] = 1.0;
}

struct ValMetrics {
  double loss = -1.0;
  double f = -1.0;
};

ValMetrics evaluate_windows(const std::vector<Window>& windows, const std::vector<size_t>& idx,
                            const LstmTagger& tagger, const WindowVectorizer& vec,
                            const LabelSchema& schema) {
  if (idx.empty()) return {};
  ForwardCache cache;
  std::vector<double> xs, targets;
  double loss_sum = 0.0;
  long long tp = 0, fp = 0, fn = 0;
  const int n = vec.steps();
  for (size_t wi : idx) {
    const Window& w = windows[wi];
    vec.fill(wi, xs);
    tagger.forward(xs.data(), n, nullptr, cache);
    one_hot_targets(w, tagger.config().label_width, targets);
    loss_sum += window_loss(tagger, cache, targets.data());
    for (int j = 0; j < w.n_real; ++j) {
      std::vector<double> probs(cache.y.begin() + static_cast<size_t>(j) * tagger.config().label_width,
                                cache.y.begin() + static_cast<size_t>(j + 1) * tagger.config().label_width);
      int pred = schema.decode_index(probs);
      int gold = w.label_ids[j];
      const std::string& pc = schema.category_of(pred);
      const std::string& gc = schema.category_of(gold);
      if (!pc.empty() && pc == gc)
        ++tp;
      else {
        if (!pc.empty()) ++fp;
        if (!gc.empty()) ++fn;
      }
    }
  }
  ValMetrics m;
  m.loss = loss_sum / static_cast<double>(idx.size());
  double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  return m;
}

double mean_inference_loss(const std::vector<Window>& windows, const std::vector<size_t>& idx,
                           const LstmTagger& tagger, const WindowVectorizer& vec) {
  if (idx.empty()) return -1.0;
  ForwardCache cache;
  std::vector<double> xs, targets;
  double sum = 0.0;
  for (size_t wi : idx) {
    vec.fill(wi, xs);
    tagger.forward(xs.data(), vec.steps(), nullptr, cache);
    one_hot_targets(windows[wi], tagger.config().label_width, targets);
    sum += window_loss(tagger, cache, targets.data());
  }
  return sum / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train_tagger(const std::vector<Window>& windows, ComposedLookup& lookup,
                         const LabelSchema& schema, const TrainOptions& opts) {
  if (windows.empty()) throw Error("EmptyTrainingSet", "no windows to train on");

  TaggerConfig cfg = opts.config;
  cfg.input_dim = lookup.dim();
  cfg.window_len = static_cast<int>(windows.front().input_ids.size());
  cfg.label_width = schema.width();

  Rng split_rng = Rng::for_stage(opts.seed, "tagger-split");
  SplitIndices split = split_windows(windows, opts.train_fraction, opts.val_fraction,
                                     opts.split_by_document, split_rng);
  if (split.train.empty()) throw Error("EmptyTrainingSet", "train partition is empty");

  TrainResult result{LstmTagger::init(cfg, schema.hash(), opts.seed), std::move(split), {}, -1, -1};
  LstmTagger& tagger = result.tagger;

  WindowVectorizer vec(windows, lookup);
  AdamState adam(cfg);
  Rng shuffle_rng = Rng::for_stage(opts.seed, "tagger-shuffle");
  Rng dropout_rng = Rng::for_stage(opts.seed, "tagger-dropout");

  if (opts.measure_train_loss)
    result.initial_train_loss = mean_inference_loss(windows, result.split.train, tagger, vec);

  ForwardCache cache;
  TaggerTensors grads;
  std::vector<double> xs, targets, masks;
  std::vector<size_t> order = result.split.train;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t wi : order) {
      const Window& w = windows[wi];
      vec.fill(wi, xs);
      masks = make_dropout_masks(cfg.window_len, cfg.hidden_dim, cfg.dropout, dropout_rng);
      tagger.forward(xs.data(), cfg.window_len, masks.data(), cache);
      one_hot_targets(w, cfg.label_width, targets);
      tagger.backward(cache, targets.data(), grads);
      adam.step(tagger.params(), grads, opts.adam);
    }
    ValMetrics val = evaluate_windows(windows, result.split.val, tagger, vec, schema);
    result.epochs.push_back({epoch, val.loss, val.f});
    if (opts.log)
      (*opts.log) << "epoch " << epoch << "/" << opts.epochs << "  val_loss=" << val.loss
                  << "  val_f=" << val.f << '\n';
  }

  if (opts.measure_train_loss)
    result.final_train_loss = mean_inference_loss(windows, result.split.train, tagger, vec);
  return result;
}

std::vector<std::vector<int>> predict_windows(const std::vector<Window>& windows,
                                              const LstmTagger& tagger, ComposedLookup& lookup,
                                              const LabelSchema& schema) {
  std::vector<std::vector<int>> out;
  if (windows.empty()) return out;
  if (lookup.dim() != tagger.config().input_dim)
    throw Error("DimMismatch", "embedding dimension does not match tagger input dimension");

  WindowVectorizer vec(windows, lookup);
  const int n = vec.steps();
  const int L = tagger.config().label_width;
  ForwardCache cache;
  std::vector<double> xs;
  out.reserve(windows.size());
  for (size_t wi = 0; wi < windows.size(); ++wi) {
    vec.fill(wi, xs);
    tagger.forward(xs.data(), n, nullptr, cache);
    std::vector<int> labels(n);
    for (int j = 0; j < n; ++j) {
      std::vector<double> probs(cache.y.begin() + static_cast<size_t>(j) * L,
                                cache.y.begin() + static_cast<size_t>(j + 1) * L);
      labels[j] = schema.decode_index(probs);
    }
    out.push_back(std::move(labels));
  }
  return out;
}

std::vector<WindowPrediction> predict_document(const AnnotatedDocument& doc,
                                               const LstmTagger& tagger, ComposedLookup& lookup,
                                               const LabelSchema& schema) {
  std::vector<Window> windows =
      slide_windows(doc, lookup.primary().vocab(), schema, tagger.config().window_len, 1);
  std::vector<std::vector<int>> labels = predict_windows(windows, tagger, lookup, schema);
  std::vector<WindowPrediction> out;
  out.reserve(windows.size());
  for (size_t i = 0; i < windows.size(); ++i)
    out.push_back({windows[i].start, windows[i].n_real, std::move(labels[i])});
  return out;
}

namespace {

constexpr char kMagic[8] = {'D', 'E', 'I', 'D', 'L', 'S', 'T', 'M'};
constexpr uint32_t kByteOrder = 0x01020304u;
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error("CheckpointMismatch", "truncated checkpoint");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw Error("CheckpointMismatch", "truncated checkpoint");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_checkpoint(const LstmTagger& tagger, std::ostream& out) {
  const TaggerConfig& cfg = tagger.config();
  out.write(kMagic, 8);
  put_u32(out, kByteOrder);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(cfg.input_dim));
  put_u32(out, static_cast<uint32_t>(cfg.hidden_dim));
  put_u32(out, static_cast<uint32_t>(cfg.window_len));
  put_u32(out, static_cast<uint32_t>(cfg.label_width));
  put_f64(out, cfg.dropout);
  put_u32(out, cfg.softmax_output ? 1 : 0);
  put_u64(out, tagger.schema_hash());
  for (const auto* t : tagger.params().tensors())
    for (double v : *t) put_f64(out, v);
}

void save_checkpoint_file(const LstmTagger& tagger, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("FileError", "cannot write checkpoint '" + path + "'");
  save_checkpoint(tagger, out);
}

LstmTagger load_checkpoint(std::istream& in, const LabelSchema* schema) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw Error("CheckpointMismatch", "bad checkpoint magic");
  if (get_u32(in) != kByteOrder) throw Error("CheckpointMismatch", "unexpected byte order");
  uint32_t version = get_u32(in);
  if (version != kVersion)
    throw Error("CheckpointMismatch", "unsupported version " + std::to_string(version));

  TaggerConfig cfg;
  cfg.input_dim = static_cast<int>(get_u32(in));
  cfg.hidden_dim = static_cast<int>(get_u32(in));
  cfg.window_len = static_cast<int>(get_u32(in));
  cfg.label_width = static_cast<int>(get_u32(in));
  cfg.dropout = get_f64(in);
  cfg.softmax_output = get_u32(in) != 0;
  uint64_t schema_hash = get_u64(in);
  if (schema) {
    if (cfg.label_width != schema->width())
      throw Error("CheckpointMismatch", "label width does not match schema");
    if (schema_hash != schema->hash())
      throw Error("CheckpointMismatch", "schema hash does not match checkpoint");
  }

  LstmTagger tagger(cfg, schema_hash);
  for (auto* t : tagger.params().tensors())
    for (double& v : *t) v = get_f64(in);
  char extra;
  if (in.read(&extra, 1)) throw Error("CheckpointMismatch", "trailing bytes in checkpoint");
  return tagger;
}

LstmTagger load_checkpoint_file(const std::string& path, const LabelSchema* schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileError", "cannot open checkpoint '" + path + "'");
  return load_checkpoint(in, schema);
}

}  // namespace deid
