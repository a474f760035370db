#include "deid/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>

#include "deid/error.hpp"

namespace deid {

namespace {

bool is_word_byte(unsigned char c) {
  if (c >= 0x80) return true;  // keep UTF-8 sequences inside word tokens
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

bool is_space_byte(unsigned char c) { return c < 0x80 && std::isspace(c); }

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    size_t start = i;
    if (is_word_byte(c)) {
      while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++i;  // punctuation: one byte, one token
    }
    tokens.push_back({text.substr(start, i - start), start, i});
  }
  return tokens;
}

std::string normalize(const std::string& token_text) {
  static const char kDigit[] = "DIGIT";
  std::string out;
  out.reserve(token_text.size());
  size_t i = 0;
  while (i < token_text.size()) {
    // "DIGIT" is the reserved replacement atom; copying it verbatim keeps
    // normalize idempotent.
    if (token_text.compare(i, 5, kDigit) == 0) {
      out.append(kDigit);
      i += 5;
      continue;
    }
    char c = token_text[i++];
    if (c >= '0' && c <= '9')
      out.append(kDigit);
    else if (c >= 'A' && c <= 'Z')
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    else
      out.push_back(c);
  }
  return out;
}

bool is_digit_pattern(const std::string& normalized) {
  if (normalized.empty() || normalized.size() % 5 != 0) return false;
  for (size_t i = 0; i < normalized.size(); i += 5)
    if (normalized.compare(i, 5, "DIGIT") != 0) return false;
  return true;
}

AnnotatedDocument parse_annotated(const std::string& raw, const LabelSchema& schema,
                                  const std::string& doc_id) {
  static const std::string kOpen = "<PHI TYPE=\"";
  static const std::string kClose = "</PHI>";

  struct Span {
    size_t start, end;  // into stripped text
    std::string category;
  };

  std::string stripped;
  stripped.reserve(raw.size());
  std::vector<Span> spans;
  bool open = false;
  size_t open_stripped = 0;
  std::string open_category;

  size_t i = 0;
  while (i < raw.size()) {
    if (raw.compare(i, kOpen.size(), kOpen) == 0) {
      size_t tag_at = i;
      if (open) throw Error("NestedTag", "PHI tag opened inside another PHI tag", tag_at);
      size_t q = raw.find('"', i + kOpen.size());
      if (q == std::string::npos || raw.compare(q, 2, "\">") != 0)
        throw Error("UnbalancedTag", "malformed PHI open tag", tag_at);
      std::string category = raw.substr(i + kOpen.size(), q - i - kOpen.size());
      if (!schema.has_category(category))
        throw Error("UnknownCategory", "PHI category '" + category + "'", tag_at);
      open = true;
      open_stripped = stripped.size();
      open_category = category;
      i = q + 2;
    } else if (raw.compare(i, kClose.size(), kClose) == 0) {
      if (!open) throw Error("UnbalancedTag", "close tag without open tag", i);
      spans.push_back({open_stripped, stripped.size(), open_category});
      open = false;
      i += kClose.size();
    } else {
      stripped.push_back(raw[i]);
      ++i;
    }
  }
  if (open) throw Error("UnbalancedTag", "PHI tag never closed", raw.size());

  AnnotatedDocument doc;
  doc.doc_id = doc_id;
  doc.text = std::move(stripped);
  doc.tokens = tokenize(doc.text);
  doc.labels.assign(doc.tokens.size(), schema.outside_id());

  for (const Span& span : spans) {
    bool first = true;
    for (size_t t = 0; t < doc.tokens.size(); ++t) {
      const Token& tok = doc.tokens[t];
      if (tok.start >= span.start && tok.end <= span.end) {
        doc.labels[t] =
            first ? schema.begin_id(span.category) : schema.inside_id(span.category);
        first = false;
      }
    }
  }
  return doc;
}

std::string serialize_annotated(const AnnotatedDocument& doc, const LabelSchema& schema) {
  std::string out;
  out.reserve(doc.text.size() + 32 * doc.tokens.size() / 4);
  size_t copied = 0;
  size_t t = 0;
  while (t < doc.tokens.size()) {
    int label = doc.labels[t];
    if (schema.is_outside(label)) {
      ++t;
      continue;
    }
    const std::string& category = schema.category_of(label);
    size_t run_end = t + 1;
    while (run_end < doc.tokens.size() && !schema.is_outside(doc.labels[run_end]) &&
           !schema.is_begin(doc.labels[run_end]) &&
           schema.category_of(doc.labels[run_end]) == category)
      ++run_end;
    std::string tag = category;
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out.append(doc.text, copied, doc.tokens[t].start - copied);
    out += "<PHI TYPE=\"" + tag + "\">";
    out.append(doc.text, doc.tokens[t].start,
               doc.tokens[run_end - 1].end - doc.tokens[t].start);
    out += "</PHI>";
    copied = doc.tokens[run_end - 1].end;
    t = run_end;
  }
  out.append(doc.text, copied, doc.text.size() - copied);
  return out;
}

Vocabulary::Vocabulary() {
  add(kPadWord, 0);
  add(kUnkWord, 0);
}

int Vocabulary::add(const std::string& word, long long freq) {
  int id = static_cast<int>(id_to_word_.size());
  word_to_id_.emplace(word, id);
  id_to_word_.push_back(word);
  freq_.push_back(freq);
  return id;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& normalized_docs,
                             int min_count) {
  std::map<std::string, long long> counts;  // ordered map keeps ties deterministic
  long long total = 0;
  for (const auto& doc : normalized_docs)
    for (const auto& w : doc) {
      ++counts[w];
      ++total;
    }
  if (total == 0) throw Error("EmptyCorpus", "no tokens in corpus");

  std::vector<std::pair<std::string, long long>> kept;
  long long dropped = 0;
  for (const auto& [word, freq] : counts) {
    if (freq >= min_count || is_digit_pattern(word))
      kept.emplace_back(word, freq);
    else
      dropped += freq;
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.freq_[kUnkId] = dropped;  // rare words are replaced by UNK in the stream
  for (const auto& [word, freq] : kept) v.add(word, freq);
  return v;
}

Vocabulary Vocabulary::build_from_documents(const std::vector<AnnotatedDocument>& docs,
                                            int min_count) {
  return build(normalized_streams(docs), min_count);
}

Vocabulary Vocabulary::from_word_list(const std::vector<std::string>& words) {
  Vocabulary v;
  bool seen_pad = false, seen_unk = false;
  for (const auto& w : words) {
    bool duplicate = (w == kPadWord && seen_pad) || (w == kUnkWord && seen_unk) ||
                     (w != kPadWord && w != kUnkWord && v.word_to_id_.count(w));
    if (duplicate) throw Error("DuplicateWord", "word '" + w + "' listed twice");
    if (w == kPadWord)
      seen_pad = true;
    else if (w == kUnkWord)
      seen_unk = true;
    else
      v.add(w, 0);
  }
  return v;
}

int Vocabulary::lookup(const std::string& normalized) const {
  auto it = word_to_id_.find(normalized);
  return it == word_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& normalized) const {
  return word_to_id_.count(normalized) != 0;
}

std::vector<std::vector<std::string>> normalized_streams(
    const std::vector<AnnotatedDocument>& docs) {
  std::vector<std::vector<std::string>> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    std::vector<std::string> stream;
    stream.reserve(doc.tokens.size());
    for (const auto& tok : doc.tokens) stream.push_back(normalize(tok.text));
    out.push_back(std::move(stream));
  }
  return out;
}

std::vector<Window> slide_windows(const AnnotatedDocument& doc, const Vocabulary& vocab,
                                  const LabelSchema& schema, int n, int stride) {
  if (n < 1 || stride < 1)
    throw Error("BadArgument", "window length and stride must be >= 1");
  const size_t m = doc.tokens.size();

  // entity run containing each position: [run_begin[i], run_end[i])
  std::vector<size_t> run_begin(m), run_end(m);
  {
    size_t i = 0;
    while (i < m) {
      if (schema.is_outside(doc.labels[i])) {
        run_begin[i] = i;
        run_end[i] = i + 1;
        ++i;
        continue;
      }
      const std::string& cat = schema.category_of(doc.labels[i]);
      size_t j = i + 1;
      while (j < m && !schema.is_outside(doc.labels[j]) && !schema.is_begin(doc.labels[j]) &&
             schema.category_of(doc.labels[j]) == cat)
        ++j;
      for (size_t k = i; k < j; ++k) {
        run_begin[k] = i;
        run_end[k] = j;
      }
      i = j;
    }
  }

  std::vector<std::string> norm(m);
  std::vector<int> ids(m);
  for (size_t i = 0; i < m; ++i) {
    norm[i] = normalize(doc.tokens[i].text);
    ids[i] = vocab.lookup(norm[i]);
  }

  std::vector<Window> windows;
  const int o_id = schema.outside_id();
  auto emit = [&](size_t s) {
    Window w;
    w.doc_id = doc.doc_id;
    w.start = s;
    w.n_real = static_cast<int>(std::min<size_t>(n, m - s));
    w.input_ids.assign(n, Vocabulary::kPadId);
    w.label_ids.assign(n, o_id);
    w.words.assign(n, Vocabulary::kPadWord);
    for (int j = 0; j < w.n_real; ++j) {
      size_t p = s + j;
      w.input_ids[j] = ids[p];
      w.words[j] = norm[p];
      int label = doc.labels[p];
      if (!schema.is_outside(label) &&
          (run_begin[p] < s || run_end[p] > s + static_cast<size_t>(n)))
        label = o_id;  // broken tag
      w.label_ids[j] = label;
    }
    windows.push_back(std::move(w));
  };

  if (m < static_cast<size_t>(n)) {
    emit(0);
  } else {
    for (size_t s = 0; s + n <= m; s += stride) emit(s);
  }
  return windows;
}

void dump_conll_labels(const AnnotatedDocument& doc, const std::vector<int>& labels,
                       const LabelSchema& schema, std::ostream& out) {
  if (labels.size() != doc.tokens.size())
    throw Error("LengthMismatch", "label count does not match token count");
  for (size_t i = 0; i < doc.tokens.size(); ++i)
    out << doc.tokens[i].text << '\t' << schema.name_of(labels[i]) << '\n';
  out << '\n';
}

void dump_conll(const std::vector<AnnotatedDocument>& docs, const LabelSchema& schema,
                std::ostream& out) {
  for (const auto& doc : docs) dump_conll_labels(doc, doc.labels, schema, out);
}

std::vector<ConllDocument> read_conll(std::istream& in) {
  std::vector<ConllDocument> docs;
  ConllDocument current;
  std::string line;
  auto flush = [&] {
    if (!current.tokens.empty()) {
      docs.push_back(std::move(current));
      current = ConllDocument{};
    }
  };
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error("MalformedLine", "line " + std::to_string(lineno) + " has no tab separator");
    current.tokens.push_back(line.substr(0, tab));
    current.labels.push_back(line.substr(tab + 1));
  }
  flush();
  return docs;
}

}  // namespace deid
