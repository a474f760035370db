#include "deid/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "deid/error.hpp"
#include "deid/rng.hpp"

#include "json.hpp"

namespace deid {

namespace {

const std::vector<std::string> kDoctorFirst = {"gregory", "marianne", "theodore", "priya",
                                               "callum", "ingrid", "rafael", "beatrice"};
const std::vector<std::string> kDoctorLast = {
    "weller",   "brunsfield", "calloway",  "okafor",   "linden",    "marchetti",
    "vasquez",  "thornbury",  "ellison",   "whitaker", "osei",      "lindqvist",
    "harrow",   "bextor",     "quillan",   "sorenson", "drummond",  "fairbairn",
    "mcallister", "renshaw",  "voss",      "pemberton", "ashcroft", "duval"};
const std::vector<std::string> kPatientFirst = {"martha", "dexter", "yolanda", "casper",
                                                "imelda", "roland", "sylvia", "norbert",
                                                "opal", "vernon"};
const std::vector<std::string> kPatientLast = {"tibbets", "grouse",  "malvern", "standish",
                                               "yearwood", "crabtree", "fenwick", "pickford",
                                               "stroud",  "winslow"};
const std::vector<std::string> kHospitalName = {"grandview", "lakeshore", "northfield",
                                                "stclair", "riverside", "maplewood",
                                                "crestline", "fairhaven"};
const std::vector<std::string> kHospitalMid = {"memorial", "regional"};
const std::vector<std::string> kHospitalType = {"hospital", "clinic", "infirmary"};
const std::vector<std::string> kCity = {"kitchener", "guelph",  "brampton", "oakville",
                                        "sudbury",  "timmins", "cornwall", "welland",
                                        "orillia",  "kanata"};
const std::vector<std::string> kCitySuffix = {"heights", "junction", "falls"};
const std::vector<std::string> kMonth = {"january", "february", "march",     "april",
                                         "may",     "june",     "july",      "august",
                                         "september", "october", "november", "december"};

const std::vector<std::string> kFiller = {
    "pt",        "seen",     "on",        "by",       "dr",         "at",       "in",
    "from",      "call",     "tel",       "name",     "lives",      "acuity",   "pressure",
    "stable",    "followup", "lens",      "cornea",   "retina",     "left",     "right",
    "od",        "os",       "normal",    "exam",     "fields",     "dilated",  "refraction",
    "prescription", "updated", "monitor", "review",   "return",     "weeks",    "visit",
    "today",     "noted",    "mild",      "moderate", "severe",     "improved", "unchanged",
    "discussed", "advised",  "drops",     "daily",    "twice",      "checked",  "glasses",
    "contacts",  "fitting",  "assessment", "plan",    "history",    "reports",  "denies",
    "blurry",    "dryness",  "irritation", "redness", "allergies",  "meds",     "none",
    "worse",     "better",   "since",     "last",     "next",       "scheduled"};

const std::map<std::string, std::vector<std::string>> kCues = {
    {"Date", {"on", "seen", "return"}},      {"Doctor", {"dr", "by"}},
    {"Hospital", {"at", "from"}},            {"Location", {"in", "lives"}},
    {"Patient", {"pt", "name"}},             {"Phone", {"call", "tel"}}};

std::string pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[rng.uniform_int(pool.size())];
}

std::string digits(int count, Rng& rng, bool leading_nonzero) {
  std::string s;
  for (int i = 0; i < count; ++i) {
    int lo = (i == 0 && leading_nonzero) ? 1 : 0;
    s.push_back(static_cast<char>('0' + lo + static_cast<int>(rng.uniform_int(10 - lo))));
  }
  return s;
}

std::string maybe_capitalize(std::string word, Rng& rng) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z' && rng.bernoulli(0.5))
    word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

// entity surface form; token count is taken from tokenize()
std::string realize_entity(const std::string& category, Rng& rng) {
  if (category == "Date") {
    switch (rng.uniform_int(4)) {
      case 0:
        return std::to_string(1 + rng.uniform_int(28)) + " " + pick(kMonth, rng) + " " +
               std::to_string(1975 + rng.uniform_int(50));
      case 1:
        return pick(kMonth, rng) + " " + std::to_string(1975 + rng.uniform_int(50));
      case 2:
        return digits(2, rng, false) + "/" + digits(2, rng, false) + "/" +
               std::to_string(1975 + rng.uniform_int(50));
      default:
        return std::to_string(1 + rng.uniform_int(28)) + " " + pick(kMonth, rng);
    }
  }
  if (category == "Doctor") {
    if (rng.bernoulli(0.4)) return pick(kDoctorFirst, rng) + " " + pick(kDoctorLast, rng);
    return pick(kDoctorLast, rng);
  }
  if (category == "Hospital") {
    if (rng.bernoulli(0.3))
      return pick(kHospitalName, rng) + " " + pick(kHospitalMid, rng) + " " +
             pick(kHospitalType, rng);
    return pick(kHospitalName, rng) + " " + pick(kHospitalType, rng);
  }
  if (category == "Location") {
    if (rng.bernoulli(0.3)) return pick(kCity, rng) + " " + pick(kCitySuffix, rng);
    return pick(kCity, rng);
  }
  if (category == "Patient") {
    switch (rng.uniform_int(3)) {
      case 0: return pick(kPatientFirst, rng) + " " + pick(kPatientLast, rng);
      case 1: return pick(kPatientFirst, rng);
      default: return pick(kPatientLast, rng);
    }
  }
  if (category == "Phone")
    return digits(3, rng, true) + "-" + digits(3, rng, true) + "-" + digits(4, rng, false);
  throw Error("UnknownCategory", "no generator for category '" + category + "'");
}

std::string apply_noise(std::string word, const GenConfig& cfg, Rng& rng) {
  if (word.size() >= 4 && rng.bernoulli(cfg.misspelling_rate)) {
    size_t k = 1 + rng.uniform_int(word.size() - 2);
    std::swap(word[k], word[k + 1]);
  } else if (word.size() >= 6 && rng.bernoulli(cfg.abbreviation_rate)) {
    word.resize(3 + rng.uniform_int(2));
  }
  return word;
}

// greedy deficit scheduler over token shares; keeps realized proportions
// within one entity of the configured weights
class CategoryScheduler {
 public:
  explicit CategoryScheduler(const std::map<std::string, double>& weights) {
    double sum = 0.0;
    for (const auto& [cat, w] : weights) {
      if (w < 0) throw Error("BadArgument", "negative category weight for " + cat);
      sum += w;
    }
    if (sum <= 0) throw Error("BadArgument", "all category weights are zero");
    for (const auto& [cat, w] : weights) {
      names_.push_back(cat);
      targets_.push_back(w / sum);
      counts_.push_back(0);
    }
  }

  const std::string& next() const {
    size_t best = 0;
    double best_deficit = -1e300;
    for (size_t i = 0; i < names_.size(); ++i) {
      double share = total_ > 0 ? static_cast<double>(counts_[i]) / static_cast<double>(total_)
                                : 0.0;
      double deficit = targets_[i] - share;
      if (targets_[i] == 0.0) continue;  // never emit zero-weight categories
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = i;
      }
    }
    return names_[best];
  }

  void record(const std::string& category, long long tokens) {
    for (size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == category) {
        counts_[i] += tokens;
        total_ += tokens;
        return;
      }
  }

 private:
  std::vector<std::string> names_;
  std::vector<double> targets_;
  std::vector<long long> counts_;
  long long total_ = 0;
};

}  // namespace

const SynthLexicons& synth_lexicons() {
  static const SynthLexicons lex = [] {
    SynthLexicons l;
    l.filler = kFiller;
    auto& phi = l.phi;
    auto add = [&](const std::string& cat, const std::vector<std::string>& words) {
      auto& v = phi[cat];
      v.insert(v.end(), words.begin(), words.end());
    };
    add("Doctor", kDoctorFirst);
    add("Doctor", kDoctorLast);
    add("Patient", kPatientFirst);
    add("Patient", kPatientLast);
    add("Hospital", kHospitalName);
    add("Hospital", kHospitalMid);
    add("Hospital", kHospitalType);
    add("Location", kCity);
    add("Location", kCitySuffix);
    add("Date", kMonth);
    return l;
  }();
  return lex;
}

GenResult generate(const GenConfig& config, const LabelSchema& schema) {
  for (const auto& [cat, w] : config.category_weights)
    if (w > 0 && !schema.has_category(cat))
      throw Error("UnknownCategory", "schema has no category '" + cat + "'");
  if (config.min_tokens < 1 || config.max_tokens < config.min_tokens)
    throw Error("BadArgument", "bad tokens_per_doc range");

  CategoryScheduler scheduler(config.category_weights);
  GenResult result;
  for (const auto& [cat, w] : config.category_weights) result.phi_token_counts[cat] = 0;

  std::vector<std::string> all_phi_words;
  if (config.overlap_lexicons)
    for (const auto& [cat, words] : synth_lexicons().phi)
      all_phi_words.insert(all_phi_words.end(), words.begin(), words.end());

  for (int di = 0; di < config.n_docs; ++di) {
    Rng rng = Rng::for_stage(config.seed, "synth-doc-" + std::to_string(di));
    const int target =
        config.min_tokens + static_cast<int>(rng.uniform_int(
                                static_cast<uint64_t>(config.max_tokens - config.min_tokens + 1)));
    std::string text;
    int tokens = 0;
    auto append_word = [&](const std::string& w) {
      if (!text.empty() && text.back() != ' ') text += ' ';
      text += w;
      ++tokens;
    };

    while (tokens < target) {
      if (tokens > 0 && rng.bernoulli(0.35)) {
        const std::string category = scheduler.next();
        append_word(pick(kCues.at(category), rng));
        std::string entity = realize_entity(category, rng);
        long long entity_tokens = static_cast<long long>(tokenize(entity).size());
        std::string tag = category;
        std::transform(tag.begin(), tag.end(), tag.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
        if (!text.empty() && text.back() != ' ') text += ' ';
        text += "<PHI TYPE=\"" + tag + "\">" + entity + "</PHI>";
        tokens += static_cast<int>(entity_tokens);
        scheduler.record(category, entity_tokens);
        result.phi_token_counts[category] += entity_tokens;
        result.total_phi_tokens += entity_tokens;
      } else {
        const int run = 3 + static_cast<int>(rng.uniform_int(6));
        for (int k = 0; k < run && tokens < target; ++k) {
          std::string w;
          if (config.overlap_lexicons && !all_phi_words.empty() && rng.bernoulli(0.1))
            w = pick(all_phi_words, rng);
          else
            w = apply_noise(pick(kFiller, rng), config, rng);
          append_word(maybe_capitalize(w, rng));
        }
        if (rng.bernoulli(0.4)) append_word(".");
      }
    }

    char doc_id[32];
    std::snprintf(doc_id, sizeof(doc_id), "doc_%05d", di);
    result.files.push_back({doc_id, text});
    result.documents.push_back(parse_annotated(text, schema, doc_id));
  }
  return result;
}

void write_corpus(const GenResult& result, const GenConfig& config, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["seed"] = config.seed;
  manifest["n_docs"] = config.n_docs;
  manifest["total_phi_tokens"] = result.total_phi_tokens;
  for (const auto& [cat, count] : result.phi_token_counts)
    manifest["phi_token_counts"][cat] = count;

  for (const GeneratedDoc& doc : result.files) {
    std::string path = dir + "/" + doc.doc_id + ".txt";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("FileError", "cannot write '" + path + "'");
    out << doc.tagged_text;
    manifest["files"].push_back(doc.doc_id + ".txt");
  }

  std::ofstream mout(dir + "/manifest.json");
  if (!mout) throw Error("FileError", "cannot write manifest in '" + dir + "'");
  mout << manifest.dump(2) << '\n';
}

}  // namespace deid
