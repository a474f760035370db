#include "deid/labels.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "deid/error.hpp"
#include "deid/rng.hpp"

namespace deid {

namespace {

std::string to_lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

// code suffix of a BO*/IO* label name -> report category
std::string category_for_code(const std::string& code) {
  if (code == "DOC") return "Doctor";
  if (code == "P") return "Patient";
  if (code == "D") return "Date";
  if (code == "H") return "Hospital";
  if (code == "L") return "Location";
  if (code == "PH") return "Phone";
  return code;
}

}  // namespace

LabelSchema::LabelSchema() : outside_id_(-1) {
  for (int i = 0; i < kWidth; ++i) {
    assigned_[i] = false;
    begin_[i] = false;
  }
}

std::string LabelSchema::category_from_name(const std::string& name) {
  if (name == "O") return "";
  if (name.size() >= 3 && (name[0] == 'B' || name[0] == 'I') && name[1] == 'O')
    return category_for_code(name.substr(2));
  throw Error("UnknownLabel", "label name '" + name + "' is not O or BO*/IO*");
}

void LabelSchema::add(int index, const std::string& name) {
  if (index < 0 || index >= kWidth)
    throw Error("UnknownLabel", "index " + std::to_string(index) + " outside code width");
  if (assigned_[index])
    throw Error("UnknownLabel", "index " + std::to_string(index) + " assigned twice");
  assigned_[index] = true;
  names_[index] = name;
  category_[index] = category_from_name(name);
  begin_[index] = !name.empty() && name[0] == 'B';
  if (name == "O") outside_id_ = index;
}

void LabelSchema::finalize() {
  if (outside_id_ < 0) throw Error("UnknownLabel", "schema has no O label");
  assigned_indices_.clear();
  std::set<std::string> cats;
  for (int i = 0; i < kWidth; ++i) {
    if (!assigned_[i]) continue;
    assigned_indices_.push_back(i);
    if (!category_[i].empty()) cats.insert(category_[i]);
  }
  categories_.assign(cats.begin(), cats.end());
}

LabelSchema LabelSchema::default_schema() {
  LabelSchema s;
  s.add(0, "BODOC");
  s.add(1, "IODOC");
  s.add(2, "BOP");
  s.add(3, "IOP");
  s.add(4, "BOD");
  s.add(5, "IOD");
  s.add(6, "BOL");
  s.add(7, "IOL");
  s.add(8, "BOH");
  s.add(9, "IOH");
  s.add(10, "BOPH");
  s.add(11, "IOPH");
  s.add(16, "O");
  s.finalize();
  return s;
}

LabelSchema LabelSchema::load(std::istream& in) {
  LabelSchema s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error("UnknownLabel", "schema line " + std::to_string(lineno) + " has no tab");
    int index = 0;
    try {
      index = std::stoi(line.substr(0, tab));
    } catch (const std::exception&) {
      throw Error("UnknownLabel", "schema line " + std::to_string(lineno) + ": bad index");
    }
    s.add(index, line.substr(tab + 1));
  }
  s.finalize();
  return s;
}

LabelSchema LabelSchema::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileError", "cannot open schema file '" + path + "'");
  return load(in);
}

void LabelSchema::save(std::ostream& out) const {
  for (int i : assigned_indices_) out << i << '\t' << names_[i] << '\n';
}

void LabelSchema::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("FileError", "cannot write schema file '" + path + "'");
  save(out);
}

int LabelSchema::index_of(const std::string& name) const {
  for (int i : assigned_indices_)
    if (names_[i] == name) return i;
  throw Error("UnknownLabel", "label '" + name + "' not in schema");
}

bool LabelSchema::has_label(const std::string& name) const {
  for (int i : assigned_indices_)
    if (names_[i] == name) return true;
  return false;
}

const std::string& LabelSchema::name_of(int index) const {
  if (!is_assigned(index))
    throw Error("UnknownLabel", "index " + std::to_string(index) + " unassigned");
  return names_[index];
}

const std::string& LabelSchema::category_of(int index) const {
  if (!is_assigned(index))
    throw Error("UnknownLabel", "index " + std::to_string(index) + " unassigned");
  return category_[index];
}

bool LabelSchema::is_begin(int index) const { return is_assigned(index) && begin_[index]; }

bool LabelSchema::has_category(const std::string& category) const {
  std::string want = to_lower(category);
  for (const std::string& c : categories_)
    if (to_lower(c) == want) return true;
  return false;
}

int LabelSchema::begin_id(const std::string& category) const {
  std::string want = to_lower(category);
  for (int i : assigned_indices_)
    if (begin_[i] && to_lower(category_[i]) == want) return i;
  throw Error("UnknownCategory", "no B label for category '" + category + "'");
}

int LabelSchema::inside_id(const std::string& category) const {
  std::string want = to_lower(category);
  for (int i : assigned_indices_)
    if (!begin_[i] && !category_[i].empty() && to_lower(category_[i]) == want) return i;
  throw Error("UnknownCategory", "no I label for category '" + category + "'");
}

std::vector<double> LabelSchema::encode(const std::string& name) const {
  std::vector<double> v(kWidth, 0.0);
  v[index_of(name)] = 1.0;
  return v;
}

int LabelSchema::decode_index(const std::vector<double>& probs) const {
  if (static_cast<int>(probs.size()) != kWidth)
    throw Error("ShapeMismatch", "probability vector has width " + std::to_string(probs.size()));
  int best = -1;
  for (int i : assigned_indices_)
    if (best < 0 || probs[i] > probs[best]) best = i;
  return best;
}

const std::string& LabelSchema::decode(const std::vector<double>& probs) const {
  return names_[decode_index(probs)];
}

uint64_t LabelSchema::hash() const {
  std::ostringstream os;
  save(os);
  return Rng::fnv1a(os.str());
}

}  // namespace deid
