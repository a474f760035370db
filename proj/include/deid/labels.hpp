#ifndef DEID_LABELS_HPP
#define DEID_LABELS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace deid {

// BIO label schema over a fixed one-hot code width of 17. The default layout
// pins BODOC=0, IODOC=1, BOP=2, IOP=3, BOD=4, IOD=5, BOH=8, O=16 and fills the
// gaps with BOL=6, IOL=7, IOH=9, BOPH=10, IOPH=11; indices 12-15 stay
// unassigned. A different assignment can be loaded from a mapping file.
class LabelSchema {
 public:
  static constexpr int kWidth = 17;

  static LabelSchema default_schema();

  // "index<TAB>label_name" lines, one per assigned index.
  static LabelSchema load(std::istream& in);
  static LabelSchema load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  int width() const { return kWidth; }

  // Throws UnknownLabel for names outside the schema.
  int index_of(const std::string& name) const;
  bool has_label(const std::string& name) const;

  const std::string& name_of(int index) const;
  bool is_assigned(int index) const { return index >= 0 && index < kWidth && assigned_[index]; }

  int outside_id() const { return outside_id_; }
  bool is_outside(int index) const { return index == outside_id_; }

  // Category with B/I collapsed ("Date", "Doctor", ...); empty for O.
  const std::string& category_of(int index) const;
  bool is_begin(int index) const;

  // B-/I- label ids for a category name ("Date") or PHI tag name ("DATE").
  int begin_id(const std::string& category) const;
  int inside_id(const std::string& category) const;
  bool has_category(const std::string& category) const;

  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<int>& assigned_indices() const { return assigned_indices_; }

  std::vector<double> encode(const std::string& name) const;
  // argmax over assigned indices, ties broken toward the smallest index
  int decode_index(const std::vector<double>& probs) const;
  const std::string& decode(const std::vector<double>& probs) const;

  // FNV-1a over the serialized mapping; stored in tagger checkpoints.
  uint64_t hash() const;

 private:
  LabelSchema();
  void add(int index, const std::string& name);
  void finalize();
  static std::string category_from_name(const std::string& name);

  bool assigned_[kWidth];
  std::string names_[kWidth];
  std::string category_[kWidth];  // empty for O
  bool begin_[kWidth];
  int outside_id_;
  std::vector<int> assigned_indices_;
  std::vector<std::string> categories_;  // report row order
};

}  // namespace deid

#endif  // DEID_LABELS_HPP
