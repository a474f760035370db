#ifndef DEID_ERROR_HPP
#define DEID_ERROR_HPP

#include <stdexcept>
#include <string>

namespace deid {

// All recoverable data errors carry a machine-checkable kind plus an
// optional byte offset into the offending input (-1 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message, long long offset = -1)
      : std::runtime_error(format(kind, message, offset)),
        kind_(std::move(kind)),
        offset_(offset) {}

  const std::string& kind() const { return kind_; }
  long long offset() const { return offset_; }

 private:
  static std::string format(const std::string& kind, const std::string& message,
                            long long offset) {
    std::string s = kind + ": " + message;
    if (offset >= 0) s += " (byte offset " + std::to_string(offset) + ")";
    return s;
  }

  std::string kind_;
  long long offset_;
};

}  // namespace deid

#endif  // DEID_ERROR_HPP
