#pragma once

#include <stdexcept>
#include <string>

namespace zfpbias {

enum class Errc {
  NonDyadicInput,
  ZeroBlock,
  Overflow,
  UnsupportedDimension,
  NonFiniteInput,
  DegenerateField,
  Config,
  Format,
  Io,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonDyadicInput: return "NonDyadicInput";
    case Errc::ZeroBlock: return "ZeroBlock";
    case Errc::Overflow: return "Overflow";
    case Errc::UnsupportedDimension: return "UnsupportedDimension";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::DegenerateField: return "DegenerateField";
    case Errc::Config: return "ConfigError";
    case Errc::Format: return "FormatError";
    case Errc::Io: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace zfpbias
