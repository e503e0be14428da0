#pragma once

#include <stdexcept>
#include <string>

namespace gwrc {

enum class Errc {
  ZeroNotAllowed,
  NotSupercritical,
  NotNormalized,
  BadParameter,
  NodeUnknown,
  BudgetExceeded,
  MalformedTree,
  InfiniteGamma,
  UnequalMeans,
  DegenerateLaw,
  DegenerateDenominator,
  ParseError,
  IoError,
};

constexpr const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::ZeroNotAllowed: return "ZeroNotAllowed";
    case Errc::NotSupercritical: return "NotSupercritical";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::BadParameter: return "BadParameter";
    case Errc::NodeUnknown: return "NodeUnknown";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::MalformedTree: return "MalformedTree";
    case Errc::InfiniteGamma: return "InfiniteGamma";
    case Errc::UnequalMeans: return "UnequalMeans";
    case Errc::DegenerateLaw: return "DegenerateLaw";
    case Errc::DegenerateDenominator: return "DegenerateDenominator";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

}  // namespace gwrc
