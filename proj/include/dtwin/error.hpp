#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtwin {

// Machine-readable failure codes shared by every module. The CLI prints
// code_name() verbatim so scripts can match on it.
enum class ErrorCode {
  // urdf
  MalformedXml,
  MissingRoot,
  DanglingReference,
  CycleDetected,
  DuplicateName,
  MissingLimit,
  InvertedLimits,
  MultipleParents,
  NoPath,
  UnknownLink,
  UnknownJoint,
  MissingJointValue,
  JointValueOutOfRange,
  // kinematics
  NonFiniteInput,
  LengthMismatch,
  NotARotation,
  NotUnit,
  UnknownChain,
  InvalidChain,
  // ik
  InfiniteLimits,
  InvalidConfig,
  OutOfRange,
  LimitViolation,
  // trajectory
  NonPositiveDuration,
  TooFewSamples,
  // scene
  UnknownObject,
  ActionDenied,
  ParseError,
  UnknownAttribute,
  DanglingContainment,
  ContainmentCycle,
  InvalidState,
  // twinlink
  DecodeError,
  StaleMessage,
  // io
  IoError,
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::MissingRoot: return "MissingRoot";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::MissingLimit: return "MissingLimit";
    case ErrorCode::InvertedLimits: return "InvertedLimits";
    case ErrorCode::MultipleParents: return "MultipleParents";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::UnknownJoint: return "UnknownJoint";
    case ErrorCode::MissingJointValue: return "MissingJointValue";
    case ErrorCode::JointValueOutOfRange: return "JointValueOutOfRange";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::NotUnit: return "NotUnit";
    case ErrorCode::UnknownChain: return "UnknownChain";
    case ErrorCode::InvalidChain: return "InvalidChain";
    case ErrorCode::InfiniteLimits: return "InfiniteLimits";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::LimitViolation: return "LimitViolation";
    case ErrorCode::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::ActionDenied: return "ActionDenied";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::DanglingContainment: return "DanglingContainment";
    case ErrorCode::ContainmentCycle: return "ContainmentCycle";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::StaleMessage: return "StaleMessage";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(code_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dtwin
