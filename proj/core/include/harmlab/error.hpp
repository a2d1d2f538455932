#pragma once

#include <stdexcept>
#include <string>

namespace harmlab {

// Failure categories surfaced by the library.  The command-line driver maps
// Kind::Config onto its "bad configuration" exit status and Kind::Io onto its
// "filesystem" exit status; everything else is a programming or data error.
enum class ErrorKind {
  InvalidSpec,      // construction parameters out of range
  OutOfDomain,      // query point outside the domain / target
  Parameter,        // numeric parameter violates a precondition
  Resolution,       // mesh too coarse for the requested operation
  DegenerateInput,  // empty set, zero weights, zero-length edge, ...
  Topology,         // mesh connectivity is not a disk / tree is not a tree
  Inconsistency,    // cross-object mismatch (mesh vs. map vs. target)
  Config,           // experiment configuration rejected
  Io,               // file could not be read or written
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace harmlab
