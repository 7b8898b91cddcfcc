#pragma once

#include <stdexcept>
#include <string>

namespace minilake {

// Every domain failure carries one of these kinds. The RPC layer maps the
// kind name into error.data.kind so remote callers can branch on it.
enum class Errc {
  StorageIo,
  UnknownRef,
  UnknownBranch,
  DuplicateBranch,
  ProtectedBranch,
  MergeConflict,
  MergeContention,
  NotAnAncestor,
  DanglingSnapshot,
  SyntaxError,
  UnknownColumn,
  TypeMismatch,
  UnknownInput,
  EvalError,
  CorruptData,
  ParseError,
  SchemaMismatch,
  ManifestError,
  CycleError,
  UnknownPackage,
  UnknownVersion,
  Unsatisfiable,
  IsolationError,
  AuthFailed,
  PermissionDenied,
  UnknownRun,
  UnknownProject,
  UnknownTable,
  WorkspaceError,
  InvalidArgument,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const { return code_; }
  const char* kind() const { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace minilake
