#include "minilake/error.hpp"

namespace minilake {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::StorageIo: return "StorageIo";
    case Errc::UnknownRef: return "UnknownRef";
    case Errc::UnknownBranch: return "UnknownBranch";
    case Errc::DuplicateBranch: return "DuplicateBranch";
    case Errc::ProtectedBranch: return "ProtectedBranch";
    case Errc::MergeConflict: return "MergeConflict";
    case Errc::MergeContention: return "MergeContention";
    case Errc::NotAnAncestor: return "NotAnAncestor";
    case Errc::DanglingSnapshot: return "DanglingSnapshot";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::UnknownInput: return "UnknownInput";
    case Errc::EvalError: return "EvalError";
    case Errc::CorruptData: return "CorruptData";
    case Errc::ParseError: return "ParseError";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::ManifestError: return "ManifestError";
    case Errc::CycleError: return "CycleError";
    case Errc::UnknownPackage: return "UnknownPackage";
    case Errc::UnknownVersion: return "UnknownVersion";
    case Errc::Unsatisfiable: return "Unsatisfiable";
    case Errc::IsolationError: return "IsolationError";
    case Errc::AuthFailed: return "AuthFailed";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::UnknownProject: return "UnknownProject";
    case Errc::UnknownTable: return "UnknownTable";
    case Errc::WorkspaceError: return "WorkspaceError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace minilake
