#pragma once

#include <stdexcept>
#include <string>

namespace cuq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };

/// Malformed input file; the message names the file and line.
class ParseError : public Error { public: using Error::Error; };

/// Checkpoint payload does not match its manifest.
class IntegrityError : public Error { public: using Error::Error; };

/// Checkpoint written by an incompatible format version.
class FormatVersionError : public Error { public: using Error::Error; };

class SplitError : public Error { public: using Error::Error; };

/// An evaluation protocol cannot be carried out on the given data.
class ProtocolError : public Error { public: using Error::Error; };

class TrainingError : public Error { public: using Error::Error; };

/// A model was asked for an uncertainty measure it does not define.
class UnsupportedMeasureError : public Error { public: using Error::Error; };

}  // namespace cuq
