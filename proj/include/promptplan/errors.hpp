#pragma once

#include <stdexcept>
#include <string>

namespace promptplan {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class MalformedRle : public Error {
  public:
    using Error::Error;
};

class GenerationFailure : public Error {
  public:
    using Error::Error;
};

class MissingCategory : public Error {
  public:
    using Error::Error;
};

// Anything that aborts the current image but leaves the batch running.
class BackendFailure : public Error {
  public:
    using Error::Error;
};

class ProtocolError : public BackendFailure {
  public:
    using BackendFailure::BackendFailure;
};

class BackendUnavailable : public BackendFailure {
  public:
    using BackendFailure::BackendFailure;
};

// The backend answered with an explicit {"type":"error"} frame.
class RemoteError : public BackendFailure {
  public:
    using BackendFailure::BackendFailure;
};

} // namespace promptplan
