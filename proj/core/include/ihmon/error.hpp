#pragma once

#include <stdexcept>
#include <string>

namespace ihmon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two models (or a model and a table) disagree on states or observations.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Interval bounds whose refinement set is empty (sum(lo) > 1 or sum(hi) < 1).
class InfeasibleInterval : public Error {
public:
    using Error::Error;
};

/// The observation trace has probability zero under the model.
class ZeroProbabilityTrace : public Error {
public:
    using Error::Error;
};

/// No refinement of an interval model is consistent with the trace.
class NoConsistentPath : public Error {
public:
    using Error::Error;
};

/// Malformed model, dataset, or config document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Unknown state name or out-of-range state index.
class UnknownState : public Error {
public:
    using Error::Error;
};

/// Unknown observation symbol.
class UnknownSymbol : public Error {
public:
    using Error::Error;
};

/// A learner state has no supported successor.
class DeadState : public Error {
public:
    using Error::Error;
};

/// Invalid parameter or violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace ihmon
