#pragma once

#include <stdexcept>
#include <string>

namespace sievelab {

// Two grids of different cell counts were combined.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A value outside an operation's mathematical domain (log of zero, gamma <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Invalid or inconsistent configuration; maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A sampler exhausted its attempt budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition of a geometric construction.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Grid too coarse for the requested construction.
class ResolutionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input file; the message carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Experiment inputs that violate the geometry an experiment requires.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace sievelab
