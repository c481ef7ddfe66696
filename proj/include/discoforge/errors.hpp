#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace discoforge {

// Base class for all toolkit failures. The CLI maps subclasses onto exit
// codes: config/validation problems exit 1, everything else exits 2.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// --- corpus files ---------------------------------------------------------

class MissingColumnError : public Error {
public:
    explicit MissingColumnError(const std::string& column)
        : Error("missing required column: " + column), column_(column) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

class BadDirectionError : public Error {
public:
    BadDirectionError(std::size_t line, const std::string& value)
        : Error("line " + std::to_string(line) + ": bad direction value '" + value +
                "' (expected 1>2 or 1<2)"),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class SpanSyntaxError : public Error {
public:
    using Error::Error;
};

class RelsFormatError : public Error {
public:
    using Error::Error;
};

class MalformedLineError : public Error {
public:
    explicit MalformedLineError(std::size_t line)
        : Error("line " + std::to_string(line) + ": malformed token line"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// --- features -------------------------------------------------------------

class DocMismatchError : public Error {
public:
    DocMismatchError(const std::string& instance_doc, const std::string& model_doc)
        : Error("document id mismatch: instance refers to '" + instance_doc +
                "' but document model is '" + model_doc + "'") {}
};

// --- model-input builders ---------------------------------------------------

class TemplateError : public Error {
public:
    using Error::Error;
};

// --- augmentation -----------------------------------------------------------

class EmptySupplyError : public Error {
public:
    using Error::Error;
};

class UnknownPredicateError : public Error {
public:
    explicit UnknownPredicateError(const std::string& name)
        : Error("unknown structural predicate: " + name) {}
};

class MissingInstanceError : public Error {
public:
    using Error::Error;
};

class IncompleteBatchError : public Error {
public:
    IncompleteBatchError(std::string msg, std::vector<std::string> missing)
        : Error(std::move(msg)), missing_(std::move(missing)) {}
    // "<corpus>#<instance_id>:<field>" entries, sorted.
    const std::vector<std::string>& missing() const { return missing_; }

private:
    std::vector<std::string> missing_;
};

// --- pruning ----------------------------------------------------------------

class DegenerateDumpError : public Error {
public:
    using Error::Error;
};

class DumpFormatError : public Error {
public:
    using Error::Error;
};

class NotEnoughCandidatesError : public Error {
public:
    using Error::Error;
};

// --- evaluation -------------------------------------------------------------

class LengthMismatchError : public Error {
public:
    LengthMismatchError(std::size_t gold_n, std::size_t pred_n)
        : Error("gold has " + std::to_string(gold_n) + " instances but predictions have " +
                std::to_string(pred_n)),
          gold_n_(gold_n),
          pred_n_(pred_n) {}
    std::size_t gold_n() const { return gold_n_; }
    std::size_t pred_n() const { return pred_n_; }

private:
    std::size_t gold_n_;
    std::size_t pred_n_;
};

class CorpusSetMismatchError : public Error {
public:
    using Error::Error;
};

class EvalFormatError : public Error {
public:
    using Error::Error;
};

// Collects non-fatal findings. Parsers accept an optional sink; when one is
// supplied, recoverable row-level problems are recorded instead of thrown.
struct Diagnostics {
    std::vector<std::string> warnings;
    std::vector<std::string> errors;

    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
    void error(std::string msg) { errors.push_back(std::move(msg)); }
    bool ok() const { return errors.empty(); }
};

}  // namespace discoforge
