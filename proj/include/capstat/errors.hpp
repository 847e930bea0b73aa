#pragma once

#include <stdexcept>
#include <string>

namespace capstat {

// Exit-code classes used by the CLI. Every library exception maps to one.
enum class ErrorClass {
    data = 2,    // malformed/invalid input data or schema
    config = 3,  // invalid configuration or parameters
    stats = 4,   // statistically infeasible request (too few rows, degenerate input)
    io = 5,      // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string msg) : std::runtime_error(std::move(msg)), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }

private:
    ErrorClass cls_;
};

#define CAPSTAT_DEFINE_ERROR(Name, Class)                                  \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& msg) : Error(Class, #Name ": " + msg) {} \
    }

CAPSTAT_DEFINE_ERROR(EmptySeries, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(MalformedSeries, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(MixedJobs, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(SchemaError, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(RowError, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(EmptyDataset, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(MissingBaseline, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(MalformedRun, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(EmptyRuns, ErrorClass::data);
CAPSTAT_DEFINE_ERROR(SpecError, ErrorClass::config);
CAPSTAT_DEFINE_ERROR(ConfigError, ErrorClass::config);
CAPSTAT_DEFINE_ERROR(InsufficientData, ErrorClass::stats);
CAPSTAT_DEFINE_ERROR(DegenerateTest, ErrorClass::stats);
CAPSTAT_DEFINE_ERROR(DegenerateRegression, ErrorClass::stats);
CAPSTAT_DEFINE_ERROR(ConstantCovariate, ErrorClass::stats);
CAPSTAT_DEFINE_ERROR(SingularOutcomeModel, ErrorClass::stats);
CAPSTAT_DEFINE_ERROR(IoError, ErrorClass::io);

#undef CAPSTAT_DEFINE_ERROR

}  // namespace capstat
