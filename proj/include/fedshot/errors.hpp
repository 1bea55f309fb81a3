#pragma once

#include <stdexcept>
#include <string>

namespace fedshot {

// Error categories map onto the CLI exit codes: config -> 2, data -> 3,
// numeric -> 4.
enum class ErrorKind { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define FEDSHOT_DEFINE_ERROR(NAME, KIND)                       \
    class NAME : public Error {                                \
    public:                                                    \
        explicit NAME(const std::string& msg)                  \
            : Error(ErrorKind::KIND, std::string(#NAME ": ") + msg) {} \
    }

// signal
FEDSHOT_DEFINE_ERROR(MissingChannel, data);
FEDSHOT_DEFINE_ERROR(EmptySpec, config);
FEDSHOT_DEFINE_ERROR(InvalidMontage, config);
FEDSHOT_DEFINE_ERROR(EmptyInput, data);
FEDSHOT_DEFINE_ERROR(TooShort, data);

// embed
FEDSHOT_DEFINE_ERROR(EmptyTokenSequence, data);
FEDSHOT_DEFINE_ERROR(BadMagic, data);
FEDSHOT_DEFINE_ERROR(BadVersion, data);
FEDSHOT_DEFINE_ERROR(TruncatedFile, data);
FEDSHOT_DEFINE_ERROR(DimensionMismatch, data);

// model
FEDSHOT_DEFINE_ERROR(EmptyBatch, data);
FEDSHOT_DEFINE_ERROR(LabelOutOfRange, data);
FEDSHOT_DEFINE_ERROR(LayoutMismatch, data);

// fed
FEDSHOT_DEFINE_ERROR(EmptyUpdateSet, data);
FEDSHOT_DEFINE_ERROR(AlphaOutOfRange, config);
FEDSHOT_DEFINE_ERROR(NoClients, config);
FEDSHOT_DEFINE_ERROR(NoTasks, data);
FEDSHOT_DEFINE_ERROR(MissingEncoder, data);

// episode
FEDSHOT_DEFINE_ERROR(TooFewPatients, data);
FEDSHOT_DEFINE_ERROR(InfeasibleAssignment, data);
FEDSHOT_DEFINE_ERROR(InsufficientSeizureSegments, data);
FEDSHOT_DEFINE_ERROR(InsufficientSegments, data);

// metrics
FEDSHOT_DEFINE_ERROR(EmptyMatrix, data);
FEDSHOT_DEFINE_ERROR(DegenerateMarginals, numeric);
FEDSHOT_DEFINE_ERROR(RankDeficient, numeric);

// synth / config / io
FEDSHOT_DEFINE_ERROR(InvalidSpec, config);
FEDSHOT_DEFINE_ERROR(ConfigError, config);
FEDSHOT_DEFINE_ERROR(IoError, data);
FEDSHOT_DEFINE_ERROR(InvalidArgument, config);

#undef FEDSHOT_DEFINE_ERROR

} // namespace fedshot
