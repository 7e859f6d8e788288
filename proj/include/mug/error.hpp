#pragma once

#include <stdexcept>
#include <string>

namespace mug {

// Base of every error the library raises on bad input or a broken contract.
// The CLI maps these to exit code 1; anything else is an internal failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MUG_DEFINE_ERROR(Name)            \
    class Name : public Error {           \
    public:                               \
        using Error::Error;               \
    }

MUG_DEFINE_ERROR(ShapeError);
MUG_DEFINE_ERROR(ContractError);
MUG_DEFINE_ERROR(ConfigError);
MUG_DEFINE_ERROR(FormatError);
MUG_DEFINE_ERROR(ParseError);
MUG_DEFINE_ERROR(PatchError);
MUG_DEFINE_ERROR(VocabularyError);
MUG_DEFINE_ERROR(CombinationError);
MUG_DEFINE_ERROR(CapacityError);
MUG_DEFINE_ERROR(EvaluationError);
MUG_DEFINE_ERROR(LoadError);
MUG_DEFINE_ERROR(TrainingError);

#undef MUG_DEFINE_ERROR

}  // namespace mug
