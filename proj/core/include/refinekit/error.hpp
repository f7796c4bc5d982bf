#pragma once

#include <stdexcept>
#include <string>

namespace refinekit {

// Base of every error raised by the library. Each subclass maps to one named
// failure of a public operation, so callers can catch precisely what they
// expect and let everything else propagate.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define REFINEKIT_DEFINE_ERROR(Name)              \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

// doc-model
REFINEKIT_DEFINE_ERROR(HardParseFailure);

// perturbator
REFINEKIT_DEFINE_ERROR(RuleNotApplicable);
REFINEKIT_DEFINE_ERROR(InsufficientTargets);
REFINEKIT_DEFINE_ERROR(SpanMismatch);

// partitioner
REFINEKIT_DEFINE_ERROR(DegenerateCorpus);
REFINEKIT_DEFINE_ERROR(InsufficientSamples);

// render-harness and embedding transports
REFINEKIT_DEFINE_ERROR(RenderTimeout);
REFINEKIT_DEFINE_ERROR(ProviderUnavailable);
REFINEKIT_DEFINE_ERROR(IncompleteDocument);

// reward-grpo
REFINEKIT_DEFINE_ERROR(GroupTooSmall);
REFINEKIT_DEFINE_ERROR(LengthMismatch);

// refine-loop
REFINEKIT_DEFINE_ERROR(AllRetriesInvalid);
REFINEKIT_DEFINE_ERROR(NoValidTurn);

// configuration and file formats
REFINEKIT_DEFINE_ERROR(ConfigError);
REFINEKIT_DEFINE_ERROR(FormatError);

#undef REFINEKIT_DEFINE_ERROR

} // namespace refinekit
