#pragma once

#include <stdexcept>
#include <string>

namespace mfmdp {

// Error taxonomy shared by all modules. Each error carries a stable name
// that the C API and the CLI report verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define MFMDP_DEFINE_ERROR(ClassName)                                  \
    class ClassName : public Error {                                   \
    public:                                                            \
        explicit ClassName(const std::string& what)                    \
            : Error(#ClassName, what) {}                               \
    }

MFMDP_DEFINE_ERROR(EmptySourceState);
MFMDP_DEFINE_ERROR(SameState);
MFMDP_DEFINE_ERROR(UnknownModel);
MFMDP_DEFINE_ERROR(InvalidParameter);
MFMDP_DEFINE_ERROR(HorizonNotCovered);
MFMDP_DEFINE_ERROR(InfiniteHorizonUntruncated);
MFMDP_DEFINE_ERROR(LatticeTooLarge);
MFMDP_DEFINE_ERROR(UndiscountedInfinite);
MFMDP_DEFINE_ERROR(StepTooLarge);
MFMDP_DEFINE_ERROR(ProjectionTooLarge);
MFMDP_DEFINE_ERROR(BracketFailure);
MFMDP_DEFINE_ERROR(MaxIterations);
MFMDP_DEFINE_ERROR(UnknownExample);
MFMDP_DEFINE_ERROR(IoFailure);

#undef MFMDP_DEFINE_ERROR

}  // namespace mfmdp
