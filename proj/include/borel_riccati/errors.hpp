#pragma once

#include <stdexcept>
#include <string>

namespace br {

// Base of every error thrown by the library. `stage` names the pipeline
// step so the CLI can report where a run stopped.
class Error : public std::runtime_error {
public:
    Error(std::string stage, const std::string& what)
        : std::runtime_error(what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

#define BR_DEFINE_ERROR(Name, Stage)                                          \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(Stage, what) {}        \
    };

BR_DEFINE_ERROR(DivisionByZeroElem, "field")
BR_DEFINE_ERROR(PoleHit, "field")
BR_DEFINE_ERROR(BranchAmbiguous, "field")
BR_DEFINE_ERROR(AmbientMismatch, "field")
BR_DEFINE_ERROR(NoMinusSolution, "formal")
BR_DEFINE_ERROR(DegenerateDiscriminant, "formal")
BR_DEFINE_ERROR(EvaluationFailed, "formal")
BR_DEFINE_ERROR(RootFindingFailed, "geometry")
BR_DEFINE_ERROR(PathThroughSingularity, "geometry")
BR_DEFINE_ERROR(StepSizeUnderflow, "geometry")
BR_DEFINE_ERROR(NoHalfStrip, "geometry")
BR_DEFINE_ERROR(InsufficientFormalOrder, "borel")
BR_DEFINE_ERROR(HalfstripMissing, "borel")
BR_DEFINE_ERROR(LatticeMismatch, "borel")
BR_DEFINE_ERROR(GridTooShort, "borel")
BR_DEFINE_ERROR(NoConvergence, "borel")
BR_DEFINE_ERROR(OutsideBorelDisc, "resum")
BR_DEFINE_ERROR(ContourDivergence, "resum")
BR_DEFINE_ERROR(PointOffGrid, "resum")
BR_DEFINE_ERROR(HypothesisFailed, "resum")

#undef BR_DEFINE_ERROR

// Parse failures carry the 1-based line and column of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error("config", what + " at " + std::to_string(line) + ":" +
                              std::to_string(column)),
          line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_, column_;
};

} // namespace br
