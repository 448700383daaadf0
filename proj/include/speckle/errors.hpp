#pragma once

#include <stdexcept>
#include <string>

namespace spk {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define SPK_DEFINE_ERROR(Name)                                              \
    struct Name : Error {                                                   \
        using Error::Error;                                                 \
        const char* kind() const noexcept override { return #Name; }        \
    }

SPK_DEFINE_ERROR(QuadratureFailure);
SPK_DEFINE_ERROR(StiffnessFailure);
SPK_DEFINE_ERROR(NonPositiveSpectrum);
SPK_DEFINE_ERROR(DivergentMoment);
SPK_DEFINE_ERROR(GridTooCoarse);
SPK_DEFINE_ERROR(GridMismatch);
SPK_DEFINE_ERROR(BoundaryLeak);
SPK_DEFINE_ERROR(SeedMismatch);
SPK_DEFINE_ERROR(UnderresolvedBand);
SPK_DEFINE_ERROR(RegimeInvalid);
SPK_DEFINE_ERROR(ResolutionFailure);
SPK_DEFINE_ERROR(RealizationFailure);

#undef SPK_DEFINE_ERROR

}  // namespace spk
