#pragma once

#include <stdexcept>
#include <string>

namespace permclass {

// Every recoverable failure carries a stable machine-readable code next to the
// human-readable message. The CLI maps codes to structured error output; tests
// match on codes, never on message text.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline Error invalid_permutation(const std::string& msg) { return Error("InvalidPermutation", msg); }
inline Error invalid_positions(const std::string& msg) { return Error("InvalidPositions", msg); }
inline Error arity_error(const std::string& msg) { return Error("ArityError", msg); }
inline Error parse_error(const std::string& msg) { return Error("ParseError", msg); }
inline Error validation_error(const std::string& msg) { return Error("ValidationError", msg); }
inline Error closure_error(const std::string& msg) { return Error("ClosureError", msg); }
inline Error diverged(const std::string& msg) { return Error("Diverged", msg); }
inline Error derivative_unavailable(const std::string& msg) { return Error("DerivativeUnavailable", msg); }
inline Error radius_above_cap(const std::string& msg) { return Error("RadiusAboveCap", msg); }
inline Error spectral_failure(const std::string& msg) { return Error("SpectralFailure", msg); }
inline Error irreducibility_violation(const std::string& msg) { return Error("IrreducibilityViolation", msg); }
inline Error degenerate_spectrum(const std::string& msg) { return Error("DegenerateSpectrum", msg); }
inline Error sampler_starved(const std::string& msg) { return Error("SamplerStarved", msg); }
inline Error usage_error(const std::string& msg) { return Error("UsageError", msg); }

}  // namespace permclass
