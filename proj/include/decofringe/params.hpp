#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace decofringe {

/// Raised when a numerical routine cannot reach its requested accuracy.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical inputs in slit-width units (the slit width is 1).
///   m    field mass
///   g    coupling (g = 0 is the decoupled limit and is accepted)
///   L    slit half-separation
///   T    interaction time
///   tau  propagation time t / m_p
struct ExperimentParams {
    double m = 0.05;
    double g = 0.15;
    double L = 10.0;
    double T = 20.0;
    double tau = 20.0;

    void validate() const
    {
        auto bad = [](double v) { return !std::isfinite(v); };
        if (bad(m) || bad(g) || bad(L) || bad(T) || bad(tau))
            throw std::invalid_argument("ExperimentParams: all parameters must be finite");
        if (!(m > 0.0))
            throw std::invalid_argument("ExperimentParams: field mass m must be positive");
        if (g < 0.0)
            throw std::invalid_argument("ExperimentParams: coupling g must be non-negative");
        if (!(L > 0.0))
            throw std::invalid_argument("ExperimentParams: half-separation L must be positive");
        if (!(T > 0.0))
            throw std::invalid_argument("ExperimentParams: interaction time T must be positive");
        if (tau < 0.0)
            throw std::invalid_argument("ExperimentParams: propagation time tau must be >= 0");
    }
};

} // namespace decofringe
