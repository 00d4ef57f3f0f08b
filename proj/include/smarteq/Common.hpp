#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace smarteq {

using Index = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Universal gas constant in J/(mol·K).
inline constexpr double gasConstant = 8.314462618;

/// Molar mass of water in kg/mol.
inline constexpr double waterMolarMass = 0.018015;

/// Standard-state pressure of gaseous species in Pa.
inline constexpr double standardPressure = 1.0e5;

/// Base class of every error raised by the library.
struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (config files, definitions, bad dimensions).
struct InputError : Error
{
    using Error::Error;
};

/// Numerical failure (infeasible problem, non-convergence, singular systems).
struct NumericalError : Error
{
    using Error::Error;
};

} // namespace smarteq
