#pragma once

#include <smarteq/ChemicalSystem.hpp>
#include <smarteq/Thermo.hpp>

namespace smarteq {

struct EquilibriumOptions
{
    /// Stationarity tolerance on ‖μ − Aᵀy − z‖∞ / RT.
    double tolerance = 1e-8;
    int maxIterations = 200;
    /// ε_s: a species with both n_i/s and z_i/RT below ε_s, and within a factor
    /// of 100 of each other, has no clear stability status.
    double stabilityThreshold = 1e-12;
    /// Smallest barrier parameter, relative to the amount scale s = ‖b‖∞.
    double barrierFloor = 1e-28;
    double fractionToBoundary = 0.995;
    /// Lower bound of the initial species amounts, relative to s.
    double initialFloor = 1e-6;
};

/// `[solver]` section: tol_kkt, max_iterations, eps_s.
auto loadEquilibriumOptions(const Config& config) -> EquilibriumOptions;

struct EquilibriumProblem
{
    double T = 298.15;
    double P = 1.0e5;
    Vector b;
};

struct KktResidual
{
    /// ‖μ − Aᵀy − z‖∞ / RT
    double stationarity = 0.0;
    /// ‖A n − b‖∞ in mol
    double feasibility = 0.0;
    /// max_i |n_i z_i| / RT in mol
    double complementarity = 0.0;
};

struct EquilibriumSolution
{
    Vector n;
    /// Element multipliers, J/mol.
    Vector y;
    /// Stability multipliers of the bounds n ≥ 0, J/mol.
    Vector z;
    int iterations = 0;
    bool converged = false;
    /// Largest of the three KKT residual norms, dimensionless.
    double residualNorm = 0.0;
    KktResidual residual;
};

/// No n ≥ 0 satisfies A n = b.
struct InfeasibleProblem : NumericalError
{
    using NumericalError::NumericalError;
};

/// The solver hit its iteration limit; carries the best iterate.
struct NonConvergence : NumericalError
{
    NonConvergence(const std::string& what, EquilibriumSolution best)
        : NumericalError(what), best(std::move(best)) {}
    EquilibriumSolution best;
};

/// The active set is degenerate and the bordered sensitivity matrix is singular.
struct DegenerateActiveSet : NumericalError
{
    using NumericalError::NumericalError;
};

/// Residuals of the KKT conditions μ − Aᵀy − z = 0, A n = b, n∘z = 0.
auto kktResidual(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, const Vector& b, const Vector& y, const Vector& z) -> KktResidual;

/// Minimize G subject to A n = b, n ≥ 0.
///
/// Primal-dual interior-point Newton iteration with a Mehrotra-type barrier
/// update and a fraction-to-boundary rule. Without a guess the start is the
/// nonnegative least-squares solution of A n = b, floored. Throws
/// InfeasibleProblem when b is outside the cone {A n : n ≥ 0}. A solution
/// that did not converge is returned with `converged == false`.
auto equilibrate(const ChemicalSystem& system, const ThermoModels& models,
    const EquilibriumProblem& problem, const EquilibriumOptions& options = {}) -> EquilibriumSolution;

/// Same as above, starting from the species amounts `guess`.
auto equilibrate(const ChemicalSystem& system, const ThermoModels& models,
    const EquilibriumProblem& problem, const Vector& guess,
    const EquilibriumOptions& options = {}) -> EquilibriumSolution;

/// G = Σ μ_i n_i, J.
auto gibbsEnergy(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state) -> double;

/// r_m = ln K_m − Σ_i ν_mi ln a_i.
///
/// Every species taking part in a reaction must be stable (n_i > ε_s ‖A n‖∞),
/// otherwise InputError is thrown.
auto lmaResidual(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, const Matrix& nu, const EquilibriumOptions& options = {}) -> Vector;

struct Sensitivities
{
    Vector dn_dT;
    Vector dn_dP;
    /// N×E
    Matrix dn_db;
};

/// Stable species at a solution: n_i/s ≥ z_i/RT. Throws DegenerateActiveSet if
/// some species is neither clearly stable nor clearly unstable (see
/// EquilibriumOptions::stabilityThreshold).
auto stableSpecies(const ChemicalSystem& system, const EquilibriumSolution& solution,
    double T, const EquilibriumOptions& options = {}) -> std::vector<bool>;

/// ∂n/∂T, ∂n/∂P and ∂n/∂b at an equilibrium by implicit differentiation of the
/// KKT conditions restricted to the stable species.
auto sensitivities(const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const EquilibriumSolution& solution,
    const EquilibriumOptions& options = {}) -> Sensitivities;

/// Same, reusing chemical properties already evaluated at (T, P, solution.n).
auto sensitivities(const ChemicalSystem& system, const ChemicalProperties& props,
    const EquilibriumSolution& solution, const EquilibriumOptions& options = {}) -> Sensitivities;

/// Lawson–Hanson nonnegative least squares: argmin ‖A x − b‖ subject to x ≥ 0.
auto nonnegativeLeastSquares(const Matrix& A, const Vector& b) -> Vector;

} // namespace smarteq
