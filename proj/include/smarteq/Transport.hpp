#pragma once

#include <smarteq/SmartSolver.hpp>

namespace smarteq {

/// Uniform 1D grid of `ncells` cells over [0, length].
struct Grid1D
{
    Index ncells = 100;
    double length = 1.0;

    auto dx() const -> double { return length / static_cast<double>(ncells); }
    auto center(Index i) const -> double { return (static_cast<double>(i) + 0.5) * dx(); }
};

void validateGrid(const Grid1D& grid);

struct TransportParams
{
    /// Pore velocity, m/s.
    double v = 0.0;
    /// Diffusion coefficient, m²/s.
    double D = 0.0;
    /// Time step, s.
    double dt = 1.0;
    Index nsteps = 0;
};

void validateTransportParams(const TransportParams& params);

struct BoundaryConditions
{
    /// Fluid element amounts entering through the left face.
    Vector inlet;
    /// No-flux at both ends instead of inlet/outflow.
    bool closed = false;
};

/// Per-cell states and the fluid/solid split of their element amounts.
///
/// b_f and b_s are E×ncells, one column per cell, in mol per unit bulk volume.
struct CellField
{
    std::vector<ChemicalState> states;
    Matrix bf;
    Matrix bs;

    auto ncells() const -> Index { return states.size(); }
};

/// A uniform field of `ncells` copies of `state`.
auto uniformField(const ChemicalSystem& system, const ChemicalState& state, Index ncells) -> CellField;

/// One fully implicit step of upwind advection and central diffusion for every
/// element row of `bf`. The left face carries the inlet (Dirichlet, half-cell
/// diffusion); the right face lets fluid out with zero diffusive gradient.
auto transportStep(const Matrix& bf, const Grid1D& grid, const TransportParams& params,
    const BoundaryConditions& bc) -> Matrix;

enum class SolverChoice { Conventional, Smart };

auto solverChoiceFromString(const std::string& text) -> SolverChoice;
auto toString(SolverChoice choice) -> std::string;

struct ReactiveContext
{
    const ChemicalSystem* system = nullptr;
    const ThermoModels* models = nullptr;
    EquilibriumOptions options;
    SolverChoice solver = SolverChoice::Smart;
    /// Required for the smart solver.
    RecordStore* store = nullptr;
    Tolerances tolerances;
    /// Solve cells concurrently; learning order becomes nondeterministic.
    bool parallel = false;
    /// Reported in error messages.
    Index step = 0;
};

struct ReactiveStepStats
{
    Index learned = 0;
    Index predicted = 0;
    Index clipped = 0;
    double seconds = 0.0;
};

/// Per-cell equilibrium failure; names the cell and the time step.
struct CellFailure : NumericalError
{
    CellFailure(const std::string& what, Index cell, Index step)
        : NumericalError(what), cell(cell), step(step) {}
    Index cell;
    Index step;
};

/// Adds the transported fluid amounts to the solid amounts of each cell,
/// re-equilibrates and splits the result back into b_f and b_s.
///
/// `kinds`, if given, receives the kind of every cell's result (conventional
/// solves count as learned).
auto reactiveStep(CellField& field, const Matrix& bfTransported, const ReactiveContext& context,
    std::vector<ResultKind>* kinds = nullptr) -> ReactiveStepStats;

} // namespace smarteq
