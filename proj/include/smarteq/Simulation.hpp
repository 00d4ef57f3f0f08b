#pragma once

#include <smarteq/Transport.hpp>

#include <iosfwd>
#include <limits>
#include <optional>

namespace smarteq {

/// Element composition of a chemical formula such as "MgCl2" or "CaCO3".
auto parseChemicalFormula(std::string_view formula) -> Formula;

/// A fluid recipe: kilograms of water plus moles of neutral compounds.
struct Recipe
{
    std::string name;
    double waterKg = 1.0;
    std::vector<std::pair<std::string, double>> compounds;
};

/// Element amounts of `scale` copies of the recipe.
auto recipeElementAmounts(const ChemicalSystem& system, const Recipe& recipe, double scale) -> Vector;

/// Porosity and mineral volume fractions of the solid, which sum to 1.
struct RockComposition
{
    double porosity = 0.1;
    std::vector<std::pair<std::string, double>> minerals;
};

/// Element amounts per m³ of bulk rock.
auto rockElementAmounts(const ChemicalSystem& system, const RockComposition& rock) -> Vector;

/// `[problem]`: temperature, pressure and exactly one of `elements` (element
/// amounts), `species` (species amounts, converted to element amounts) or
/// `recipe` (a named `[recipe]` section, optionally multiplied by `scale`).
auto loadProblem(const Config& config, const ChemicalSystem& system) -> EquilibriumProblem;

/// Everything needed to run the column experiment.
struct SimulationConfig
{
    ChemicalSystem system;
    ThermoModels models;
    EquilibriumOptions equilibrium;
    SmartOptions smart;
    Grid1D grid;
    TransportParams transport;
    bool closed = false;
    double T = 298.15;
    double P = 1.0e5;
    Recipe injection;
    Recipe resident;
    RockComposition rock;
    std::vector<double> snapshotTimes;
    SolverChoice solver = SolverChoice::Smart;
    bool parallel = false;

    /// Recipe multiplier giving amounts per m³ of bulk: porosity · 1000 kg / waterKg.
    auto fluidScale(const Recipe& recipe) const -> double;
};

/// Reads the chemistry sections plus `[simulation]`, `[recipe injection]`,
/// `[recipe resident]`, `[rock]`, `[smart]` and `[solver]`.
auto loadSimulationConfig(const Config& config) -> SimulationConfig;

struct StepStats
{
    Index step = 0;
    double time = 0.0;
    Index learned = 0;
    Index predicted = 0;
    Index clipped = 0;
    double transportSeconds = 0.0;
    double equilibriumSeconds = 0.0;
    Index cumulativeLearned = 0;
    Index cumulativePredicted = 0;
    double cumulativeTransportSeconds = 0.0;
    double cumulativeEquilibriumSeconds = 0.0;
    /// Compare mode only: conventional solves of the same cell inputs.
    std::optional<double> conventionalSeconds;
    std::optional<double> cumulativeConventionalSeconds;
    std::optional<double> speedup;
};

struct Snapshot
{
    Index step = 0;
    double time = 0.0;
    CellField field;
    /// Result kind per cell; empty for the initial condition.
    std::vector<ResultKind> kinds;
};

struct SimulationOutput
{
    ChemicalState inletState;
    Vector inlet;
    CellField initial;
    CellField final;
    std::vector<ResultKind> finalKinds;
    std::vector<StepStats> steps;
    std::vector<Snapshot> snapshots;
    Index learned = 0;
    Index predicted = 0;
    Index calls = 0;
};

/// Receives results as soon as they exist, so output can be flushed per step.
class SimulationObserver
{
public:
    virtual ~SimulationObserver() = default;
    virtual void onSnapshot(const SimulationConfig&, const Snapshot&) {}
    virtual void onStep(const SimulationConfig&, const StepStats&) {}
};

struct RunOptions
{
    /// Re-solve every step's cell inputs with the conventional solver and time it.
    bool compare = false;
    /// Existing store to use and extend; a fresh one is created when null.
    RecordStore* store = nullptr;
    SimulationObserver* observer = nullptr;
};

/// Equilibrium state of a recipe (plus optional rock) at (T, P), solved conventionally.
auto equilibrateRecipe(const SimulationConfig& config, const Recipe& recipe,
    const RockComposition* rock) -> ChemicalState;

/// nsteps of transport followed by per-cell equilibration.
auto runSimulation(const SimulationConfig& config, const RunOptions& options = {}) -> SimulationOutput;

struct BenchSummary
{
    /// Median per-step speedup over the last quarter of the steps.
    double stabilizedSpeedup = std::numeric_limits<double>::quiet_NaN();
    /// Largest per-step speedup, first step excluded.
    double peakSpeedup = std::numeric_limits<double>::quiet_NaN();
    Index learned = 0;
    Index calls = 0;
    double predictionFraction = 0.0;
};

auto summarizeBench(const SimulationOutput& output) -> BenchSummary;

auto profileFileName(double time) -> std::string;

/// One row per cell: x, kind, n_<species>, m_<solute>, vf_<mineral>.
void writeProfileCsv(std::ostream& out, const SimulationConfig& config, const Snapshot& snapshot);

void writeStatsHeader(std::ostream& out);
void writeStatsRow(std::ostream& out, const StepStats& stats);

} // namespace smarteq
