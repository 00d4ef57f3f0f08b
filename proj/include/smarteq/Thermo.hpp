#pragma once

#include <vector>

#include <smarteq/ChemicalSystem.hpp>
#include <smarteq/Config.hpp>

namespace smarteq {

/// Standard chemical potential μ° = α + β (T − T_ref) + γ (P − P_ref), in J/mol.
struct StandardPotential
{
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

enum class ActivityModel { IdealAqueous, DebyeHuckelAqueous, IdealGas, PurePhase };

auto activityModelFromString(const std::string& text) -> ActivityModel;

/// Simplified thermodynamic layer: per-species μ° parameters and per-phase activity models.
struct ThermoModels
{
    std::vector<StandardPotential> potentials;
    std::vector<ActivityModel> activity;
    double Tref = 298.15;
    double Pref = 1.0e5;
    /// Debye-Hückel constant, kg^½/mol^½, entering ln γ.
    double debyeHuckelA = 0.51;
    /// Amount used inside logarithms for species with n_i = 0.
    double amountFloor = 1.0e-50;
};

/// Models with all-zero μ° and the default activity model of each phase kind.
auto defaultThermoModels(const ChemicalSystem& system) -> ThermoModels;

/// `[thermo]` section plus the mu0/dmu0_dT/dmu0_dP keys of `[species …]` and
/// the activity key of `[phase …]`.
auto loadThermoModels(const Config& config, const ChemicalSystem& system) -> ThermoModels;

struct StandardPotentials
{
    Vector mu0;
    Vector dmu0_dT;
    Vector dmu0_dP;
};

auto standardPotentials(const ThermoModels& models, double T, double P) -> StandardPotentials;

struct Activities
{
    Vector ln_a;
    Vector dlna_dT;
    Vector dlna_dP;
    Matrix dlna_dn;
};

auto activities(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state) -> Activities;

/// Chemical potentials μ = μ° + RT ln a and their derivatives at fixed (T, P, n).
struct ChemicalProperties
{
    double T = 0.0;
    double P = 0.0;
    Vector mu0;
    Vector ln_a;
    Vector mu;
    Vector dmu_dT;
    Vector dmu_dP;
    Matrix dmu_dn;
    Vector dlna_dT;
    Vector dlna_dP;
    Matrix dlna_dn;
};

auto chemicalPotentials(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state) -> ChemicalProperties;

/// In-place variant that reuses the storage of `props`.
void evaluateChemicalPotentials(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, ChemicalProperties& props);

/// ln K_m = −Σ_i ν_mi μ°_i / (RT) for each row of the stoichiometric matrix `nu`.
///
/// Throws InputError if a row is not mass balanced (A νᵀ ≠ 0).
auto reactionLnK(const ChemicalSystem& system, const ThermoModels& models, const Matrix& nu,
    double T, double P) -> Vector;

} // namespace smarteq
