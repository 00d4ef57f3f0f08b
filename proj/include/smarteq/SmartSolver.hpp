#pragma once

#include <smarteq/Config.hpp>
#include <smarteq/RecordStore.hpp>

#include <optional>

namespace smarteq {

enum class AcceptanceTest { ChemicalPotential, Activity, Amounts };

/// Accepts mu, chemical-potential, activity, amounts.
auto acceptanceTestFromString(const std::string& text) -> AcceptanceTest;
auto toString(AcceptanceTest test) -> std::string;

/// Bound of the acceptance test: |x^q − x^p| ≤ epsRel |x^p| + epsAbs.
///
/// For the chemical-potential test epsAbs is in units of RT (it is multiplied
/// by R T before use); for the activity test it is dimensionless and for the
/// amounts test it is in mol.
struct Tolerances
{
    double epsRel = 0.1;
    double epsAbs = 0.1;
    AcceptanceTest test = AcceptanceTest::ChemicalPotential;
};

void validateTolerances(const Tolerances& tolerances);

struct SmartOptions
{
    Tolerances tolerances;
    SearchBackend backend = SearchBackend::KdTree;
    SearchWeights weights;
    Index rebuildInterval = 16;
};

/// `[smart]` section: test, eps_rel, eps_abs, search, rebuild_interval,
/// weight_T, weight_P, weight_b.
auto loadSmartOptions(const Config& config) -> SmartOptions;

/// The record lacks sensitivities and cannot be extrapolated from.
struct PredictionUnavailable : Error
{
    using Error::Error;
};

struct Prediction
{
    Vector n;
    /// Σ of the negative parts removed by clipping, mol.
    double clipMagnitude = 0.0;
    bool clipped = false;
    std::vector<Index> clippedSpecies;
};

/// First-order Taylor estimate of the species amounts at (T, P, b), clipped at zero.
auto predict(const EquilibriumRecord& record, double T, double P, const Vector& b) -> Prediction;

/// μ^q = μ^p + ∂μ/∂T ΔT + ∂μ/∂P ΔP + ∂μ/∂n (n^q − n^p).
auto predictPotentials(const EquilibriumRecord& record, const Vector& n, double T, double P) -> Vector;

/// Same extrapolation for ln a; needs a record with activities.
auto predictLnActivities(const EquilibriumRecord& record, const Vector& n, double T, double P) -> Vector;

struct Acceptance
{
    bool accepted = false;
    /// |x^q − x^p| − bound per species; the prediction is accepted iff all are ≤ 0.
    Vector margins;
};

/// Chemical-potential test, with epsAbs scaled by R T.
auto accept(const EquilibriumRecord& record, const Vector& mu, const Tolerances& tolerances,
    double T) -> Acceptance;

auto acceptActivities(const EquilibriumRecord& record, const Vector& ln_a,
    const Tolerances& tolerances) -> Acceptance;

auto acceptAmounts(const EquilibriumRecord& record, const Vector& n,
    const Tolerances& tolerances) -> Acceptance;

struct SmartResult
{
    ChemicalState state;
    ResultKind kind = ResultKind::Learned;
    std::optional<Index> nearestId;
    /// Input-space distance to the nearest record, NaN for an empty store.
    double distance = 0.0;
    /// Acceptance margins of the last prediction tried; empty if none was.
    Vector margins;
    bool clipped = false;
    double clipMagnitude = 0.0;
    /// Id of the appended record when kind is Learned.
    std::optional<Index> recordId;
    /// Interior-point iterations spent; zero for a prediction.
    int iterations = 0;
};

/// Full equilibrium calculation whose result is appended to the store.
///
/// Warm-starts from `guess` if given, otherwise from the nearest record.
/// Failed solves throw and leave the store untouched.
auto learn(RecordStore& store, const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const Vector& b, const Tolerances& tolerances,
    const EquilibriumOptions& options = {}, const Vector* guess = nullptr) -> SmartResult;

/// Search, predict, test; learn if the prediction is rejected or unavailable.
///
/// A clipped species has no finite predicted potential (ln a → −∞ as its
/// amount reaches zero, and a vanished mineral leaves the active set), so a
/// prediction with any clipped component fails the test with an infinite
/// margin for that species.
auto solveSmart(RecordStore& store, const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const Vector& b, const Tolerances& tolerances,
    const EquilibriumOptions& options = {}, const Vector* guess = nullptr) -> SmartResult;

} // namespace smarteq
