#include <smarteq/SmartSolver.hpp>

#include <chrono>
#include <cmath>
#include <limits>

namespace smarteq {

auto acceptanceTestFromString(const std::string& text) -> AcceptanceTest
{
    if(text == "mu" || text == "chemical-potential")
        return AcceptanceTest::ChemicalPotential;
    if(text == "activity")
        return AcceptanceTest::Activity;
    if(text == "amounts")
        return AcceptanceTest::Amounts;
    throw InputError("unknown acceptance test '" + text + "' (expected mu, activity or amounts)");
}

auto toString(AcceptanceTest test) -> std::string
{
    switch(test)
    {
    case AcceptanceTest::ChemicalPotential: return "mu";
    case AcceptanceTest::Activity: return "activity";
    case AcceptanceTest::Amounts: return "amounts";
    }
    return "mu";
}

void validateTolerances(const Tolerances& tolerances)
{
    if(!(tolerances.epsRel >= 0.0) || !(tolerances.epsAbs >= 0.0))
        throw InputError("tolerances eps_rel and eps_abs must be nonnegative");
}

auto loadSmartOptions(const Config& config) -> SmartOptions
{
    SmartOptions options;
    const auto* section = config.section("smart");
    if(!section)
        return options;
    section->allowKeys({"test", "eps_rel", "eps_abs", "search", "rebuild_interval", "weight_T",
        "weight_P", "weight_b"});
    if(auto text = section->text("test"))
        options.tolerances.test = acceptanceTestFromString(*text);
    options.tolerances.epsRel = section->number("eps_rel", options.tolerances.epsRel);
    options.tolerances.epsAbs = section->number("eps_abs", options.tolerances.epsAbs);
    validateTolerances(options.tolerances);
    if(auto text = section->text("search"))
        options.backend = searchBackendFromString(*text);
    const long interval = section->integer("rebuild_interval", 16);
    if(interval < 1)
        throw InputError(section->label() + ": rebuild_interval must be at least 1");
    options.rebuildInterval = static_cast<Index>(interval);
    options.weights.T = section->number("weight_T", 1.0);
    options.weights.P = section->number("weight_P", 1.0);
    options.weights.b = section->number("weight_b", 1.0);
    if(options.weights.T < 0.0 || options.weights.P < 0.0 || options.weights.b < 0.0)
        throw InputError(section->label() + ": search weights must be nonnegative");
    return options;
}

auto predict(const EquilibriumRecord& record, double T, double P, const Vector& b) -> Prediction
{
    if(!record.hasSensitivities)
        throw PredictionUnavailable("record " + std::to_string(record.id) + " has no sensitivities");
    Prediction p;
    p.n = record.n + record.sens.dn_dT * (T - record.T) + record.sens.dn_dP * (P - record.P)
        + record.sens.dn_db * (b - record.b);
    for(Index i = 0; i < static_cast<Index>(p.n.size()); ++i)
    {
        if(p.n[i] < 0.0)
        {
            p.clipMagnitude -= p.n[i];
            p.clipped = true;
            p.clippedSpecies.push_back(i);
            p.n[i] = 0.0;
        }
    }
    return p;
}

auto predictPotentials(const EquilibriumRecord& record, const Vector& n, double T, double P) -> Vector
{
    return record.mu + record.dmu_dT * (T - record.T) + record.dmu_dP * (P - record.P)
        + record.dmu_dn * (n - record.n);
}

auto predictLnActivities(const EquilibriumRecord& record, const Vector& n, double T, double P) -> Vector
{
    if(!record.hasActivities)
        throw PredictionUnavailable("record " + std::to_string(record.id) + " has no activity data");
    return record.ln_a + record.dlna_dT * (T - record.T) + record.dlna_dP * (P - record.P)
        + record.dlna_dn * (n - record.n);
}

namespace {

auto testBound(const Vector& predicted, const Vector& reference, double epsRel, double epsAbs)
    -> Acceptance
{
    if(predicted.size() != reference.size())
        throw InputError("acceptance test: predicted vector has " + std::to_string(predicted.size())
            + " entries, record has " + std::to_string(reference.size()));
    Acceptance a;
    a.margins = (predicted - reference).cwiseAbs() - epsRel * reference.cwiseAbs()
        - Vector::Constant(reference.size(), epsAbs);
    a.accepted = true;
    for(Index i = 0; i < static_cast<Index>(a.margins.size()); ++i)
    {
        // NaN margins reject.
        if(!(a.margins[i] <= 0.0))
            a.accepted = false;
    }
    return a;
}

} // namespace

auto accept(const EquilibriumRecord& record, const Vector& mu, const Tolerances& tolerances,
    double T) -> Acceptance
{
    return testBound(mu, record.mu, tolerances.epsRel, tolerances.epsAbs * gasConstant * T);
}

auto acceptActivities(const EquilibriumRecord& record, const Vector& ln_a,
    const Tolerances& tolerances) -> Acceptance
{
    if(!record.hasActivities)
        throw PredictionUnavailable("record " + std::to_string(record.id) + " has no activity data");
    return testBound(ln_a, record.ln_a, tolerances.epsRel, tolerances.epsAbs);
}

auto acceptAmounts(const EquilibriumRecord& record, const Vector& n,
    const Tolerances& tolerances) -> Acceptance
{
    return testBound(n, record.n, tolerances.epsRel, tolerances.epsAbs);
}

namespace {

using Clock = std::chrono::steady_clock;

auto secondsSince(Clock::time_point start) -> double
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

auto learnRecord(RecordStore& store, const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const Vector& b, const Tolerances& tolerances,
    const EquilibriumOptions& options, const Vector* guess, const EquilibriumRecord* nearest)
    -> SmartResult
{
    const EquilibriumProblem problem{T, P, b};
    EquilibriumSolution solution;
    if(guess)
        solution = equilibrate(system, models, problem, *guess, options);
    else if(nearest)
        solution = equilibrate(system, models, problem, nearest->n, options);
    else
        solution = equilibrate(system, models, problem, options);
    if(!solution.converged)
        throw NonConvergence("equilibrium did not converge in " + std::to_string(solution.iterations)
                + " iterations (residual " + std::to_string(solution.residualNorm) + ")",
            solution);

    const auto props = chemicalPotentials(system, models, {T, P, solution.n});

    EquilibriumRecord rec;
    rec.T = T;
    rec.P = P;
    rec.b = b;
    rec.n = solution.n;
    try
    {
        rec.sens = sensitivities(system, props, solution, options);
        rec.hasSensitivities = true;
    }
    catch(const DegenerateActiveSet&)
    {
        rec.hasSensitivities = false;
    }
    rec.mu = props.mu;
    rec.dmu_dT = props.dmu_dT;
    rec.dmu_dP = props.dmu_dP;
    rec.dmu_dn = props.dmu_dn;
    if(tolerances.test == AcceptanceTest::Activity)
    {
        rec.hasActivities = true;
        rec.ln_a = props.ln_a;
        rec.dlna_dT = props.dlna_dT;
        rec.dlna_dP = props.dlna_dP;
        rec.dlna_dn = props.dlna_dn;
    }

    const auto& stored = store.insert(std::move(rec));
    SmartResult result;
    result.state = {T, P, solution.n};
    result.kind = ResultKind::Learned;
    result.recordId = stored.id;
    result.iterations = solution.iterations;
    return result;
}

void checkQuery(const RecordStore& store, const ChemicalSystem& system, const Vector& b)
{
    if(store.signature() != system.signature())
        throw InputError("record store belongs to a different chemical system");
    if(static_cast<Index>(b.size()) != system.numElements())
        throw InputError("element amount vector has the wrong size");
}

} // namespace

auto learn(RecordStore& store, const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const Vector& b, const Tolerances& tolerances,
    const EquilibriumOptions& options, const Vector* guess) -> SmartResult
{
    checkQuery(store, system, b);
    const auto start = Clock::now();
    const auto near = store.nearest(T, P, b);
    auto result = learnRecord(store, system, models, T, P, b, tolerances, options, guess,
        near ? near->record : nullptr);
    if(near)
    {
        result.nearestId = near->record->id;
        result.distance = near->distance;
    }
    else
        result.distance = std::numeric_limits<double>::quiet_NaN();
    store.logCall(ResultKind::Learned, result.distance, secondsSince(start));
    return result;
}

auto solveSmart(RecordStore& store, const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const Vector& b, const Tolerances& tolerances,
    const EquilibriumOptions& options, const Vector* guess) -> SmartResult
{
    checkQuery(store, system, b);
    const auto start = Clock::now();
    const auto near = store.nearest(T, P, b);
    if(!near)
    {
        auto result = learnRecord(store, system, models, T, P, b, tolerances, options, guess, nullptr);
        result.distance = std::numeric_limits<double>::quiet_NaN();
        store.logCall(ResultKind::Learned, result.distance, secondsSince(start));
        return result;
    }

    const EquilibriumRecord& rec = *near->record;
    Vector margins;
    bool clipped = false;
    double clipMagnitude = 0.0;
    const bool usable = rec.hasSensitivities
        && (tolerances.test != AcceptanceTest::Activity || rec.hasActivities);
    if(usable)
    {
        auto prediction = predict(rec, T, P, b);
        clipped = prediction.clipped;
        clipMagnitude = prediction.clipMagnitude;
        Acceptance acceptance;
        switch(tolerances.test)
        {
        case AcceptanceTest::ChemicalPotential:
            acceptance = accept(rec, predictPotentials(rec, prediction.n, T, P), tolerances, T);
            break;
        case AcceptanceTest::Activity:
            acceptance = acceptActivities(rec, predictLnActivities(rec, prediction.n, T, P), tolerances);
            break;
        case AcceptanceTest::Amounts:
            acceptance = acceptAmounts(rec, prediction.n, tolerances);
            break;
        }
        for(Index i : prediction.clippedSpecies)
        {
            acceptance.margins[i] = std::numeric_limits<double>::infinity();
            acceptance.accepted = false;
        }
        if(acceptance.accepted)
        {
            SmartResult result;
            result.state = {T, P, std::move(prediction.n)};
            result.kind = ResultKind::Predicted;
            result.nearestId = rec.id;
            result.distance = near->distance;
            result.margins = std::move(acceptance.margins);
            result.clipped = clipped;
            result.clipMagnitude = clipMagnitude;
            store.logCall(ResultKind::Predicted, result.distance, secondsSince(start));
            return result;
        }
        margins = std::move(acceptance.margins);
    }

    auto result = learnRecord(store, system, models, T, P, b, tolerances, options, guess, &rec);
    result.nearestId = rec.id;
    result.distance = near->distance;
    result.margins = std::move(margins);
    result.clipped = clipped;
    result.clipMagnitude = clipMagnitude;
    store.logCall(ResultKind::Learned, result.distance, secondsSince(start));
    return result;
}

} // namespace smarteq
