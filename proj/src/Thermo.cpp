#include <smarteq/Thermo.hpp>

#include <cmath>

namespace smarteq {
namespace {

void checkModels(const ChemicalSystem& system, const ThermoModels& models)
{
    if(models.potentials.size() != system.numSpecies())
        throw InputError("thermodynamic models define " + std::to_string(models.potentials.size()) +
            " standard potentials for " + std::to_string(system.numSpecies()) + " species");
    if(models.activity.size() != system.numPhases())
        throw InputError("thermodynamic models define activity models for " +
            std::to_string(models.activity.size()) + " of " + std::to_string(system.numPhases()) + " phases");
}

void aqueousActivities(const ChemicalSystem& system, const ThermoModels& models, const Phase& phase,
    bool debyeHuckel, const Vector& n, Activities& out)
{
    const Index w = *phase.solvent;
    const double floor = models.amountFloor;

    double solutes = 0.0;
    for(Index i : phase.species)
        if(i != w) solutes += n[i];
    if(n[w] <= 0.0 && solutes > 0.0)
        throw InputError("aqueous phase '" + phase.name + "' has solutes but no solvent");

    const double nw = std::max(n[w], floor);
    const double kgw = nw * waterMolarMass;

    // Ideal dilute solution: ln a_i = ln m_i for solutes and ln a_w = −Σ n_i / n_w for
    // the solvent, which keeps μ the exact gradient of G (symmetric ∂μ/∂n).
    double lnaw = 0.0;
    for(Index i : phase.species)
    {
        if(i == w) continue;
        const double ni = std::max(n[i], floor);
        out.ln_a[i] = std::log(ni / kgw);
        out.dlna_dn(i, i) += 1.0 / ni;
        out.dlna_dn(i, w) -= 1.0 / nw;
        out.dlna_dn(w, i) -= 1.0 / nw;
        lnaw -= ni / nw;
    }
    out.ln_a[w] = lnaw;
    out.dlna_dn(w, w) += -lnaw / nw;

    if(!debyeHuckel) return;

    // ln γ_i = −A z_i² √I/(1+√I), I = ½ Σ m_i z_i². The solvent term follows from
    // G_ex/RT = −A W h(I), W = n_w M_w, h(I) = 2 (I − 2√I + 2 ln(1+√I)).
    double I = 0.0;
    for(Index i : phase.species)
        if(i != w) I += 0.5 * std::max(n[i], floor) * system.species(i).charge * system.species(i).charge;
    I /= kgw;
    if(I <= 0.0) return;

    const double A = models.debyeHuckelA;
    const double s = std::sqrt(I);
    const double f = s / (1.0 + s);
    const double df = 1.0 / (2.0 * s * (1.0 + s) * (1.0 + s));
    const double h = 2.0 * (I - 2.0 * s + 2.0 * std::log1p(s));

    for(Index i : phase.species)
    {
        if(i == w) continue;
        const double zi2 = system.species(i).charge * system.species(i).charge;
        if(zi2 == 0.0) continue;
        out.ln_a[i] += -A * zi2 * f;
        for(Index k : phase.species)
        {
            if(k == w) continue;
            const double zk2 = system.species(k).charge * system.species(k).charge;
            out.dlna_dn(i, k) += -A * zi2 * df * zk2 / (2.0 * kgw);
        }
        out.dlna_dn(i, w) += A * zi2 * df * I / nw;
        out.dlna_dn(w, i) += A * zi2 * df * I / nw;
    }
    out.ln_a[w] += -A * waterMolarMass * (h - 2.0 * I * f);
    out.dlna_dn(w, w) += -2.0 * A * waterMolarMass * I * I * df / nw;
}

void gasActivities(const ThermoModels& models, const Phase& phase, const ChemicalState& state,
    Activities& out)
{
    const double floor = models.amountFloor;
    double total = 0.0;
    for(Index i : phase.species) total += std::max(state.n[i], floor);
    const double lnP = std::log(state.P / standardPressure);
    for(Index i : phase.species)
    {
        const double ni = std::max(state.n[i], floor);
        out.ln_a[i] = std::log(ni / total) + lnP;
        out.dlna_dP[i] = 1.0 / state.P;
        for(Index k : phase.species)
            out.dlna_dn(i, k) -= 1.0 / total;
        out.dlna_dn(i, i) += 1.0 / ni;
    }
}

void evaluateActivities(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, Activities& out)
{
    const auto N = system.numSpecies();
    out.ln_a.setZero(N);
    out.dlna_dT.setZero(N);
    out.dlna_dP.setZero(N);
    out.dlna_dn.setZero(N, N);
    for(Index k = 0; k < system.numPhases(); ++k)
    {
        const auto& phase = system.phase(k);
        switch(models.activity[k])
        {
            case ActivityModel::IdealAqueous:
            case ActivityModel::DebyeHuckelAqueous:
                if(!phase.solvent)
                    throw InputError("phase '" + phase.name + "' uses an aqueous activity model without a solvent");
                aqueousActivities(system, models, phase,
                    models.activity[k] == ActivityModel::DebyeHuckelAqueous, state.n, out);
                break;
            case ActivityModel::IdealGas:
                gasActivities(models, phase, state, out);
                break;
            case ActivityModel::PurePhase:
                break;
        }
    }
}

} // namespace

auto activityModelFromString(const std::string& text) -> ActivityModel
{
    if(text == "ideal-aqueous") return ActivityModel::IdealAqueous;
    if(text == "debye-huckel" || text == "debye-huckel-aqueous") return ActivityModel::DebyeHuckelAqueous;
    if(text == "ideal-gas") return ActivityModel::IdealGas;
    if(text == "pure" || text == "pure-phase") return ActivityModel::PurePhase;
    throw InputError("unknown activity model '" + text + "'");
}

auto defaultThermoModels(const ChemicalSystem& system) -> ThermoModels
{
    ThermoModels models;
    models.potentials.assign(system.numSpecies(), {});
    for(const auto& phase : system.phases())
    {
        switch(phase.kind)
        {
            case PhaseKind::Aqueous: models.activity.push_back(ActivityModel::IdealAqueous); break;
            case PhaseKind::Gaseous: models.activity.push_back(ActivityModel::IdealGas); break;
            case PhaseKind::Mineral: models.activity.push_back(ActivityModel::PurePhase); break;
        }
    }
    return models;
}

auto loadThermoModels(const Config& config, const ChemicalSystem& system) -> ThermoModels
{
    auto models = defaultThermoModels(system);
    if(const auto* thermo = config.section("thermo"))
    {
        thermo->allowKeys({"T_ref", "P_ref", "A_DH", "amount_floor"});
        models.Tref = thermo->number("T_ref", models.Tref);
        models.Pref = thermo->number("P_ref", models.Pref);
        models.debyeHuckelA = thermo->number("A_DH", models.debyeHuckelA);
        models.amountFloor = thermo->number("amount_floor", models.amountFloor);
        if(!(models.Tref > 0.0) || !(models.Pref > 0.0) || !(models.amountFloor > 0.0))
            throw InputError("[thermo]: T_ref, P_ref and amount_floor must be positive");
    }
    for(Index i = 0; i < system.numSpecies(); ++i)
    {
        const auto& s = config.requireSection("species", system.species(i).name);
        if(!s.find("mu0"))
            throw InputError(s.label() + ": species has no standard potential parameters (mu0)");
        models.potentials[i] = {s.requireNumber("mu0"), s.number("dmu0_dT", 0.0), s.number("dmu0_dP", 0.0)};
    }
    for(Index k = 0; k < system.numPhases(); ++k)
    {
        const auto& phase = system.phase(k);
        const auto& s = config.requireSection("phase", phase.name);
        if(auto text = s.text("activity"))
        {
            auto model = activityModelFromString(*text);
            const bool aqueousModel = model == ActivityModel::IdealAqueous || model == ActivityModel::DebyeHuckelAqueous;
            if(phase.kind == PhaseKind::Mineral && model != ActivityModel::PurePhase)
                throw InputError(s.label() + ": mineral phases use the pure-phase activity model");
            if(aqueousModel && phase.kind != PhaseKind::Aqueous)
                throw InputError(s.label() + ": aqueous activity models need an aqueous phase");
            models.activity[k] = model;
        }
    }
    return models;
}

auto standardPotentials(const ThermoModels& models, double T, double P) -> StandardPotentials
{
    if(!(T > 0.0) || !(P > 0.0)) throw InputError("temperature and pressure must be positive");
    const auto N = models.potentials.size();
    StandardPotentials out{Vector(N), Vector(N), Vector(N)};
    for(Index i = 0; i < N; ++i)
    {
        const auto& p = models.potentials[i];
        out.mu0[i] = p.alpha + p.beta * (T - models.Tref) + p.gamma * (P - models.Pref);
        out.dmu0_dT[i] = p.beta;
        out.dmu0_dP[i] = p.gamma;
    }
    return out;
}

auto activities(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state) -> Activities
{
    checkModels(system, models);
    validateState(system, state);
    Activities out;
    evaluateActivities(system, models, state, out);
    return out;
}

void evaluateChemicalPotentials(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, ChemicalProperties& props)
{
    checkModels(system, models);
    validateState(system, state);

    const auto N = system.numSpecies();
    const double T = state.T;
    const double RT = gasConstant * T;

    Activities act;
    act.ln_a = std::move(props.ln_a);
    act.dlna_dT = std::move(props.dlna_dT);
    act.dlna_dP = std::move(props.dlna_dP);
    act.dlna_dn = std::move(props.dlna_dn);
    evaluateActivities(system, models, state, act);

    props.T = T;
    props.P = state.P;
    props.mu0.resize(N);
    props.mu.resize(N);
    props.dmu_dT.resize(N);
    props.dmu_dP.resize(N);
    for(Index i = 0; i < N; ++i)
    {
        const auto& p = models.potentials[i];
        const double mu0 = p.alpha + p.beta * (T - models.Tref) + p.gamma * (state.P - models.Pref);
        props.mu0[i] = mu0;
        props.mu[i] = mu0 + RT * act.ln_a[i];
        props.dmu_dT[i] = p.beta + gasConstant * act.ln_a[i] + RT * act.dlna_dT[i];
        props.dmu_dP[i] = p.gamma + RT * act.dlna_dP[i];
    }
    props.dmu_dn = RT * act.dlna_dn;
    props.ln_a = std::move(act.ln_a);
    props.dlna_dT = std::move(act.dlna_dT);
    props.dlna_dP = std::move(act.dlna_dP);
    props.dlna_dn = std::move(act.dlna_dn);
}

auto chemicalPotentials(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state) -> ChemicalProperties
{
    ChemicalProperties props;
    evaluateChemicalPotentials(system, models, state, props);
    return props;
}

auto reactionLnK(const ChemicalSystem& system, const ThermoModels& models, const Matrix& nu,
    double T, double P) -> Vector
{
    checkModels(system, models);
    if(static_cast<Index>(nu.cols()) != system.numSpecies())
        throw InputError("stoichiometric matrix must have one column per species");
    const Matrix& A = system.formulaMatrix();
    const Matrix balance = A * nu.transpose();
    for(Index m = 0; m < static_cast<Index>(nu.rows()); ++m)
    {
        const double scale = std::max(1.0, nu.row(m).cwiseAbs().maxCoeff() * A.cwiseAbs().maxCoeff());
        if(balance.col(m).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw InputError("reaction " + std::to_string(m) + " does not conserve elements");
    }
    const auto mu0 = standardPotentials(models, T, P).mu0;
    return -(nu * mu0) / (gasConstant * T);
}

} // namespace smarteq
