#include <smarteq/ChemicalSystem.hpp>

#include <algorithm>
#include <set>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>
#include <fmt/format.h>

namespace smarteq {
namespace {

auto fnv1a(std::uint64_t hash, const std::string& text) -> std::uint64_t
{
    for(unsigned char c : text)
    {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    // Separator so that {"ab","c"} and {"a","bc"} differ.
    hash ^= 0xffu;
    hash *= 1099511628211ull;
    return hash;
}

void checkLength(const ChemicalSystem& system, const Vector& n)
{
    if(static_cast<Index>(n.size()) != system.numSpecies())
        throw InputError("species amount vector has " + std::to_string(n.size()) +
            " entries, expected " + std::to_string(system.numSpecies()));
}

} // namespace

auto phaseKindFromString(const std::string& text) -> PhaseKind
{
    if(text == "aqueous") return PhaseKind::Aqueous;
    if(text == "gaseous" || text == "gas") return PhaseKind::Gaseous;
    if(text == "mineral") return PhaseKind::Mineral;
    throw InputError("unknown phase kind '" + text + "'");
}

auto toString(PhaseKind kind) -> std::string
{
    switch(kind)
    {
        case PhaseKind::Aqueous: return "aqueous";
        case PhaseKind::Gaseous: return "gaseous";
        case PhaseKind::Mineral: return "mineral";
    }
    return "";
}

auto ChemicalSystem::indexOfSpecies(const std::string& name) const -> std::optional<Index>
{
    for(Index i = 0; i < m_species.size(); ++i)
        if(m_species[i].name == name) return i;
    return std::nullopt;
}

auto ChemicalSystem::indexOfElement(const std::string& name) const -> std::optional<Index>
{
    for(Index j = 0; j < m_elements.size(); ++j)
        if(m_elements[j] == name) return j;
    return std::nullopt;
}

auto ChemicalSystem::indexOfPhase(const std::string& name) const -> std::optional<Index>
{
    for(Index k = 0; k < m_phases.size(); ++k)
        if(m_phases[k].name == name) return k;
    return std::nullopt;
}

auto buildSystem(std::vector<std::string> elementLabels,
    std::vector<SpeciesDefinition> speciesDefs,
    std::vector<PhaseDefinition> phaseDefs) -> ChemicalSystem
{
    if(elementLabels.empty() || speciesDefs.empty())
        throw InputError("chemical system needs at least one element and one species");

    {
        std::set<std::string> seen;
        for(const auto& e : elementLabels)
            if(!seen.insert(e).second)
                throw InputError("duplicate element label '" + e + "'");
    }

    // Charge goes last.
    auto charge = std::find(elementLabels.begin(), elementLabels.end(), chargeLabel);
    if(charge != elementLabels.end())
        std::rotate(charge, charge + 1, elementLabels.end());

    ChemicalSystem system;
    system.m_elements = elementLabels;
    if(charge != elementLabels.end())
        system.m_chargeRow = elementLabels.size() - 1;

    for(const auto& def : phaseDefs)
    {
        if(system.indexOfPhase(def.name))
            throw InputError("duplicate phase name '" + def.name + "'");
        Phase phase;
        phase.name = def.name;
        phase.kind = def.kind;
        system.m_phases.push_back(phase);
    }

    const auto E = elementLabels.size();
    const auto N = speciesDefs.size();
    system.m_formulaMatrix = Matrix::Zero(E, N);

    for(Index i = 0; i < N; ++i)
    {
        const auto& def = speciesDefs[i];
        if(system.indexOfSpecies(def.name))
            throw InputError("duplicate species name '" + def.name + "'");
        auto phase = system.indexOfPhase(def.phase);
        if(!phase)
            throw InputError("species '" + def.name + "' refers to undeclared phase '" + def.phase + "'");
        if(def.molarVolume < 0.0)
            throw InputError("species '" + def.name + "' has a negative molar volume");

        Species s;
        s.name = def.name;
        s.formula = def.formula;
        s.phase = *phase;
        s.molarVolume = def.molarVolume;
        for(const auto& [element, coeff] : def.formula)
        {
            auto row = system.indexOfElement(element);
            if(!row)
                throw InputError("species '" + def.name + "' uses undeclared element '" + element + "'");
            system.m_formulaMatrix(*row, i) = coeff;
            if(element == chargeLabel) s.charge = coeff;
        }
        system.m_species.push_back(s);
        system.m_phases[*phase].species.push_back(i);
    }

    for(Index k = 0; k < system.m_phases.size(); ++k)
    {
        auto& phase = system.m_phases[k];
        const auto& def = phaseDefs[k];
        if(phase.species.empty())
            throw InputError("phase '" + phase.name + "' contains no species");
        if(phase.kind == PhaseKind::Mineral && phase.species.size() != 1)
            throw InputError("mineral phase '" + phase.name + "' must contain exactly one species");
        if(phase.kind == PhaseKind::Aqueous)
        {
            auto w = system.indexOfSpecies(def.solvent);
            if(def.solvent.empty() || !w || system.m_species[*w].phase != k)
                throw InputError("aqueous phase '" + phase.name + "' needs a solvent species belonging to it");
            phase.solvent = *w;
        }
    }

    system.m_isFluid.assign(N, false);
    for(Index i = 0; i < N; ++i)
    {
        const bool fluid = system.m_phases[system.m_species[i].phase].kind != PhaseKind::Mineral;
        system.m_isFluid[i] = fluid;
        (fluid ? system.m_fluid : system.m_solid).push_back(i);
    }

    // Rank check on the element rows: pivoted QR of Aᵀ, threshold relative to the largest pivot.
    const Matrix& A = system.m_formulaMatrix;
    Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
    qr.setThreshold(1e-10);
    const auto rank = static_cast<Index>(qr.rank());
    if(rank < E)
    {
        std::ostringstream msg;
        msg << "formula matrix is rank deficient (rank " << rank << " < " << E
            << "); dependent element rows:";
        const auto& perm = qr.colsPermutation().indices();
        for(Index k = rank; k < E; ++k)
            msg << ' ' << elementLabels[perm[k]];
        throw InputError(msg.str());
    }

    std::uint64_t hash = 14695981039346656037ull;
    for(const auto& e : system.m_elements) hash = fnv1a(hash, e);
    hash = fnv1a(hash, "|");
    for(const auto& s : system.m_species)
        hash = fnv1a(fnv1a(hash, s.name), system.m_phases[s.phase].name);
    hash = fnv1a(hash, "|");
    for(Eigen::Index i = 0; i < A.cols(); ++i)
        for(Eigen::Index j = 0; j < A.rows(); ++j)
            hash = fnv1a(hash, fmt::format("{}", A(j, i)));
    system.m_signature = hash;

    return system;
}

void validateState(const ChemicalSystem& system, const ChemicalState& state)
{
    checkLength(system, state.n);
    if(!(state.T > 0.0)) throw InputError("temperature must be positive");
    if(!(state.P > 0.0)) throw InputError("pressure must be positive");
    if((state.n.array() < 0.0).any()) throw InputError("species amounts must be nonnegative");
}

auto partitionAmounts(const ChemicalSystem& system, const Vector& n) -> PartitionedAmounts
{
    checkLength(system, n);
    const Matrix& A = system.formulaMatrix();
    PartitionedAmounts parts{Vector::Zero(A.rows()), Vector::Zero(A.rows())};
    for(Index i : system.fluidSpecies())
        parts.fluid += A.col(i) * n[i];
    for(Index i : system.solidSpecies())
        parts.solid += A.col(i) * n[i];
    return parts;
}

auto elementAmounts(const ChemicalSystem& system, const Vector& n) -> Vector
{
    auto parts = partitionAmounts(system, n);
    return parts.fluid + parts.solid;
}

auto reactionMatrix(const ChemicalSystem& system) -> Matrix
{
    Eigen::FullPivLU<Matrix> lu(system.formulaMatrix());
    if(static_cast<Index>(lu.rank()) == system.numSpecies())
        return Matrix::Zero(0, system.numSpecies());
    return lu.kernel().transpose();
}

} // namespace smarteq
