#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <smarteq/Common.hpp>

namespace smarteq {

/// Label of the electrical charge pseudo-element.
inline const std::string chargeLabel = "Z";

enum class PhaseKind { Aqueous, Gaseous, Mineral };

auto phaseKindFromString(const std::string& text) -> PhaseKind;
auto toString(PhaseKind kind) -> std::string;

/// Stoichiometry of a species: element label to coefficient.
using Formula = std::map<std::string, double>;

struct SpeciesDefinition
{
    std::string name;
    Formula formula;
    std::string phase;
    /// Molar volume in m³/mol, only used to report mineral volume fractions.
    double molarVolume = 0.0;
};

struct PhaseDefinition
{
    std::string name;
    PhaseKind kind = PhaseKind::Aqueous;
    /// Name of the solvent species; required for aqueous phases.
    std::string solvent;
};

struct Species
{
    std::string name;
    Formula formula;
    Index phase = 0;
    double molarVolume = 0.0;
    /// Coefficient of the charge element, zero if the system has none.
    double charge = 0.0;
};

struct Phase
{
    std::string name;
    PhaseKind kind = PhaseKind::Aqueous;
    std::vector<Index> species;
    std::optional<Index> solvent;
};

/// Immutable description of species, elements, phases and the formula matrix.
class ChemicalSystem
{
public:
    auto numElements() const -> Index { return m_elements.size(); }
    auto numSpecies() const -> Index { return m_species.size(); }
    auto numPhases() const -> Index { return m_phases.size(); }

    auto elements() const -> const std::vector<std::string>& { return m_elements; }
    auto species() const -> const std::vector<Species>& { return m_species; }
    auto species(Index i) const -> const Species& { return m_species[i]; }
    auto phases() const -> const std::vector<Phase>& { return m_phases; }
    auto phase(Index i) const -> const Phase& { return m_phases[i]; }

    /// The E×N formula matrix, A(j, i) being the coefficient of element j in species i.
    auto formulaMatrix() const -> const Matrix& { return m_formulaMatrix; }

    /// Columns of species in aqueous and gaseous phases.
    auto fluidSpecies() const -> const std::vector<Index>& { return m_fluid; }
    /// Columns of species in mineral phases.
    auto solidSpecies() const -> const std::vector<Index>& { return m_solid; }

    auto indexOfSpecies(const std::string& name) const -> std::optional<Index>;
    auto indexOfElement(const std::string& name) const -> std::optional<Index>;
    auto indexOfPhase(const std::string& name) const -> std::optional<Index>;

    /// Row of the charge element, if the system declares one.
    auto chargeRow() const -> std::optional<Index> { return m_chargeRow; }

    auto isFluid(Index species) const -> bool { return m_isFluid[species]; }

    /// Hash of element labels and species names, used to guard persisted record stores.
    auto signature() const -> std::uint64_t { return m_signature; }

private:
    friend auto buildSystem(std::vector<std::string>, std::vector<SpeciesDefinition>,
        std::vector<PhaseDefinition>) -> ChemicalSystem;

    std::vector<std::string> m_elements;
    std::vector<Species> m_species;
    std::vector<Phase> m_phases;
    Matrix m_formulaMatrix;
    std::vector<Index> m_fluid;
    std::vector<Index> m_solid;
    std::vector<bool> m_isFluid;
    std::optional<Index> m_chargeRow;
    std::uint64_t m_signature = 0;
};

/// Assemble a chemical system column by column from its definitions.
///
/// The charge element, when declared, is moved to the last row. Species keep
/// their input order as columns. Throws InputError on duplicate names,
/// undeclared elements or phases, an empty system, or a rank-deficient
/// formula matrix (the message names the dependent element rows).
auto buildSystem(std::vector<std::string> elementLabels,
    std::vector<SpeciesDefinition> species,
    std::vector<PhaseDefinition> phases) -> ChemicalSystem;

/// Temperature (K), pressure (Pa) and species amounts (mol).
struct ChemicalState
{
    double T = 298.15;
    double P = 1.0e5;
    Vector n;
};

/// Throws InputError unless T > 0, P > 0, n ≥ 0 and n has N entries.
void validateState(const ChemicalSystem& system, const ChemicalState& state);

/// Element amounts b = A n.
///
/// Summed as fluid part plus solid part, so it is bitwise identical to the sum
/// of the two vectors returned by partitionAmounts.
auto elementAmounts(const ChemicalSystem& system, const Vector& n) -> Vector;

struct PartitionedAmounts
{
    Vector fluid;
    Vector solid;
};

/// Element amounts of the fluid (aqueous + gaseous) and solid (mineral) partitions.
auto partitionAmounts(const ChemicalSystem& system, const Vector& n) -> PartitionedAmounts;

/// Basis of independent reactions: an (N − E)×N matrix whose rows span the null space of A.
auto reactionMatrix(const ChemicalSystem& system) -> Matrix;

} // namespace smarteq
