#include <smarteq/Simulation.hpp>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ostream>

namespace smarteq {

namespace {

using Clock = std::chrono::steady_clock;

auto secondsSince(Clock::time_point start) -> double
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

class FormulaParser
{
public:
    explicit FormulaParser(std::string_view text) : m_text(text) {}

    auto parse() -> Formula
    {
        auto f = group();
        if(m_pos != m_text.size())
            fail();
        if(f.empty())
            fail();
        return f;
    }

private:
    auto group() -> Formula
    {
        Formula f;
        while(m_pos < m_text.size() && m_text[m_pos] != ')')
        {
            Formula part;
            if(m_text[m_pos] == '(')
            {
                ++m_pos;
                part = group();
                if(m_pos >= m_text.size() || m_text[m_pos] != ')')
                    fail();
                ++m_pos;
            }
            else if(std::isupper(static_cast<unsigned char>(m_text[m_pos])))
            {
                std::string symbol(1, m_text[m_pos++]);
                while(m_pos < m_text.size() && std::islower(static_cast<unsigned char>(m_text[m_pos])))
                    symbol += m_text[m_pos++];
                part[symbol] = 1.0;
            }
            else
                fail();
            const double count = multiplier();
            for(const auto& [e, c] : part)
                f[e] += c * count;
        }
        return f;
    }

    auto multiplier() -> double
    {
        const auto start = m_pos;
        while(m_pos < m_text.size()
            && (std::isdigit(static_cast<unsigned char>(m_text[m_pos])) || m_text[m_pos] == '.'))
            ++m_pos;
        return m_pos == start ? 1.0 : parseNumber(m_text.substr(start, m_pos - start));
    }

    [[noreturn]] void fail() const
    {
        throw InputError("malformed chemical formula '" + std::string(m_text) + "'");
    }

    std::string_view m_text;
    std::size_t m_pos = 0;
};

auto loadRecipe(const Config& config, const std::string& name) -> Recipe
{
    const auto& s = config.requireSection("recipe", name);
    Recipe r;
    r.name = name;
    r.waterKg = 0.0;
    bool hasWater = false;
    for(const auto& e : s.entries)
    {
        const double value = parseNumber(e.value);
        if(!(value >= 0.0))
            throw InputError(s.label() + " line " + std::to_string(e.line) + ": amounts must be nonnegative");
        if(e.key == "water")
        {
            r.waterKg = value;
            hasWater = true;
        }
        else
            r.compounds.emplace_back(e.key, value);
    }
    if(!hasWater || !(r.waterKg > 0.0))
        throw InputError(s.label() + ": needs a positive 'water' mass in kg");
    return r;
}

auto loadRock(const Config& config) -> RockComposition
{
    const auto& s = config.requireSection("rock");
    RockComposition rock;
    rock.porosity = s.requireNumber("porosity");
    if(!(rock.porosity > 0.0 && rock.porosity <= 1.0))
        throw InputError("[rock]: porosity must be in (0, 1]");
    double total = 0.0;
    for(const auto& e : s.entries)
    {
        if(e.key == "porosity")
            continue;
        const double fraction = parseNumber(e.value);
        if(!(fraction >= 0.0))
            throw InputError("[rock]: volume fractions must be nonnegative");
        rock.minerals.emplace_back(e.key, fraction);
        total += fraction;
    }
    if(rock.porosity < 1.0 && std::abs(total - 1.0) > 1e-9)
        throw InputError("[rock]: mineral volume fractions must sum to 1");
    return rock;
}

auto formatTime(double seconds) -> std::string
{
    if(seconds == std::floor(seconds) && std::abs(seconds) < 1e15)
        return fmt::format("{}", static_cast<long long>(seconds));
    return fmt::format("{}", seconds);
}

} // namespace

auto parseChemicalFormula(std::string_view formula) -> Formula
{
    return FormulaParser(formula).parse();
}

auto recipeElementAmounts(const ChemicalSystem& system, const Recipe& recipe, double scale) -> Vector
{
    Vector b = Vector::Zero(system.numElements());
    auto add = [&](const std::string& compound, double moles) {
        for(const auto& [element, count] : parseChemicalFormula(compound))
        {
            const auto j = system.indexOfElement(element);
            if(!j)
                throw InputError("recipe '" + recipe.name + "': element " + element + " of "
                    + compound + " is not part of the system");
            b[*j] += scale * moles * count;
        }
    };
    add("H2O", recipe.waterKg / waterMolarMass);
    for(const auto& [compound, moles] : recipe.compounds)
        add(compound, moles);
    return b;
}

auto rockElementAmounts(const ChemicalSystem& system, const RockComposition& rock) -> Vector
{
    Vector b = Vector::Zero(system.numElements());
    const Matrix& A = system.formulaMatrix();
    for(const auto& [name, fraction] : rock.minerals)
    {
        const auto i = system.indexOfSpecies(name);
        if(!i || system.isFluid(*i))
            throw InputError("[rock]: '" + name + "' is not a mineral species");
        const double vm = system.species(*i).molarVolume;
        if(!(vm > 0.0))
            throw InputError("[rock]: mineral '" + name + "' has no molar volume");
        b += A.col(*i) * ((1.0 - rock.porosity) * fraction / vm);
    }
    return b;
}

auto loadProblem(const Config& config, const ChemicalSystem& system) -> EquilibriumProblem
{
    const auto& s = config.requireSection("problem");
    s.allowKeys({"temperature", "pressure", "elements", "species", "recipe", "scale"});
    EquilibriumProblem p;
    p.T = s.requireNumber("temperature");
    p.P = s.requireNumber("pressure");
    if(!(p.T > 0.0) || !(p.P > 0.0))
        throw InputError("[problem]: temperature and pressure must be positive");
    const int given = (s.find("elements") != nullptr) + (s.find("species") != nullptr)
        + (s.find("recipe") != nullptr);
    if(given != 1)
        throw InputError("[problem]: give exactly one of elements, species or recipe");
    if(s.find("scale") && !s.find("recipe"))
        throw InputError("[problem]: scale only applies to a recipe");

    p.b = Vector::Zero(system.numElements());
    if(auto text = s.text("elements"))
    {
        for(const auto& [label, amount] : parseFormula(*text))
        {
            const auto j = system.indexOfElement(label);
            if(!j)
                throw InputError("[problem]: unknown element '" + label + "'");
            p.b[*j] = amount;
        }
    }
    else if(auto text = s.text("species"))
    {
        Vector n = Vector::Zero(system.numSpecies());
        for(const auto& [name, amount] : parseFormula(*text))
        {
            const auto i = system.indexOfSpecies(name);
            if(!i)
                throw InputError("[problem]: unknown species '" + name + "'");
            n[*i] = amount;
        }
        p.b = system.formulaMatrix() * n;
    }
    else
        p.b = recipeElementAmounts(system, loadRecipe(config, s.requireText("recipe")), s.number("scale", 1.0));
    return p;
}

auto SimulationConfig::fluidScale(const Recipe& recipe) const -> double
{
    return rock.porosity * 1000.0 / recipe.waterKg;
}

auto loadSimulationConfig(const Config& config) -> SimulationConfig
{
    SimulationConfig c;
    config.allowSections({"elements", "thermo", "phase", "species", "solver", "smart",
        "simulation", "recipe", "rock", "problem"});
    c.system = loadSystem(config);
    c.models = loadThermoModels(config, c.system);
    c.equilibrium = loadEquilibriumOptions(config);
    c.smart = loadSmartOptions(config);

    const auto& s = config.requireSection("simulation");
    s.allowKeys({"cells", "length", "velocity", "diffusion", "dt", "steps", "temperature", "pressure",
        "boundary", "snapshots", "solver", "parallel"});
    const long cells = s.integer("cells", 100);
    if(cells < 2)
        throw InputError("[simulation]: cells must be at least 2");
    c.grid.ncells = static_cast<Index>(cells);
    c.grid.length = s.number("length", 1.0);
    validateGrid(c.grid);
    c.transport.v = s.requireNumber("velocity");
    c.transport.D = s.number("diffusion", 0.0);
    c.transport.dt = parseDuration(s.requireText("dt"));
    const long steps = s.integer("steps", 0);
    if(steps < 0)
        throw InputError("[simulation]: steps must be nonnegative");
    c.transport.nsteps = static_cast<Index>(steps);
    validateTransportParams(c.transport);
    c.T = s.requireNumber("temperature");
    c.P = s.requireNumber("pressure");
    if(!(c.T > 0.0) || !(c.P > 0.0))
        throw InputError("[simulation]: temperature and pressure must be positive");
    const auto boundary = s.text("boundary").value_or("open");
    if(boundary != "open" && boundary != "closed")
        throw InputError("[simulation]: boundary must be open or closed");
    c.closed = boundary == "closed";
    if(auto text = s.text("snapshots"))
        for(const auto& word : splitWords(*text))
        {
            const double t = parseDuration(word);
            if(!(t >= 0.0))
                throw InputError("[simulation]: snapshot times must be nonnegative");
            c.snapshotTimes.push_back(t);
        }
    c.solver = solverChoiceFromString(s.text("solver").value_or("smart"));
    c.parallel = s.boolean("parallel", false);

    c.injection = loadRecipe(config, "injection");
    c.resident = loadRecipe(config, "resident");
    c.rock = loadRock(config);
    for(const auto* sec : config.sectionsOf("recipe"))
        if(sec->name != "injection" && sec->name != "resident")
            throw InputError(sec->label() + ": unknown recipe (expected injection or resident)");
    return c;
}

auto equilibrateRecipe(const SimulationConfig& config, const Recipe& recipe,
    const RockComposition* rock) -> ChemicalState
{
    Vector b = recipeElementAmounts(config.system, recipe, config.fluidScale(recipe));
    if(rock)
        b += rockElementAmounts(config.system, *rock);
    const auto solution = equilibrate(config.system, config.models, {config.T, config.P, b},
        config.equilibrium);
    if(!solution.converged)
        throw NumericalError("equilibrium of recipe '" + recipe.name + "' did not converge");
    return {config.T, config.P, solution.n};
}

auto runSimulation(const SimulationConfig& config, const RunOptions& options) -> SimulationOutput
{
    const auto& system = config.system;
    validateGrid(config.grid);
    validateTransportParams(config.transport);
    validateTolerances(config.smart.tolerances);
    if(options.compare && config.solver != SolverChoice::Smart)
        throw InputError("compare mode needs the smart solver");

    SimulationOutput out;
    out.inletState = equilibrateRecipe(config, config.injection, nullptr);
    out.inlet = partitionAmounts(system, out.inletState.n).fluid;
    const auto initial = equilibrateRecipe(config, config.resident, &config.rock);

    CellField field = uniformField(system, initial, config.grid.ncells);
    out.initial = field;

    const Index nsteps = config.transport.nsteps;
    const double dt = config.transport.dt;
    std::vector<Index> snapshotSteps{0};
    for(double t : config.snapshotTimes)
    {
        const auto k = static_cast<Index>(std::llround(t / dt));
        if(k <= nsteps)
            snapshotSteps.push_back(k);
    }
    std::sort(snapshotSteps.begin(), snapshotSteps.end());
    snapshotSteps.erase(std::unique(snapshotSteps.begin(), snapshotSteps.end()), snapshotSteps.end());
    auto nextSnapshot = snapshotSteps.begin();

    auto emit = [&](Index step, const std::vector<ResultKind>& kinds) {
        if(nextSnapshot == snapshotSteps.end() || *nextSnapshot != step)
            return;
        ++nextSnapshot;
        Snapshot snap{step, static_cast<double>(step) * dt, field, kinds};
        if(options.observer)
            options.observer->onSnapshot(config, snap);
        out.snapshots.push_back(std::move(snap));
    };
    emit(0, {});

    std::optional<RecordStore> ownStore;
    RecordStore* store = options.store;
    if(config.solver == SolverChoice::Smart && !store)
    {
        ownStore.emplace(system, config.smart.backend, config.smart.weights, config.smart.rebuildInterval);
        store = &*ownStore;
    }

    ReactiveContext ctx;
    ctx.system = &system;
    ctx.models = &config.models;
    ctx.options = config.equilibrium;
    ctx.solver = config.solver;
    ctx.store = store;
    ctx.tolerances = config.smart.tolerances;
    ctx.parallel = config.parallel;

    const BoundaryConditions bc{out.inlet, config.closed};
    const auto chargeRow = system.chargeRow();
    std::vector<ResultKind> kinds(config.grid.ncells, ResultKind::Learned);
    StepStats totals;
    double cumulativeConventional = 0.0;

    for(Index k = 1; k <= nsteps; ++k)
    {
        auto start = Clock::now();
        const Matrix bfTransported = transportStep(field.bf, config.grid, config.transport, bc);
        const double transportSeconds = secondsSince(start);
        for(Index j = 0; j < system.numElements(); ++j)
        {
            if(chargeRow && j == *chargeRow)
                continue;
            if(bfTransported.row(j).minCoeff() < 0.0)
                throw NumericalError("negative fluid amount of " + system.elements()[j]
                    + " after transport in step " + std::to_string(k));
        }

        std::optional<CellField> before;
        if(options.compare)
            before = field;

        ctx.step = k;
        const auto rs = reactiveStep(field, bfTransported, ctx, &kinds);

        StepStats st;
        st.step = k;
        st.time = static_cast<double>(k) * dt;
        st.learned = rs.learned;
        st.predicted = rs.predicted;
        st.clipped = rs.clipped;
        st.transportSeconds = transportSeconds;
        st.equilibriumSeconds = rs.seconds;
        totals.learned += rs.learned;
        totals.predicted += rs.predicted;
        totals.transportSeconds += transportSeconds;
        totals.equilibriumSeconds += rs.seconds;
        st.cumulativeLearned = totals.learned;
        st.cumulativePredicted = totals.predicted;
        st.cumulativeTransportSeconds = totals.transportSeconds;
        st.cumulativeEquilibriumSeconds = totals.equilibriumSeconds;

        if(options.compare)
        {
            start = Clock::now();
            for(Index c = 0; c < config.grid.ncells; ++c)
            {
                const auto& prev = before->states[c];
                const Vector b = bfTransported.col(c) + before->bs.col(c);
                const auto s = equilibrate(system, config.models, {prev.T, prev.P, b}, prev.n,
                    config.equilibrium);
                if(!s.converged)
                    throw CellFailure("cell " + std::to_string(c) + ", step " + std::to_string(k)
                            + ": conventional replay did not converge",
                        c, k);
            }
            const double seconds = secondsSince(start);
            cumulativeConventional += seconds;
            st.conventionalSeconds = seconds;
            st.cumulativeConventionalSeconds = cumulativeConventional;
            st.speedup = seconds / rs.seconds;
        }

        if(options.observer)
            options.observer->onStep(config, st);
        out.steps.push_back(st);
        emit(k, kinds);
    }

    out.final = std::move(field);
    out.finalKinds = nsteps ? kinds : std::vector<ResultKind>{};
    out.learned = totals.learned;
    out.predicted = totals.predicted;
    out.calls = totals.learned + totals.predicted;
    return out;
}

auto summarizeBench(const SimulationOutput& output) -> BenchSummary
{
    BenchSummary s;
    s.learned = output.learned;
    s.calls = output.calls;
    s.predictionFraction = output.calls ? static_cast<double>(output.predicted) / output.calls : 0.0;

    const auto& steps = output.steps;
    const Index n = steps.size();
    if(n < 2 || !steps.front().speedup)
        return s;
    // The first step carries one-off costs and is left out.
    double peak = 0.0;
    for(Index k = 1; k < n; ++k)
        peak = std::max(peak, *steps[k].speedup);
    s.peakSpeedup = peak;

    const Index quarter = std::max<Index>(1, (n - 1) / 4);
    std::vector<double> tail;
    for(Index k = n - quarter; k < n; ++k)
        tail.push_back(*steps[k].speedup);
    std::sort(tail.begin(), tail.end());
    const Index m = tail.size();
    s.stabilizedSpeedup = m % 2 ? tail[m / 2] : 0.5 * (tail[m / 2 - 1] + tail[m / 2]);
    return s;
}

auto profileFileName(double time) -> std::string
{
    return "profile_" + formatTime(time) + ".csv";
}

void writeProfileCsv(std::ostream& out, const SimulationConfig& config, const Snapshot& snapshot)
{
    const auto& system = config.system;
    const Index N = system.numSpecies();

    std::optional<Index> solvent;
    for(const auto& phase : system.phases())
        if(phase.kind == PhaseKind::Aqueous && phase.solvent)
            solvent = phase.solvent;
    std::vector<Index> solutes, minerals;
    for(Index i = 0; i < N; ++i)
    {
        const auto kind = system.phase(system.species(i).phase).kind;
        if(kind == PhaseKind::Aqueous && solvent && i != *solvent)
            solutes.push_back(i);
        else if(kind == PhaseKind::Mineral)
            minerals.push_back(i);
    }

    fmt::memory_buffer buf;
    auto it = std::back_inserter(buf);
    fmt::format_to(it, "cell,x,kind");
    for(Index i = 0; i < N; ++i)
        fmt::format_to(it, ",n_{}", system.species(i).name);
    for(Index i : solutes)
        fmt::format_to(it, ",m_{}", system.species(i).name);
    for(Index i : minerals)
        fmt::format_to(it, ",vf_{}", system.species(i).name);
    fmt::format_to(it, "\n");

    for(Index c = 0; c < snapshot.field.ncells(); ++c)
    {
        const Vector& n = snapshot.field.states[c].n;
        const char* kind = snapshot.kinds.empty() ? "initial"
            : snapshot.kinds[c] == ResultKind::Predicted ? "predicted" : "learned";
        fmt::format_to(it, "{},{},{}", c, config.grid.center(c), kind);
        for(Index i = 0; i < N; ++i)
            fmt::format_to(it, ",{}", n[i]);
        const double kgWater = solvent ? n[*solvent] * waterMolarMass : 0.0;
        for(Index i : solutes)
            fmt::format_to(it, ",{}", kgWater > 0.0 ? n[i] / kgWater : 0.0);
        for(Index i : minerals)
            fmt::format_to(it, ",{}", n[i] * system.species(i).molarVolume);
        fmt::format_to(it, "\n");
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void writeStatsHeader(std::ostream& out)
{
    out << "step,time_s,learnings,predictions,clipped,cpu_transport_s,cpu_equilibrium_s,"
           "cum_learnings,cum_predictions,cum_cpu_transport_s,cum_cpu_equilibrium_s,"
           "cpu_conventional_s,cum_cpu_conventional_s,speedup\n";
}

void writeStatsRow(std::ostream& out, const StepStats& s)
{
    auto opt = [](const std::optional<double>& x) { return x ? fmt::format("{}", *x) : std::string(); };
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", s.step, formatTime(s.time),
        s.learned, s.predicted, s.clipped, s.transportSeconds, s.equilibriumSeconds,
        s.cumulativeLearned, s.cumulativePredicted, s.cumulativeTransportSeconds,
        s.cumulativeEquilibriumSeconds, opt(s.conventionalSeconds),
        opt(s.cumulativeConventionalSeconds), opt(s.speedup));
}

} // namespace smarteq
