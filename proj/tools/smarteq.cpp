// smarteq: single-point equilibrium, column simulation and smart-vs-conventional benchmark.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.

#include <smarteq/Simulation.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace smarteq;
namespace fs = std::filesystem;

namespace {

struct Overrides
{
    std::string config;
    std::string out = ".";
    std::string solver;
    std::string search;
    std::optional<double> epsRel;
    std::optional<double> epsAbs;
    std::string test;
    std::string store;
    bool parallel = false;
    std::string snapshotTimes;
};

void addRunOptions(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "Configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--solver", o.solver, "Equilibrium solver")->check(CLI::IsMember({"smart", "conventional"}));
    cmd->add_option("--search", o.search, "Record search backend")->check(CLI::IsMember({"naive", "kdtree"}));
    cmd->add_option("--eps-rel", o.epsRel, "Relative acceptance tolerance")->check(CLI::NonNegativeNumber);
    cmd->add_option("--eps-abs", o.epsAbs, "Absolute acceptance tolerance")->check(CLI::NonNegativeNumber);
    cmd->add_option("--test", o.test, "Acceptance test")->check(CLI::IsMember({"mu", "activity", "amounts"}));
    cmd->add_option("--store", o.store, "Record store file, loaded if present and saved after the run");
    cmd->add_flag("--parallel", o.parallel, "Solve cells concurrently (nondeterministic learning order)");
    cmd->add_option("--snapshot-times", o.snapshotTimes, "Comma-separated snapshot times, e.g. 10min,1h,20h");
}

auto applyOverrides(SimulationConfig& c, const Overrides& o) -> void
{
    if(!o.solver.empty())
        c.solver = solverChoiceFromString(o.solver);
    if(!o.search.empty())
        c.smart.backend = searchBackendFromString(o.search);
    if(o.epsRel)
        c.smart.tolerances.epsRel = *o.epsRel;
    if(o.epsAbs)
        c.smart.tolerances.epsAbs = *o.epsAbs;
    if(!o.test.empty())
        c.smart.tolerances.test = acceptanceTestFromString(o.test);
    if(o.parallel)
        c.parallel = true;
    if(!o.snapshotTimes.empty())
    {
        c.snapshotTimes.clear();
        for(const auto& word : splitWords(o.snapshotTimes))
            c.snapshotTimes.push_back(parseDuration(word));
    }
    validateTolerances(c.smart.tolerances);
}

/// Writes profiles and stats.csv as the run progresses.
class FileObserver : public SimulationObserver
{
public:
    explicit FileObserver(fs::path dir) : m_dir(std::move(dir))
    {
        m_stats.open(m_dir / "stats.csv", std::ios::trunc);
        if(!m_stats)
            throw InputError("cannot write to output directory '" + m_dir.string() + "'");
        writeStatsHeader(m_stats);
        m_stats.flush();
    }

    void onSnapshot(const SimulationConfig& config, const Snapshot& snapshot) override
    {
        std::ofstream f(m_dir / profileFileName(snapshot.time), std::ios::trunc);
        writeProfileCsv(f, config, snapshot);
    }

    void onStep(const SimulationConfig&, const StepStats& stats) override
    {
        writeStatsRow(m_stats, stats);
        m_stats.flush();
    }

private:
    fs::path m_dir;
    std::ofstream m_stats;
};

auto prepareOutput(const std::string& dir) -> fs::path
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if(ec)
        throw InputError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

auto runColumn(const Overrides& o, bool compare) -> int
{
    auto config = loadSimulationConfig(Config::load(o.config));
    applyOverrides(config, o);
    if(compare)
        config.solver = SolverChoice::Smart;
    const auto dir = prepareOutput(o.out);

    std::optional<RecordStore> store;
    if(config.solver == SolverChoice::Smart)
    {
        if(!o.store.empty() && fs::exists(o.store))
            store.emplace(loadStore(o.store, config.system, config.smart.backend, config.smart.weights,
                config.smart.rebuildInterval));
        else
            store.emplace(config.system, config.smart.backend, config.smart.weights,
                config.smart.rebuildInterval);
    }

    FileObserver observer(dir);
    RunOptions run;
    run.compare = compare;
    run.store = store ? &*store : nullptr;
    run.observer = &observer;
    const auto output = runSimulation(config, run);

    if(store && !o.store.empty())
        saveStore(*store, o.store);

    const auto calls = output.calls;
    fmt::print("{} steps, {} equilibrium calls: {} learned, {} predicted ({} records in store)\n",
        output.steps.size(), calls, output.learned, output.predicted, store ? store->size() : 0);
    if(compare)
    {
        const auto s = summarizeBench(output);
        fmt::print("stabilized speedup {:.2f}, peak speedup {:.2f}, learnings {}, prediction fraction {:.4f}\n",
            s.stabilizedSpeedup, s.peakSpeedup, s.learned, s.predictionFraction);
    }
    return 0;
}

auto runEquilibrate(const std::string& configPath, const std::string& outDir) -> int
{
    const auto config = Config::load(configPath);
    const auto system = loadSystem(config);
    const auto models = loadThermoModels(config, system);
    const auto options = loadEquilibriumOptions(config);
    const auto problem = loadProblem(config, system);

    const auto solution = equilibrate(system, models, problem, options);
    const auto props = chemicalPotentials(system, models, {problem.T, problem.P, solution.n});

    fmt::print("T = {} K, P = {} Pa\n", problem.T, problem.P);
    fmt::print("{:<14} {:>16} {:>16} {:>16}\n", "species", "n [mol]", "mu [J/mol]", "z [J/mol]");
    for(Index i = 0; i < system.numSpecies(); ++i)
        fmt::print("{:<14} {:>16.9e} {:>16.9e} {:>16.9e}\n", system.species(i).name, solution.n[i],
            props.mu[i], solution.z[i]);
    fmt::print("{:<14} {:>16}\n", "element", "y [J/mol]");
    for(Index j = 0; j < system.numElements(); ++j)
        fmt::print("{:<14} {:>16.9e}\n", system.elements()[j], solution.y[j]);
    fmt::print("iterations {}, converged {}\n", solution.iterations, solution.converged ? "yes" : "no");
    fmt::print("KKT residuals: stationarity {:.3e}, feasibility {:.3e}, complementarity {:.3e}\n",
        solution.residual.stationarity, solution.residual.feasibility, solution.residual.complementarity);

    const auto dir = prepareOutput(outDir);
    std::ofstream csv(dir / "equilibrium.csv", std::ios::trunc);
    if(!csv)
        throw InputError("cannot write equilibrium.csv");
    std::string header = "T,P";
    std::string row = fmt::format("{},{}", problem.T, problem.P);
    for(Index i = 0; i < system.numSpecies(); ++i)
    {
        header += ",n_" + system.species(i).name;
        row += fmt::format(",{}", solution.n[i]);
    }
    for(Index i = 0; i < system.numSpecies(); ++i)
    {
        header += ",mu_" + system.species(i).name;
        row += fmt::format(",{}", props.mu[i]);
    }
    for(Index j = 0; j < system.numElements(); ++j)
    {
        header += ",y_" + system.elements()[j];
        row += fmt::format(",{}", solution.y[j]);
    }
    for(Index i = 0; i < system.numSpecies(); ++i)
    {
        header += ",z_" + system.species(i).name;
        row += fmt::format(",{}", solution.z[i]);
    }
    header += ",iterations,converged,stationarity,feasibility,complementarity";
    row += fmt::format(",{},{},{},{},{}", solution.iterations, solution.converged ? 1 : 0,
        solution.residual.stationarity, solution.residual.feasibility, solution.residual.complementarity);
    csv << header << '\n' << row << '\n';

    if(!solution.converged)
    {
        fmt::print(std::cerr, "error: equilibrium did not converge\n");
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Smart chemical equilibrium: Gibbs energy minimization with on-demand learning"};
    app.require_subcommand(1);

    std::string eqConfig, eqOut = ".";
    auto* eq = app.add_subcommand("equilibrate", "Equilibrate the [problem] of a config file");
    eq->add_option("--config", eqConfig, "Configuration file")->required()->check(CLI::ExistingFile);
    eq->add_option("--out", eqOut, "Output directory")->capture_default_str();

    Overrides sim, bench;
    addRunOptions(app.add_subcommand("simulate", "Run the reactive transport column"), sim);
    addRunOptions(app.add_subcommand("bench", "Run smart and time the conventional solver on the same inputs"),
        bench);

    try
    {
        app.parse(argc, argv);
    }
    catch(const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch(const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch(const CLI::ParseError& e)
    {
        app.exit(e);
        return 1;
    }

    try
    {
        if(app.got_subcommand("equilibrate"))
            return runEquilibrate(eqConfig, eqOut);
        if(app.got_subcommand("simulate"))
            return runColumn(sim, false);
        return runColumn(bench, true);
    }
    catch(const InputError& e)
    {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return 1;
    }
    catch(const NumericalError& e)
    {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return 2;
    }
    catch(const std::exception& e)
    {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return 2;
    }
}
