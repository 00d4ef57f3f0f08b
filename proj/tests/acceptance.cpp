// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "TestSystems.hpp"

#include <smarteq/Simulation.hpp>

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace smarteq;
using namespace smarteq::testing;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

auto tightOptions() -> EquilibriumOptions
{
    EquilibriumOptions o;
    o.tolerance = 1e-12;
    o.maxIterations = 400;
    return o;
}

auto solve(const ChemicalSystem& system, const ThermoModels& models, double T, double P,
    const Vector& b, const EquilibriumOptions& options) -> EquilibriumSolution
{
    auto sol = equilibrate(system, models, {T, P, b}, options);
    if(!sol.converged)
        throw NumericalError("equilibrium did not converge");
    return sol;
}

auto makeRecord(const ChemicalSystem& system, const ThermoModels& models, double T, double P,
    const Vector& b, const EquilibriumOptions& options) -> EquilibriumRecord
{
    RecordStore store(system);
    Tolerances tol;
    learn(store, system, models, T, P, b, tol, options);
    return store.record(0);
}

auto deskState(const SimulationConfig& cfg, const Recipe& recipe) -> ChemicalState
{
    return equilibrateRecipe(cfg, recipe, &cfg.rock);
}

// Equilibria of every oracle system against a brute-force minimization of G.
auto oracleEquivalence() -> Outcome
{
    double worst = 0.0;
    std::string where;
    Index count = 0;
    for(const auto& ts : oracleSystems())
    {
        if(ts.nu.rows() > 2)
            continue;
        const auto sol = solve(ts.system, ts.models, ts.T, ts.P, ts.b, {});
        const Vector ref = bruteForceMinimum(ts);
        const double dev = (sol.n - ref).lpNorm<Eigen::Infinity>();
        if(dev >= worst)
        {
            worst = dev;
            where = ts.name;
        }
        ++count;
    }
    return {count >= 5 && worst <= 1e-5,
        fmt::format("{} systems, max |n - n_scan| = {:.2e} mol ({}), tol 1e-5", count, worst, where)};
}

struct SensCase
{
    std::string name;
    const ChemicalSystem* system;
    const ThermoModels* models;
    double T, P;
    Vector b;
};

// Analytic sensitivities against central differences of re-solved equilibria.
auto sensitivityCheck() -> Outcome
{
    const auto systems = oracleSystems();
    std::vector<SensCase> cases;
    for(const auto& ts : systems)
        cases.push_back({ts.name, &ts.system, &ts.models, ts.T, ts.P, ts.b});

    const auto options = tightOptions();
    double worst = 0.0;
    std::string where;
    Index compared = 0;
    bool unstableSeen = false;

    for(const auto& c : cases)
    {
        const auto sol = solve(*c.system, *c.models, c.T, c.P, c.b, options);
        const auto sens = sensitivities(*c.system, *c.models, c.T, c.P, sol, options);
        const auto stable = stableSpecies(*c.system, sol, c.T, options);
        unstableSeen |= std::find(stable.begin(), stable.end(), false) != stable.end();

        auto compare = [&](const Vector& analytic, const Vector& fd, const std::string& what) {
            for(Index i = 0; i < static_cast<Index>(analytic.size()); ++i)
            {
                const double scale = std::max(std::abs(analytic[i]), std::abs(fd[i]));
                if(scale <= 1e-8)
                    continue;
                const double rel = std::abs(analytic[i] - fd[i]) / scale;
                ++compared;
                if(rel > worst)
                {
                    worst = rel;
                    where = c.name + " " + what + " " + c.system->species(i).name;
                }
            }
        };

        // Central differences over a ladder of steps h_k = h·10^-k. Each rung is
        // Richardson-extrapolated from h_k and h_k/2; per entry the rung whose two
        // raw differences agree best is kept, which balances truncation against
        // round-off in the re-solved amounts.
        auto central = [&](const std::function<EquilibriumProblem(double)>& at, double h) -> Vector {
            auto diff = [&](double step) -> Vector {
                const auto plus = equilibrate(*c.system, *c.models, at(step), sol.n, options);
                const auto minus = equilibrate(*c.system, *c.models, at(-step), sol.n, options);
                if(!plus.converged || !minus.converged)
                    throw NumericalError("finite-difference solve did not converge");
                return (plus.n - minus.n) / (2.0 * step);
            };
            const Index N = c.system->numSpecies();
            Vector best = Vector::Zero(N);
            Vector bestErr = Vector::Constant(N, std::numeric_limits<double>::infinity());
            for(int k = 0; k < 5; ++k, h *= 0.1)
            {
                const Vector d1 = diff(h), d2 = diff(0.5 * h);
                for(Index i = 0; i < N; ++i)
                {
                    const double err = std::abs(d1[i] - d2[i]);
                    if(err < bestErr[i])
                    {
                        bestErr[i] = err;
                        best[i] = (4.0 * d2[i] - d1[i]) / 3.0;
                    }
                }
            }
            return best;
        };

        const double s = c.b.lpNorm<Eigen::Infinity>();
        const double hT = 1e-3 * c.T;
        compare(sens.dn_dT, central([&](double d) { return EquilibriumProblem{c.T + d, c.P, c.b}; }, hT), "dn/dT");
        const double hP = 1e-3 * c.P;
        compare(sens.dn_dP, central([&](double d) { return EquilibriumProblem{c.T, c.P + d, c.b}; }, hP), "dn/dP");
        for(Index j = 0; j < c.system->numElements(); ++j)
        {
            const double h = 1e-3 * std::max(std::abs(c.b[j]), 1e-3 * s);
            auto at = [&](double d) {
                Vector b = c.b;
                b[j] += d;
                return EquilibriumProblem{c.T, c.P, b};
            };
            compare(sens.dn_db.col(j), central(at, h), "dn/db_" + c.system->elements()[j]);
        }
    }
    return {worst <= 1e-4 && unstableSeen && cases.size() >= 3,
        fmt::format("{} systems, {} entries, max rel error {:.2e} ({}), tol 1e-4", cases.size(),
            compared, worst, where)};
}

// Random unclipped predictions around desk records conserve mass.
auto predictionMassBalance() -> Outcome
{
    const auto cfg = deskConfig();
    const auto& A = cfg.system.formulaMatrix();
    const auto inj = deskState(cfg, cfg.injection);
    const auto res = deskState(cfg, cfg.resident);
    const Vector bInj = A * inj.n;
    const Vector bRes = A * res.n;

    std::mt19937_64 rng(20241);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);

    std::vector<EquilibriumRecord> records;
    for(double lambda : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0})
    {
        const Vector b = lambda * bInj + (1.0 - lambda) * bRes;
        records.push_back(makeRecord(cfg.system, cfg.models, cfg.T, cfg.P, b, {}));
    }

    Index accepted = 0, clipped = 0;
    double worst = 0.0;
    for(Index k = 0; accepted < 10000 && k < 200000; ++k)
    {
        const auto& r = records[k % records.size()];
        // Mixing toward either end member plus independent noise on every element.
        const double scale = std::pow(10.0, -4.0 + 3.0 * unit(rng));
        Vector b = r.b + scale * sym(rng) * (bInj - bRes);
        for(Index j = 0; j < static_cast<Index>(b.size()); ++j)
            b[j] += 1e-9 * sym(rng) * std::max(std::abs(r.b[j]), 1.0);
        const double T = r.T + 10.0 * scale * sym(rng);
        const double P = r.P * (1.0 + 0.1 * scale * sym(rng));
        const auto p = predict(r, T, P, b);
        if(p.clipped)
        {
            ++clipped;
            continue;
        }
        ++accepted;
        const double rel = (A * p.n - b).lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>();
        worst = std::max(worst, rel);
    }
    return {accepted >= 10000 && worst <= 1e-10,
        fmt::format("{} unclipped predictions ({} clipped skipped), max |A n - b| / |b| = {:.2e}, tol 1e-10",
            accepted, clipped, worst)};
}

// A saturated mineral: prediction of a thousandfold addition versus re-equilibration.
auto saturatedMineral() -> Outcome
{
    const auto cfg = deskConfig();
    const auto& A = cfg.system.formulaMatrix();
    const auto state = deskState(cfg, cfg.resident);
    const Index cal = *cfg.system.indexOfSpecies("Calcite");
    const auto record = makeRecord(cfg.system, cfg.models, state.T, state.P, A * state.n, {});
    if(!record.hasSensitivities || record.n[cal] <= 0.0)
        return {false, "calcite not present in the resident state"};

    const Vector b = record.b + 1000.0 * record.n[cal] * A.col(cal);
    const auto p = predict(record, record.T, record.P, b);
    const Vector mu = predictPotentials(record, p.n, record.T, record.P);
    const Tolerances tol;
    const bool muAccepts = accept(record, mu, tol, record.T).accepted;
    const bool amountsRejects = !acceptAmounts(record, p.n, tol).accepted;

    const auto exact = solve(cfg.system, cfg.models, record.T, record.P, b, {});
    double diff = 0.0, scale = 0.0;
    for(Index i : cfg.system.fluidSpecies())
    {
        diff = std::max(diff, std::abs(p.n[i] - exact.n[i]));
        scale = std::max(scale, std::abs(exact.n[i]));
    }
    const double rel = diff / scale;
    return {muAccepts && amountsRejects && !p.clipped && rel <= 1e-8,
        fmt::format("mu test {}, amounts test {}, fluid deviation {:.2e} relative, tol 1e-8",
            muAccepts ? "accepts" : "rejects", amountsRejects ? "rejects" : "accepts", rel)};
}

// Prediction error shrinks quadratically with the distance to the record.
auto quadraticConvergence() -> Outcome
{
    const auto cfg = deskConfig();
    const auto& A = cfg.system.formulaMatrix();
    const auto state = deskState(cfg, cfg.injection);
    const auto options = tightOptions();
    const auto record = makeRecord(cfg.system, cfg.models, state.T, state.P, A * state.n, options);
    const auto base = solve(cfg.system, cfg.models, record.T, record.P, record.b, options);
    const auto stable0 = stableSpecies(cfg.system, base, record.T, options);

    // Along the mixing line toward the resident state, with T and P moving too.
    const auto res = deskState(cfg, cfg.resident);
    const Vector dir = A * res.n - record.b;
    const double dT = 10.0;
    const double dP = 1e6;

    std::vector<double> lh, le;
    bool sameActiveSet = true;
    for(double h : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5})
    {
        const double T = record.T + h * dT;
        const double P = record.P + h * dP;
        const Vector b = record.b + h * dir;
        const auto exact = solve(cfg.system, cfg.models, T, P, b, options);
        sameActiveSet &= stableSpecies(cfg.system, exact, T, options) == stable0;
        const auto p = predict(record, T, P, b);
        const double err = (p.n - exact.n).lpNorm<Eigen::Infinity>();
        lh.push_back(std::log10(h));
        le.push_back(std::log10(err));
    }
    // least-squares slope of log error against log distance
    const double k = static_cast<double>(lh.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for(Index i = 0; i < lh.size(); ++i)
    {
        sx += lh[i];
        sy += le[i];
        sxx += lh[i] * lh[i];
        sxy += lh[i] * le[i];
    }
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    return {sameActiveSet && slope >= 1.8,
        fmt::format("slope {:.3f} over 4 decades, active set {}, min 1.8", slope,
            sameActiveSet ? "unchanged" : "changed")};
}

struct DeskRun
{
    SimulationOutput output;
    double seconds = 0.0;
};

auto deskRun() -> const DeskRun&
{
    static const DeskRun run = [] {
        const auto cfg = deskConfig();
        RunOptions options;
        options.compare = true;
        const auto t0 = std::chrono::steady_clock::now();
        DeskRun r;
        r.output = runSimulation(cfg, options);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }();
    return run;
}

// Shipped column scenario: prediction fraction, early learning, quiet tail.
auto learningProfile() -> Outcome
{
    const auto& run = deskRun();
    const auto& out = run.output;
    const Index nsteps = out.steps.size();
    const double fraction = static_cast<double>(out.predicted) / static_cast<double>(out.calls);

    std::vector<Index> quarters(4, 0);
    for(Index s = 0; s < nsteps; ++s)
        quarters[std::min<Index>(3, 4 * s / nsteps)] += out.steps[s].learned;
    const bool early = quarters[0] > quarters[1] && quarters[0] > quarters[2] && quarters[0] > quarters[3];

    Index quietTail = 0;
    for(Index s = nsteps; s-- > 0 && out.steps[s].learned == 0;)
        ++quietTail;

    return {out.calls == 60000 && fraction >= 0.95 && early && quietTail >= 50 && run.seconds < 300.0,
        fmt::format("{} calls, prediction fraction {:.4f} (min 0.95), learnings per quarter {}/{}/{}/{}, "
                    "final zero-learning steps {} (min 50), {:.1f} s",
            out.calls, fraction, quarters[0], quarters[1], quarters[2], quarters[3], quietTail,
            run.seconds)};
}

auto benchSpeedup() -> Outcome
{
    const auto summary = summarizeBench(deskRun().output);
    return {summary.stabilizedSpeedup >= 5.0,
        fmt::format("stabilized speedup {:.1f}x (min 5x), peak {:.1f}x", summary.stabilizedSpeedup,
            summary.peakSpeedup)};
}

// Naive scan and kd-tree agree on random stores, ties included.
auto backendEquivalence() -> Outcome
{
    std::mt19937_64 rng(99);
    Index pairs = 0, mismatches = 0;
    for(Index trial = 0; pairs < 10000; ++trial)
    {
        const Index E = 1 + rng() % 8;
        const Index size = 1 + rng() % 300;
        const Index interval = 1 + rng() % 40;
        const bool lattice = trial % 2 == 0;
        RecordStore store(0, E, 1, SearchBackend::KdTree, {}, interval);
        auto draw = [&]() {
            return lattice ? static_cast<double>(rng() % 4)
                           : std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        };
        for(Index k = 0; k < size; ++k)
        {
            EquilibriumRecord r;
            r.T = draw();
            r.P = draw();
            r.b.resize(E);
            for(Index j = 0; j < E; ++j)
                r.b[j] = draw();
            r.n = Vector::Zero(1);
            store.insert(std::move(r));
        }
        for(Index q = 0; q < 50; ++q)
        {
            Vector b(E);
            for(Index j = 0; j < E; ++j)
                b[j] = draw();
            const double T = draw(), P = draw();
            const auto a = store.nearest(T, P, b, SearchBackend::Naive);
            const auto t = store.nearest(T, P, b, SearchBackend::KdTree);
            ++pairs;
            if(!a || !t || a->record->id != t->record->id || a->distance != t->distance)
                ++mismatches;
        }
    }
    return {mismatches == 0,
        fmt::format("{} queries, {} mismatches", pairs, mismatches)};
}

// Mass action at equilibria where every species is stable.
auto massAction() -> Outcome
{
    double worst = 0.0;
    Index systems = 0;
    for(const auto& ts : oracleSystems())
    {
        const auto sol = solve(ts.system, ts.models, ts.T, ts.P, ts.b, {});
        const auto stable = stableSpecies(ts.system, sol, ts.T);
        if(std::find(stable.begin(), stable.end(), false) != stable.end())
            continue;
        const auto r = lmaResidual(ts.system, ts.models, {ts.T, ts.P, sol.n}, reactionMatrix(ts.system));
        worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
        ++systems;
    }
    return {systems >= 3 && worst <= 1e-6,
        fmt::format("{} systems, max |ln K - sum nu ln a| = {:.2e}, tol 1e-6", systems, worst)};
}

// Exact formula matrix and element conservation of a closed column.
auto closedColumn() -> Outcome
{
    // The ten-species H-O-C-Z system with an aqueous and a gaseous phase.
    const auto carbonate = loadSystem(Config::load(configDir() + "/carbonate.ini"));
    Matrix expected(4, 10);
    expected << 2, 1, 1, 0, 1, 0, 0, 2, 0, 2,
                1, 0, 1, 2, 3, 3, 2, 0, 2, 1,
                0, 0, 0, 1, 1, 1, 0, 0, 1, 0,
                0, 1, -1, 0, -1, -2, 0, 0, 0, 0;
    const auto& A = carbonate.formulaMatrix();
    const bool exact = A.rows() == 4 && A.cols() == 10 && A == expected;

    auto cfg = deskConfig();
    // Injection fluid in the left half, resident fluid in the right half, both on rock,
    // mixed by diffusion with no flux through either end.
    const auto inj = equilibrateRecipe(cfg, cfg.injection, &cfg.rock);
    const auto res = equilibrateRecipe(cfg, cfg.resident, &cfg.rock);
    const Index nc = cfg.grid.ncells;
    CellField field = uniformField(cfg.system, res, nc);
    const auto split = partitionAmounts(cfg.system, inj.n);
    for(Index c = 0; c < nc / 2; ++c)
    {
        field.states[c] = inj;
        field.bf.col(c) = split.fluid;
        field.bs.col(c) = split.solid;
    }
    const Vector total0 = field.bf.rowwise().sum() + field.bs.rowwise().sum();

    TransportParams tp = cfg.transport;
    tp.v = 0.0;
    tp.D = 1e-7;
    BoundaryConditions bc{Vector::Zero(cfg.system.numElements()), true};
    RecordStore store(cfg.system);
    ReactiveContext ctx{&cfg.system, &cfg.models, cfg.equilibrium, SolverChoice::Smart, &store,
        cfg.smart.tolerances, false, 0};

    double drift = 0.0;
    for(Index step = 1; step <= 200; ++step)
    {
        ctx.step = step;
        const Matrix moved = transportStep(field.bf, cfg.grid, tp, bc);
        reactiveStep(field, moved, ctx);
        const Vector total = field.bf.rowwise().sum() + field.bs.rowwise().sum();
        drift = std::max(drift, (total - total0).lpNorm<Eigen::Infinity>() / total0.lpNorm<Eigen::Infinity>());
    }
    return {exact && drift <= 1e-10,
        fmt::format("formula matrix {}, max element drift {:.2e} relative over 200 steps "
                    "({} learned, {} predicted), tol 1e-10",
            exact ? "exact" : "mismatch", drift, store.learnedCount(), store.predictedCount())};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"oracle-equivalence", oracleEquivalence},
        {"sensitivity-finite-difference", sensitivityCheck},
        {"prediction-mass-balance", predictionMassBalance},
        {"saturated-mineral-discrimination", saturatedMineral},
        {"prediction-quadratic-convergence", quadraticConvergence},
        {"column-learning-profile", learningProfile},
        {"bench-speedup", benchSpeedup},
        {"search-backend-equivalence", backendEquivalence},
        {"mass-action-consistency", massAction},
        {"closed-column-conservation", closedColumn},
    };
    int failures = 0;
    for(const auto& [name, check] : criteria)
    {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            o = check();
        }
        catch(const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        fmt::print("{} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", name, o.detail, sec);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
