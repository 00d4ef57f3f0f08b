#pragma once

// Small chemical systems with closed-form Gibbs energies for oracle checks.

#include <smarteq/Simulation.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace smarteq::testing {

struct TestSystem
{
    std::string name;
    ChemicalSystem system;
    ThermoModels models;
    double T = 298.15;
    double P = 1e5;
    Vector b;
    /// A feasible point, A n0 = b.
    Vector n0;
    /// Independent reactions, one per row.
    Matrix nu;
    /// Box of the reaction extents searched by the brute-force oracle.
    Vector lo;
    Vector hi;
};

inline auto configDir() -> std::string
{
    return SMARTEQ_CONFIG_DIR;
}

inline auto fromIni(const std::string& ini) -> std::pair<ChemicalSystem, ThermoModels>
{
    const auto config = Config::parse(ini);
    auto system = loadSystem(config);
    auto models = loadThermoModels(config, system);
    return {std::move(system), std::move(models)};
}

/// G(n) / RT written out from the activity models, independent of the library's
/// potential evaluation. Returns +inf outside n ≥ 0.
inline auto oracleGibbs(const ChemicalSystem& system, const ThermoModels& models, double T, double P,
    const Vector& n) -> double
{
    const double RT = gasConstant * T;
    const Index N = system.numSpecies();
    for(Index i = 0; i < N; ++i)
        if(n[i] < 0.0)
            return std::numeric_limits<double>::infinity();

    auto xlnx = [](double x, double ref) { return x > 0.0 ? x * std::log(x / ref) : 0.0; };

    double g = 0.0;
    for(Index i = 0; i < N; ++i)
    {
        const auto& p = models.potentials[i];
        const double mu0 = p.alpha + p.beta * (T - models.Tref) + p.gamma * (P - models.Pref);
        g += n[i] * mu0 / RT;
    }

    for(Index k = 0; k < system.numPhases(); ++k)
    {
        const auto& phase = system.phase(k);
        const auto model = models.activity[k];
        if(model == ActivityModel::PurePhase)
            continue;
        if(model == ActivityModel::IdealGas)
        {
            double total = 0.0;
            for(Index i : phase.species)
                total += n[i];
            for(Index i : phase.species)
                g += xlnx(n[i], total) + n[i] * std::log(P / standardPressure);
            continue;
        }
        // Aqueous: solutes on the molality scale, solvent with ln a_w = −Σ n_s / n_w.
        const Index w = *phase.solvent;
        const double kg = n[w] * waterMolarMass;
        double solutes = 0.0;
        double ionic = 0.0;
        for(Index i : phase.species)
        {
            if(i == w)
                continue;
            g += xlnx(n[i], kg) - n[i];
            solutes += n[i];
            const double z = system.species(i).charge;
            ionic += 0.5 * n[i] * z * z;
        }
        (void)solutes;
        if(model == ActivityModel::DebyeHuckelAqueous && kg > 0.0)
        {
            const double I = ionic / kg;
            const double s = std::sqrt(I);
            const double h = 2.0 * (I - 2.0 * s + 2.0 * std::log1p(s));
            g += -models.debyeHuckelA * kg * h;
        }
    }
    return g;
}

/// Minimizer of G over n = n0 + νᵀ ξ, ξ in the box [lo, hi], to a final
/// extent resolution of 1e-6. One extent is scanned exhaustively; two are
/// scanned on successively finer grids around the incumbent.
inline auto bruteForceMinimum(const TestSystem& ts) -> Vector
{
    const Index R = ts.nu.rows();
    auto G = [&](const Vector& xi) {
        return oracleGibbs(ts.system, ts.models, ts.T, ts.P, ts.n0 + ts.nu.transpose() * xi);
    };
    Vector best = Vector::Zero(R);
    double bestG = std::numeric_limits<double>::infinity();
    const double resolution = 1e-6;

    if(R == 1)
    {
        const double lo = ts.lo[0], hi = ts.hi[0];
        const auto steps = static_cast<long>(std::ceil((hi - lo) / resolution));
        Vector xi(1);
        for(long k = 0; k <= steps; ++k)
        {
            xi[0] = std::min(hi, lo + k * resolution);
            const double g = G(xi);
            if(g < bestG)
            {
                bestG = g;
                best = xi;
            }
        }
    }
    else if(R == 2)
    {
        Vector lo = ts.lo, hi = ts.hi;
        const int m = 201;
        for(;;)
        {
            const Vector h = (hi - lo) / (m - 1);
            Vector xi(2);
            for(int a = 0; a < m; ++a)
                for(int c = 0; c < m; ++c)
                {
                    xi << lo[0] + a * h[0], lo[1] + c * h[1];
                    const double g = G(xi);
                    if(g < bestG)
                    {
                        bestG = g;
                        best = xi;
                    }
                }
            if(h.maxCoeff() <= resolution)
                break;
            lo = (best - 4.0 * h).cwiseMax(ts.lo);
            hi = (best + 4.0 * h).cwiseMin(ts.hi);
        }
    }
    return ts.n0 + ts.nu.transpose() * best;
}

inline auto vec(std::initializer_list<double> values) -> Vector
{
    Vector v(values.size());
    Index k = 0;
    for(double x : values)
        v[k++] = x;
    return v;
}

inline auto makeSystem(std::string name, const std::string& ini, double T, double P, Vector n0,
    Matrix nu, Vector lo, Vector hi) -> TestSystem
{
    auto [system, models] = fromIni(ini);
    TestSystem ts;
    ts.name = std::move(name);
    ts.b = system.formulaMatrix() * n0;
    ts.system = std::move(system);
    ts.models = std::move(models);
    ts.T = T;
    ts.P = P;
    ts.n0 = std::move(n0);
    ts.nu = std::move(nu);
    ts.lo = std::move(lo);
    ts.hi = std::move(hi);
    return ts;
}

inline auto isomerization() -> TestSystem
{
    const auto ini = R"(
[elements]
labels = X
[phase gas]
kind = gaseous
activity = ideal-gas
[species A]
phase = gas
formula = X:1
mu0 = 0
dmu0_dT = -3
[species B]
phase = gas
formula = X:1
mu0 = 1718.2820757664836
dmu0_dT = 4
)";
    Matrix nu(1, 2);
    nu << -1, 1;
    return makeSystem("isomerization", ini, 298.15, 1e5, vec({1.0, 0.0}), nu, vec({0.0}), vec({1.0}));
}

inline auto threeIsomers() -> TestSystem
{
    const auto ini = R"(
[elements]
labels = X
[phase gas]
kind = gaseous
activity = ideal-gas
[species A]
phase = gas
formula = X:1
mu0 = 0
[species B]
phase = gas
formula = X:1
mu0 = 500
dmu0_dT = -10
[species C]
phase = gas
formula = X:1
mu0 = -800
dmu0_dT = 5
)";
    Matrix nu(2, 3);
    nu << -1, 1, 0, -1, 0, 1;
    return makeSystem("three isomers", ini, 350.0, 2e5, vec({1.5, 0.0, 0.0}), nu, vec({0.0, 0.0}),
        vec({1.5, 1.5}));
}

inline auto dimerization() -> TestSystem
{
    // N2O4 = 2 NO2, the NO2 unit counted as element M.
    const auto ini = R"(
[elements]
labels = M
[phase gas]
kind = gaseous
activity = ideal-gas
[species N2O4]
phase = gas
formula = M:2
mu0 = 97890
dmu0_dT = -304.3
[species NO2]
phase = gas
formula = M:1
mu0 = 51310
dmu0_dT = -240.1
)";
    Matrix nu(1, 2);
    nu << -1, 2;
    return makeSystem("dimerization", ini, 298.15, 2e5, vec({1.0, 0.0}), nu, vec({0.0}), vec({1.0}));
}

inline auto aqueousComplex() -> TestSystem
{
    const auto ini = R"(
[elements]
labels = W A B
[phase aqueous]
kind = aqueous
activity = ideal-aqueous
solvent = H2O(l)
[species H2O(l)]
phase = aqueous
formula = W:1
mu0 = -237181
[species AB(aq)]
phase = aqueous
formula = A:1 B:1
mu0 = -10000
dmu0_dT = -20
[species A(aq)]
phase = aqueous
formula = A:1
mu0 = -2000
dmu0_dT = 15
[species B(aq)]
phase = aqueous
formula = B:1
mu0 = -3000
)";
    Matrix nu(1, 4);
    nu << 0, -1, 1, 1;
    return makeSystem("aqueous complex", ini, 298.15, 1e5, vec({55.508, 0.3, 0.2, 0.0}), nu,
        vec({-0.2}), vec({0.3}));
}

inline auto mineralIni() -> std::string
{
    return R"(
[elements]
labels = W K
[phase aqueous]
kind = aqueous
activity = ideal-aqueous
solvent = H2O(l)
[phase calcite]
kind = mineral
[species H2O(l)]
phase = aqueous
formula = W:1
mu0 = -237181
[species CaCO3(aq)]
phase = aqueous
formula = K:1
mu0 = -1099000
dmu0_dT = -60
[species Calcite]
phase = calcite
formula = K:1
mu0 = -1100000
dmu0_dT = -90
molar_volume = 36.934e-6
)";
}

/// Dissolved metal carbonate against its mineral; undersaturated for small `k`.
inline auto mineralSaturation(double k) -> TestSystem
{
    Matrix nu(1, 3);
    nu << 0, -1, 1;
    return makeSystem(k < 0.5 ? "undersaturated mineral" : "saturated mineral", mineralIni(),
        298.15, 1e5, vec({55.508, k, 0.0}), nu, vec({0.0}), vec({k}));
}

inline auto chargedWater() -> TestSystem
{
    const auto ini = R"(
[elements]
labels = H O Z
[thermo]
A_DH = 1.1744
[phase aqueous]
kind = aqueous
activity = debye-huckel
solvent = H2O(l)
[species H2O(l)]
phase = aqueous
formula = H:2 O:1
mu0 = -237181
dmu0_dT = -69.91
[species H+]
phase = aqueous
formula = H:1 Z:1
mu0 = 0
[species OH-]
phase = aqueous
formula = H:1 O:1 Z:-1
mu0 = -222321
dmu0_dT = 10.71
[species H2(aq)]
phase = aqueous
formula = H:2
mu0 = -228000
dmu0_dT = 57.7
[species O2(aq)]
phase = aqueous
formula = O:2
mu0 = 12438
dmu0_dT = -110.9
)";
    // H2O = H+ + OH-,  2 H2O = 2 H2 + O2
    Matrix nu(2, 5);
    nu << -1, 1, 1, 0, 0, -2, 0, 0, 2, 1;
    return makeSystem("charged water", ini, 298.15, 1e5, vec({55.508, 0, 0, 0, 0}), nu,
        vec({0.0, 0.0}), vec({1.0, 0.5}));
}

inline auto oracleSystems() -> std::vector<TestSystem>
{
    std::vector<TestSystem> v;
    v.push_back(isomerization());
    v.push_back(threeIsomers());
    v.push_back(dimerization());
    v.push_back(aqueousComplex());
    v.push_back(mineralSaturation(0.3));
    v.push_back(mineralSaturation(2.0));
    v.push_back(chargedWater());
    return v;
}

/// The shipped desk simulation config.
inline auto deskConfig() -> SimulationConfig
{
    return loadSimulationConfig(Config::load(configDir() + "/desk.ini"));
}

} // namespace smarteq::testing
