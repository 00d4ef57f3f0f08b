#include <smarteq/Equilibrium.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

namespace smarteq {
namespace {

void checkProblem(const ChemicalSystem& system, const EquilibriumProblem& problem)
{
    if(static_cast<Index>(problem.b.size()) != system.numElements())
        throw InputError("element amount vector has " + std::to_string(problem.b.size()) +
            " entries, expected " + std::to_string(system.numElements()));
    if(!(problem.T > 0.0) || !(problem.P > 0.0))
        throw InputError("temperature and pressure must be positive");
    if(!problem.b.allFinite())
        throw InputError("element amounts must be finite");
}

auto amountScale(const Vector& b) -> double
{
    return b.size() == 0 ? 0.0 : b.cwiseAbs().maxCoeff();
}

/// Largest α ∈ (0, 1] keeping x + α dx ≥ (1 − fraction) x.
auto stepToBoundary(const Vector& x, const Vector& dx, double fraction) -> double
{
    double alpha = 1.0;
    for(Eigen::Index i = 0; i < x.size(); ++i)
        if(dx[i] < 0.0)
            alpha = std::min(alpha, -fraction * x[i] / dx[i]);
    return alpha;
}

void checkFeasible(const Matrix& A, const Vector& b, const Vector& x)
{
    const double s = amountScale(b);
    const double residual = (A * x - b).cwiseAbs().maxCoeff();
    if(residual > 1e-8 * std::max(s, 1e-300))
        throw InfeasibleProblem("no nonnegative species amounts satisfy A n = b (least-squares residual " +
            std::to_string(residual) + " mol)");
}

class InteriorPointSolver
{
public:
    InteriorPointSolver(const ChemicalSystem& system, const ThermoModels& models,
        const EquilibriumProblem& problem, const EquilibriumOptions& options)
        : system(system), models(models), problem(problem), options(options),
          A(system.formulaMatrix()), N(system.numSpecies()), E(system.numElements()),
          RT(gasConstant * problem.T), scale(amountScale(problem.b))
    {
        state.T = problem.T;
        state.P = problem.P;
    }

    auto solve(Vector n0) -> EquilibriumSolution
    {
        const double floor = options.initialFloor * scale;
        Vector n = n0.cwiseMax(floor);
        evaluate(n);

        // Multiplier start: least-squares y, then shift g − Aᵀy into positive z.
        Vector y = (A * A.transpose()).ldlt().solve(A * g);
        Vector z = g - A.transpose() * y;
        const double shift = std::max(-1.5 * z.minCoeff(), 0.0);
        z.array() += shift;
        z.array() += 0.5 * n.dot(z) / n.sum() + 1e-3;

        const double tauFloor = options.barrierFloor * scale;
        const double feasTol = 1e-13 * scale + 1e-15;
        const double complTol = 10.0 * tauFloor;

        EquilibriumSolution best;
        double bestMerit = std::numeric_limits<double>::infinity();

        Matrix M(N + E, N + E);
        Vector rhs(N + E);
        Eigen::PartialPivLU<Matrix> lu;

        for(int it = 0; it <= options.maxIterations; ++it)
        {
            const Vector rd = g - A.transpose() * y - z;
            const Vector rp = A * n - problem.b;
            const double stat = rd.cwiseAbs().maxCoeff();
            const double feas = rp.cwiseAbs().maxCoeff();
            const double comp = (n.array() * z.array()).maxCoeff();

            const double merit = std::max({stat / options.tolerance, feas / feasTol, comp / complTol});
            if(merit < bestMerit || it == 0)
            {
                bestMerit = merit;
                best.n = n;
                best.y = y * RT;
                best.z = z * RT;
                best.iterations = it;
                best.residual = {stat, feas, comp};
                best.residualNorm = std::max({stat, feas / std::max(scale, 1e-300), comp / std::max(scale, 1e-300)});
            }
            if(stat <= options.tolerance && feas <= feasTol && comp <= complTol)
            {
                best.converged = true;
                return best;
            }
            if(it == options.maxIterations) break;

            const Vector sqn = n.cwiseSqrt();
            M.topLeftCorner(N, N) = sqn.asDiagonal() * H * sqn.asDiagonal();
            M.topLeftCorner(N, N).diagonal() += z;
            M.topRightCorner(N, E) = -(sqn.asDiagonal() * A.transpose());
            M.bottomLeftCorner(E, N) = A * sqn.asDiagonal();
            M.bottomRightCorner(E, E).setZero();
            lu.compute(M);

            // Predictor (τ = 0).
            const double avg = n.dot(z) / static_cast<double>(N);
            Vector rc = (n.array() * z.array()).matrix();
            rhs.head(N) = -(sqn.array() * rd.array()).matrix() - (rc.array() / sqn.array()).matrix();
            rhs.tail(E) = -rp;
            Vector sol = lu.solve(rhs);
            const Vector dnAff = (sqn.array() * sol.head(N).array()).matrix();
            const Vector dzAff = ((-rc.array() - z.array() * dnAff.array()) / n.array()).matrix();
            const double apAff = stepToBoundary(n, dnAff, 1.0);
            const double adAff = stepToBoundary(z, dzAff, 1.0);
            const double avgAff = (n + apAff * dnAff).dot(z + adAff * dzAff) / static_cast<double>(N);
            const double sigma = std::clamp(std::pow(avgAff / avg, 3), 0.0, 1.0);
            const double tau = std::max(sigma * avg, tauFloor);

            // Corrector with the barrier target τ.
            rc = (n.array() * z.array() + dnAff.array() * dzAff.array() - tau).matrix();
            rhs.head(N) = -(sqn.array() * rd.array()).matrix() - (rc.array() / sqn.array()).matrix();
            rhs.tail(E) = -rp;
            sol = lu.solve(rhs);
            const Vector dn = (sqn.array() * sol.head(N).array()).matrix();
            const Vector dy = sol.tail(E);
            const Vector dz = ((-rc.array() - z.array() * dn.array()) / n.array()).matrix();

            if(!dn.allFinite() || !dz.allFinite()) break;

            const double ap = stepToBoundary(n, dn, options.fractionToBoundary);
            const double ad = stepToBoundary(z, dz, options.fractionToBoundary);
            n += ap * dn;
            y += ap * dy;
            z += ad * dz;
            evaluate(n);
        }
        best.converged = false;
        return best;
    }

private:
    void evaluate(const Vector& n)
    {
        state.n = n;
        evaluateChemicalPotentials(system, models, state, props);
        g = props.mu / RT;
        H = props.dlna_dn;
    }

    const ChemicalSystem& system;
    const ThermoModels& models;
    const EquilibriumProblem& problem;
    const EquilibriumOptions& options;
    const Matrix& A;
    const Index N;
    const Index E;
    const double RT;
    const double scale;

    ChemicalState state;
    ChemicalProperties props;
    Vector g;
    Matrix H;
};

auto solveFrom(const ChemicalSystem& system, const ThermoModels& models,
    const EquilibriumProblem& problem, const Vector* guess, const EquilibriumOptions& options)
    -> EquilibriumSolution
{
    checkProblem(system, problem);
    const auto N = system.numSpecies();
    const auto E = system.numElements();
    const Matrix& A = system.formulaMatrix();

    if(amountScale(problem.b) == 0.0)
    {
        EquilibriumSolution trivial;
        trivial.n = Vector::Zero(N);
        trivial.y = Vector::Zero(E);
        trivial.z = Vector::Zero(N);
        trivial.converged = true;
        return trivial;
    }

    Vector start;
    if(guess)
    {
        if(static_cast<Index>(guess->size()) != N)
            throw InputError("initial guess has the wrong number of species");
        start = guess->cwiseMax(0.0);
    }
    else
    {
        start = nonnegativeLeastSquares(A, problem.b);
        checkFeasible(A, problem.b, start);
    }

    InteriorPointSolver solver(system, models, problem, options);
    auto solution = solver.solve(start);
    if(!solution.converged && guess)
    {
        // A warm start skips the feasibility check; diagnose only when it matters.
        // A stalled warm start is retried from the least-squares start.
        const Vector cold = nonnegativeLeastSquares(A, problem.b);
        checkFeasible(A, problem.b, cold);
        const int warmIterations = solution.iterations;
        auto retry = solver.solve(cold);
        retry.iterations += warmIterations;
        if(retry.converged || retry.residualNorm < solution.residualNorm)
            solution = std::move(retry);
    }
    return solution;
}

} // namespace

auto loadEquilibriumOptions(const Config& config) -> EquilibriumOptions
{
    EquilibriumOptions options;
    if(const auto* s = config.section("solver"))
    {
        s->allowKeys({"tol_kkt", "max_iterations", "eps_s", "barrier_floor"});
        options.tolerance = s->number("tol_kkt", options.tolerance);
        options.maxIterations = static_cast<int>(s->integer("max_iterations", options.maxIterations));
        options.stabilityThreshold = s->number("eps_s", options.stabilityThreshold);
        options.barrierFloor = s->number("barrier_floor", options.barrierFloor);
        if(!(options.tolerance > 0.0) || options.maxIterations < 1 || !(options.stabilityThreshold > 0.0) ||
            !(options.barrierFloor > 0.0))
            throw InputError("[solver]: tolerances and max_iterations must be positive");
    }
    return options;
}

auto kktResidual(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, const Vector& b, const Vector& y, const Vector& z) -> KktResidual
{
    const Matrix& A = system.formulaMatrix();
    if(static_cast<Index>(b.size()) != system.numElements() || static_cast<Index>(y.size()) != system.numElements() ||
        static_cast<Index>(z.size()) != system.numSpecies())
        throw InputError("KKT residual: inconsistent dimensions");
    const auto props = chemicalPotentials(system, models, state);
    const double RT = gasConstant * state.T;
    KktResidual r;
    r.stationarity = ((props.mu - A.transpose() * y - z) / RT).cwiseAbs().maxCoeff();
    r.feasibility = (A * state.n - b).cwiseAbs().maxCoeff();
    r.complementarity = (state.n.array() * z.array()).abs().maxCoeff() / RT;
    return r;
}

auto equilibrate(const ChemicalSystem& system, const ThermoModels& models,
    const EquilibriumProblem& problem, const EquilibriumOptions& options) -> EquilibriumSolution
{
    return solveFrom(system, models, problem, nullptr, options);
}

auto equilibrate(const ChemicalSystem& system, const ThermoModels& models,
    const EquilibriumProblem& problem, const Vector& guess, const EquilibriumOptions& options)
    -> EquilibriumSolution
{
    return solveFrom(system, models, problem, &guess, options);
}

auto gibbsEnergy(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state) -> double
{
    const auto props = chemicalPotentials(system, models, state);
    return props.mu.dot(state.n);
}

auto lmaResidual(const ChemicalSystem& system, const ThermoModels& models,
    const ChemicalState& state, const Matrix& nu, const EquilibriumOptions& options) -> Vector
{
    validateState(system, state);
    const double s = amountScale(system.formulaMatrix() * state.n);
    for(Eigen::Index m = 0; m < nu.rows(); ++m)
        for(Index i = 0; i < system.numSpecies(); ++i)
            if(nu(m, i) != 0.0 && !(state.n[i] > options.stabilityThreshold * s))
                throw InputError("reaction " + std::to_string(m) + " involves unstable species '" +
                    system.species(i).name + "'");
    const Vector lnK = reactionLnK(system, models, nu, state.T, state.P);
    const auto act = activities(system, models, state);
    return lnK - nu * act.ln_a;
}

auto stableSpecies(const ChemicalSystem& system, const EquilibriumSolution& solution,
    double T, const EquilibriumOptions& options) -> std::vector<bool>
{
    const double s = std::max(amountScale(system.formulaMatrix() * solution.n), 1e-300);
    const double RT = gasConstant * T;
    std::vector<bool> stable(system.numSpecies());
    for(Index i = 0; i < system.numSpecies(); ++i)
    {
        const double ni = solution.n[i] / s;
        const double zi = solution.z[i] / RT;
        // Ambiguous only if both are small and neither dominates the other.
        const double hi = std::max(ni, zi);
        const double lo = std::min(ni, zi);
        if(hi < options.stabilityThreshold && lo > 1e-2 * hi)
            throw DegenerateActiveSet("species '" + system.species(i).name +
                "' is neither clearly stable nor clearly unstable");
        stable[i] = ni >= zi;
    }
    return stable;
}

auto sensitivities(const ChemicalSystem& system, const ThermoModels& models,
    double T, double P, const EquilibriumSolution& solution, const EquilibriumOptions& options)
    -> Sensitivities
{
    const auto props = chemicalPotentials(system, models, {T, P, solution.n});
    return sensitivities(system, props, solution, options);
}

auto sensitivities(const ChemicalSystem& system, const ChemicalProperties& props,
    const EquilibriumSolution& solution, const EquilibriumOptions& options) -> Sensitivities
{
    const auto N = system.numSpecies();
    const auto E = system.numElements();
    const Matrix& A = system.formulaMatrix();

    const auto stable = stableSpecies(system, solution, props.T, options);
    std::vector<Index> S;
    for(Index i = 0; i < N; ++i)
        if(stable[i]) S.push_back(i);
    const auto K = S.size();

    // [H_SS  −A_Sᵀ] [dn_S]   [−∂μ_S/∂θ]
    // [A_S     0  ] [dy  ] = [   c_θ   ]
    // solved in the variables D⁻¹ dn_S with D = diag(√n_S) for conditioning.
    Vector d(K);
    for(Index k = 0; k < K; ++k) d[k] = std::sqrt(solution.n[S[k]]);

    Matrix M = Matrix::Zero(K + E, K + E);
    Matrix rhs = Matrix::Zero(K + E, 2 + E);
    for(Index r = 0; r < K; ++r)
    {
        for(Index c = 0; c < K; ++c)
            M(r, c) = d[r] * props.dmu_dn(S[r], S[c]) * d[c];
        for(Index j = 0; j < E; ++j)
        {
            M(r, K + j) = -d[r] * A(j, S[r]);
            M(K + j, r) = A(j, S[r]) * d[r];
        }
        rhs(r, 0) = -d[r] * props.dmu_dT[S[r]];
        rhs(r, 1) = -d[r] * props.dmu_dP[S[r]];
    }
    for(Index j = 0; j < E; ++j) rhs(K + j, 2 + j) = 1.0;

    Eigen::FullPivLU<Matrix> lu(M);
    if(!lu.isInvertible())
        throw DegenerateActiveSet("bordered sensitivity matrix is singular (stable species do not span the elements)");
    const Matrix x = lu.solve(rhs);

    Sensitivities sens{Vector::Zero(N), Vector::Zero(N), Matrix::Zero(N, E)};
    for(Index k = 0; k < K; ++k)
    {
        sens.dn_dT[S[k]] = d[k] * x(k, 0);
        sens.dn_dP[S[k]] = d[k] * x(k, 1);
        for(Index j = 0; j < E; ++j)
            sens.dn_db(S[k], j) = d[k] * x(k, 2 + j);
    }
    return sens;
}

auto nonnegativeLeastSquares(const Matrix& A, const Vector& b) -> Vector
{
    const auto m = A.rows();
    const auto n = A.cols();
    Vector x = Vector::Zero(n);
    std::vector<bool> passive(n, false);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().maxCoeff() *
        static_cast<double>(std::max(m, n)) * std::max(b.cwiseAbs().maxCoeff(), 1.0);

    auto solvePassive = [&]() {
        std::vector<Eigen::Index> cols;
        for(Eigen::Index j = 0; j < n; ++j)
            if(passive[j]) cols.push_back(j);
        Matrix Ap(m, cols.size());
        for(Index k = 0; k < cols.size(); ++k) Ap.col(k) = A.col(cols[k]);
        Vector sp = Ap.colPivHouseholderQr().solve(b);
        Vector s = Vector::Zero(n);
        for(Index k = 0; k < cols.size(); ++k) s[cols[k]] = sp[k];
        return s;
    };

    for(int outer = 0; outer < 3 * n + 10; ++outer)
    {
        Vector w = A.transpose() * (b - A * x);
        Eigen::Index t = -1;
        double wmax = tol;
        for(Eigen::Index j = 0; j < n; ++j)
            if(!passive[j] && w[j] > wmax) { wmax = w[j]; t = j; }
        if(t < 0) break;
        passive[t] = true;

        for(int inner = 0; inner < 3 * n + 10; ++inner)
        {
            Vector s = solvePassive();
            bool allPositive = true;
            for(Eigen::Index j = 0; j < n; ++j)
                if(passive[j] && s[j] <= 0.0) allPositive = false;
            if(allPositive) { x = s; break; }
            double alpha = 1.0;
            for(Eigen::Index j = 0; j < n; ++j)
                if(passive[j] && s[j] <= 0.0)
                    alpha = std::min(alpha, x[j] / (x[j] - s[j]));
            x += alpha * (s - x);
            for(Eigen::Index j = 0; j < n; ++j)
                if(passive[j] && x[j] <= tol) { passive[j] = false; x[j] = 0.0; }
        }
    }
    return x;
}

} // namespace smarteq
