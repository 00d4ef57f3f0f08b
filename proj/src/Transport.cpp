#include <smarteq/Transport.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace smarteq {

void validateGrid(const Grid1D& grid)
{
    if(grid.ncells < 2)
        throw InputError("grid needs at least 2 cells");
    if(!(grid.length > 0.0))
        throw InputError("grid length must be positive");
}

void validateTransportParams(const TransportParams& params)
{
    if(!(params.v >= 0.0))
        throw InputError("velocity must be nonnegative");
    if(!(params.D >= 0.0))
        throw InputError("diffusion coefficient must be nonnegative");
    if(!(params.dt > 0.0))
        throw InputError("time step must be positive");
}

auto uniformField(const ChemicalSystem& system, const ChemicalState& state, Index ncells) -> CellField
{
    CellField field;
    field.states.assign(ncells, state);
    const auto parts = partitionAmounts(system, state.n);
    field.bf = parts.fluid.replicate(1, ncells);
    field.bs = parts.solid.replicate(1, ncells);
    return field;
}

auto transportStep(const Matrix& bf, const Grid1D& grid, const TransportParams& params,
    const BoundaryConditions& bc) -> Matrix
{
    validateGrid(grid);
    validateTransportParams(params);
    const Index n = grid.ncells;
    const Index E = bf.rows();
    if(static_cast<Index>(bf.cols()) != n)
        throw InputError("field has " + std::to_string(bf.cols()) + " cells, grid has "
            + std::to_string(n));
    if(!bc.closed && static_cast<Index>(bc.inlet.size()) != E)
        throw InputError("inlet has the wrong number of elements");

    const double h = grid.dx();
    const double alpha = params.v * params.dt / h;
    const double beta = params.D * params.dt / (h * h);

    // Tridiagonal coefficients: lower[i] u_{i-1} + diag[i] u_i + upper[i] u_{i+1}.
    std::vector<double> lower(n, -(alpha + beta)), diag(n, 1.0 + alpha + 2.0 * beta), upper(n, -beta);
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    double inletWeight = 0.0;
    if(bc.closed)
    {
        diag[0] = 1.0 + alpha + beta;
        diag[n - 1] = 1.0 + beta;
    }
    else
    {
        diag[0] = 1.0 + alpha + 3.0 * beta;
        diag[n - 1] = 1.0 + alpha + beta;
        inletWeight = alpha + 2.0 * beta;
    }

    // Thomas factorization, shared by every element.
    std::vector<double> cp(n), denom(n);
    denom[0] = diag[0];
    cp[0] = upper[0] / denom[0];
    for(Index i = 1; i < n; ++i)
    {
        denom[i] = diag[i] - lower[i] * cp[i - 1];
        if(!(denom[i] > 0.0))
            throw NumericalError("singular transport system");
        cp[i] = upper[i] / denom[i];
    }

    Matrix out(E, n);
    std::vector<double> d(n);
    for(Index j = 0; j < E; ++j)
    {
        d[0] = (bf(j, 0) + (bc.closed ? 0.0 : inletWeight * bc.inlet[j])) / denom[0];
        for(Index i = 1; i < n; ++i)
            d[i] = (bf(j, i) - lower[i] * d[i - 1]) / denom[i];
        out(j, n - 1) = d[n - 1];
        for(Index i = n - 1; i-- > 0;)
            out(j, i) = d[i] - cp[i] * out(j, i + 1);
    }
    return out;
}

auto solverChoiceFromString(const std::string& text) -> SolverChoice
{
    if(text == "smart")
        return SolverChoice::Smart;
    if(text == "conventional")
        return SolverChoice::Conventional;
    throw InputError("unknown solver '" + text + "' (expected smart or conventional)");
}

auto toString(SolverChoice choice) -> std::string
{
    return choice == SolverChoice::Smart ? "smart" : "conventional";
}

namespace {

struct CellResult
{
    Vector n;
    ResultKind kind = ResultKind::Learned;
    bool clipped = false;
};

auto solveCell(const CellField& field, const Matrix& bfTransported, const ReactiveContext& ctx,
    Index cell) -> CellResult
{
    const auto& prev = field.states[cell];
    const Vector b = bfTransported.col(cell) + field.bs.col(cell);
    CellResult out;
    try
    {
        if(ctx.solver == SolverChoice::Smart)
        {
            auto r = solveSmart(*ctx.store, *ctx.system, *ctx.models, prev.T, prev.P, b,
                ctx.tolerances, ctx.options, &prev.n);
            out.n = std::move(r.state.n);
            out.kind = r.kind;
            out.clipped = r.clipped;
        }
        else
        {
            auto s = equilibrate(*ctx.system, *ctx.models, {prev.T, prev.P, b}, prev.n, ctx.options);
            if(!s.converged)
                throw NumericalError("equilibrium did not converge in "
                    + std::to_string(s.iterations) + " iterations");
            out.n = std::move(s.n);
        }
    }
    catch(const NumericalError& e)
    {
        throw CellFailure("cell " + std::to_string(cell) + ", step " + std::to_string(ctx.step)
                + ": " + e.what(),
            cell, ctx.step);
    }
    return out;
}

} // namespace

auto reactiveStep(CellField& field, const Matrix& bfTransported, const ReactiveContext& ctx,
    std::vector<ResultKind>* kinds) -> ReactiveStepStats
{
    const Index ncells = field.ncells();
    if(!ctx.system || !ctx.models)
        throw InputError("reactive step needs a chemical system and thermo models");
    if(ctx.solver == SolverChoice::Smart && !ctx.store)
        throw InputError("smart solver needs a record store");
    if(static_cast<Index>(bfTransported.cols()) != ncells
        || static_cast<Index>(bfTransported.rows()) != ctx.system->numElements())
        throw InputError("transported field has the wrong shape");

    const auto start = std::chrono::steady_clock::now();
    std::vector<CellResult> results(ncells);

    if(ctx.parallel && ncells > 1)
    {
        const Index workers = std::max(1u, std::thread::hardware_concurrency());
        std::atomic<Index> next{0};
        std::mutex errorMutex;
        std::exception_ptr error;
        Index errorCell = ncells;
        auto work = [&] {
            for(Index c = next++; c < ncells; c = next++)
            {
                try
                {
                    results[c] = solveCell(field, bfTransported, ctx, c);
                }
                catch(...)
                {
                    std::lock_guard lock(errorMutex);
                    if(c < errorCell)
                    {
                        errorCell = c;
                        error = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> pool;
        for(Index w = 0; w < std::min(workers, ncells); ++w)
            pool.emplace_back(work);
        for(auto& t : pool)
            t.join();
        if(error)
            std::rethrow_exception(error);
    }
    else
    {
        for(Index c = 0; c < ncells; ++c)
            results[c] = solveCell(field, bfTransported, ctx, c);
    }

    ReactiveStepStats stats;
    if(kinds)
        kinds->resize(ncells);
    for(Index c = 0; c < ncells; ++c)
    {
        auto& r = results[c];
        const auto parts = partitionAmounts(*ctx.system, r.n);
        field.bf.col(c) = parts.fluid;
        field.bs.col(c) = parts.solid;
        field.states[c].n = std::move(r.n);
        if(r.kind == ResultKind::Learned)
            ++stats.learned;
        else
            ++stats.predicted;
        if(r.clipped)
            ++stats.clipped;
        if(kinds)
            (*kinds)[c] = r.kind;
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

} // namespace smarteq
