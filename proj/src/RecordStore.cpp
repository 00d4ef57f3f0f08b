#include <smarteq/RecordStore.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>

namespace smarteq {

auto searchBackendFromString(const std::string& text) -> SearchBackend
{
    if(text == "naive")
        return SearchBackend::Naive;
    if(text == "kdtree" || text == "kd-tree")
        return SearchBackend::KdTree;
    throw InputError("unknown search backend '" + text + "' (expected naive or kdtree)");
}

auto toString(SearchBackend backend) -> std::string
{
    return backend == SearchBackend::Naive ? "naive" : "kdtree";
}

auto toString(ResultKind kind) -> std::string
{
    return kind == ResultKind::Predicted ? "predicted" : "learned";
}

RecordStore::RecordStore(std::uint64_t signature, Index numElements, Index numSpecies,
    SearchBackend backend, SearchWeights weights, Index rebuildInterval)
    : m_signature(signature), m_numElements(numElements), m_numSpecies(numSpecies),
      m_backend(backend), m_weights(weights), m_rebuildInterval(rebuildInterval),
      m_mutex(std::make_unique<std::shared_mutex>())
{
    if(rebuildInterval == 0)
        throw InputError("rebuild interval must be positive");
    if(!(weights.T >= 0.0 && weights.P >= 0.0 && weights.b >= 0.0))
        throw InputError("search weights must be nonnegative");
}

RecordStore::RecordStore(const ChemicalSystem& system, SearchBackend backend,
    SearchWeights weights, Index rebuildInterval)
    : RecordStore(system.signature(), system.numElements(), system.numSpecies(), backend,
          weights, rebuildInterval)
{}

RecordStore::RecordStore(RecordStore&&) noexcept = default;
RecordStore& RecordStore::operator=(RecordStore&&) noexcept = default;
RecordStore::~RecordStore() = default;

auto RecordStore::size() const -> Index
{
    std::shared_lock lock(*m_mutex);
    return m_records.size();
}

auto RecordStore::record(Index id) const -> const EquilibriumRecord&
{
    std::shared_lock lock(*m_mutex);
    if(id >= m_records.size())
        throw InputError("record id out of range");
    return m_records[id];
}

auto RecordStore::coordinates(double T, double P, const Vector& b) const -> std::vector<double>
{
    std::vector<double> x(dimension());
    x[0] = m_weights.T * T;
    x[1] = m_weights.P * P;
    for(Index j = 0; j < m_numElements; ++j)
        x[2 + j] = m_weights.b * b[j];
    return x;
}

auto RecordStore::insert(EquilibriumRecord record) -> const EquilibriumRecord&
{
    if(static_cast<Index>(record.b.size()) != m_numElements
        || static_cast<Index>(record.n.size()) != m_numSpecies)
        throw InputError("record dimensions do not match the store");
    const auto x = coordinates(record.T, record.P, record.b);

    std::unique_lock lock(*m_mutex);
    record.id = m_records.size();
    m_records.push_back(std::move(record));
    m_coords.insert(m_coords.end(), x.begin(), x.end());
    const Index unindexed = m_records.size() - m_tree.size();
    if(unindexed >= m_rebuildInterval)
        m_tree.build(m_coords, dimension(), m_records.size());
    return m_records.back();
}

auto RecordStore::nearest(double T, double P, const Vector& b) const -> std::optional<NearestRecord>
{
    return nearest(T, P, b, m_backend);
}

auto RecordStore::nearest(double T, double P, const Vector& b, SearchBackend backend) const
    -> std::optional<NearestRecord>
{
    if(static_cast<Index>(b.size()) != m_numElements)
        throw InputError("query has the wrong number of element amounts");
    const auto x = coordinates(T, P, b);
    std::shared_lock lock(*m_mutex);
    return nearestLocked(x.data(), backend);
}

auto RecordStore::nearestLocked(const double* query, SearchBackend backend) const
    -> std::optional<NearestRecord>
{
    if(m_records.empty())
        return std::nullopt;
    const Index dim = dimension();
    NearestPoint best;
    bool found = false;
    Index first = 0;
    if(backend == SearchBackend::KdTree)
    {
        m_tree.nearest(m_coords, query, best, found);
        first = m_tree.size();
    }
    for(Index i = first; i < m_records.size(); ++i)
    {
        const double d2 = squaredDistance(query, m_coords.data() + i * dim, dim);
        if(!found || closer(d2, i, best))
        {
            best = {i, d2};
            found = true;
        }
    }
    return NearestRecord{&m_records[best.id], std::sqrt(best.distance2)};
}

void RecordStore::logCall(ResultKind kind, double distance, double seconds)
{
    std::unique_lock lock(*m_mutex);
    if(kind == ResultKind::Learned)
        ++m_stats.learned;
    else
        ++m_stats.predicted;
    m_stats.log.push_back({m_stats.log.size(), kind, distance, seconds});
}

auto RecordStore::stats() const -> StoreStats
{
    std::shared_lock lock(*m_mutex);
    return m_stats;
}

auto RecordStore::learnedCount() const -> Index
{
    std::shared_lock lock(*m_mutex);
    return m_stats.learned;
}

auto RecordStore::predictedCount() const -> Index
{
    std::shared_lock lock(*m_mutex);
    return m_stats.predicted;
}

void RecordStore::resetStats()
{
    std::unique_lock lock(*m_mutex);
    m_stats = {};
}

//---------------------------------------------------------------------------
// Persistence
//---------------------------------------------------------------------------

namespace {

constexpr char storeMagic[8] = {'S', 'M', 'E', 'Q', 'S', 'T', 'O', 'R'};
constexpr std::uint32_t storeVersion = 1;

constexpr std::uint64_t flagSensitivities = 1;
constexpr std::uint64_t flagActivities = 2;

auto toLittle(std::uint64_t v) -> std::uint64_t
{
    if constexpr(std::endian::native == std::endian::big)
    {
        std::uint64_t r = 0;
        for(int k = 0; k < 8; ++k)
            r |= ((v >> (8 * k)) & 0xffu) << (8 * (7 - k));
        return r;
    }
    return v;
}

class Writer
{
public:
    explicit Writer(std::ostream& out) : m_out(out) {}

    void u64(std::uint64_t v)
    {
        v = toLittle(v);
        m_out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
    void array(const double* data, Index count, Index expected)
    {
        for(Index k = 0; k < expected; ++k)
            f64(k < count ? data[k] : 0.0);
    }
    void vec(const Vector& v, Index expected) { array(v.data(), v.size(), expected); }
    void mat(const Matrix& m, Index expected) { array(m.data(), m.size(), expected); }

private:
    std::ostream& m_out;
};

class Reader
{
public:
    explicit Reader(std::istream& in) : m_in(in) {}

    auto u64() -> std::uint64_t
    {
        std::uint64_t v = 0;
        m_in.read(reinterpret_cast<char*>(&v), sizeof v);
        if(m_in.gcount() != sizeof v)
            throw InputError("record store file is truncated");
        return toLittle(v);
    }
    auto f64() -> double { return std::bit_cast<double>(u64()); }
    auto vec(Index size) -> Vector
    {
        Vector v(size);
        for(Index k = 0; k < size; ++k)
            v[k] = f64();
        return v;
    }
    auto mat(Index rows, Index cols) -> Matrix
    {
        Matrix m(rows, cols);
        for(Index k = 0; k < rows * cols; ++k)
            m.data()[k] = f64();
        return m;
    }

private:
    std::istream& m_in;
};

} // namespace

void saveStore(const RecordStore& store, std::ostream& out)
{
    const Index E = store.numElements();
    const Index N = store.numSpecies();
    const Index count = store.size();

    out.write(storeMagic, sizeof storeMagic);
    Writer w(out);
    w.u64(storeVersion);
    w.u64(store.signature());
    w.u64(E);
    w.u64(N);
    w.u64(count);
    for(Index i = 0; i < count; ++i)
    {
        const auto& r = store.record(i);
        w.u64(r.id);
        w.f64(r.T);
        w.f64(r.P);
        w.u64((r.hasSensitivities ? flagSensitivities : 0) | (r.hasActivities ? flagActivities : 0));
        w.vec(r.b, E);
        w.vec(r.n, N);
        w.vec(r.sens.dn_dT, N);
        w.vec(r.sens.dn_dP, N);
        w.mat(r.sens.dn_db, N * E);
        w.vec(r.mu, N);
        w.vec(r.dmu_dT, N);
        w.vec(r.dmu_dP, N);
        w.mat(r.dmu_dn, N * N);
        w.vec(r.ln_a, N);
        w.vec(r.dlna_dT, N);
        w.vec(r.dlna_dP, N);
        w.mat(r.dlna_dn, N * N);
    }
    if(!out)
        throw InputError("failed to write record store");
}

void saveStore(const RecordStore& store, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if(!out)
        throw InputError("cannot open '" + path + "' for writing");
    saveStore(store, out);
}

auto loadStore(std::istream& in, const ChemicalSystem& system, SearchBackend backend,
    SearchWeights weights, Index rebuildInterval) -> RecordStore
{
    char magic[sizeof storeMagic] = {};
    in.read(magic, sizeof magic);
    if(in.gcount() != sizeof magic || std::memcmp(magic, storeMagic, sizeof magic) != 0)
        throw InputError("not a record store file");
    Reader r(in);
    const auto version = r.u64();
    if(version != storeVersion)
        throw InputError("unsupported record store version " + std::to_string(version));
    const auto signature = r.u64();
    if(signature != system.signature())
        throw InputError("record store was written for a different chemical system");
    const Index E = r.u64();
    const Index N = r.u64();
    if(E != system.numElements() || N != system.numSpecies())
        throw InputError("record store dimensions do not match the chemical system");
    const Index count = r.u64();

    RecordStore store(system, backend, weights, rebuildInterval);
    for(Index i = 0; i < count; ++i)
    {
        EquilibriumRecord rec;
        rec.id = r.u64();
        rec.T = r.f64();
        rec.P = r.f64();
        const auto flags = r.u64();
        rec.hasSensitivities = flags & flagSensitivities;
        rec.hasActivities = flags & flagActivities;
        rec.b = r.vec(E);
        rec.n = r.vec(N);
        rec.sens.dn_dT = r.vec(N);
        rec.sens.dn_dP = r.vec(N);
        rec.sens.dn_db = r.mat(N, E);
        rec.mu = r.vec(N);
        rec.dmu_dT = r.vec(N);
        rec.dmu_dP = r.vec(N);
        rec.dmu_dn = r.mat(N, N);
        rec.ln_a = r.vec(N);
        rec.dlna_dT = r.vec(N);
        rec.dlna_dP = r.vec(N);
        rec.dlna_dn = r.mat(N, N);
        if(!rec.hasSensitivities)
            rec.sens = {};
        if(!rec.hasActivities)
        {
            rec.ln_a.resize(0);
            rec.dlna_dT.resize(0);
            rec.dlna_dP.resize(0);
            rec.dlna_dn.resize(0, 0);
        }
        if(rec.id != i)
            throw InputError("record store ids are out of sequence");
        store.insert(std::move(rec));
    }
    return store;
}

auto loadStore(const std::string& path, const ChemicalSystem& system, SearchBackend backend,
    SearchWeights weights, Index rebuildInterval) -> RecordStore
{
    std::ifstream in(path, std::ios::binary);
    if(!in)
        throw InputError("cannot open record store '" + path + "'");
    return loadStore(in, system, backend, weights, rebuildInterval);
}

} // namespace smarteq
