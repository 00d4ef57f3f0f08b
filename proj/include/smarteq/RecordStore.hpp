#pragma once

#include <smarteq/ChemicalSystem.hpp>
#include <smarteq/Equilibrium.hpp>
#include <smarteq/KdTree.hpp>

#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>

namespace smarteq {

enum class SearchBackend { Naive, KdTree };

auto searchBackendFromString(const std::string& text) -> SearchBackend;
auto toString(SearchBackend backend) -> std::string;

/// Scale factors applied to T, P and every b_j before the Euclidean distance.
struct SearchWeights
{
    double T = 1.0;
    double P = 1.0;
    double b = 1.0;
};

/// A learned equilibrium state with everything needed to extrapolate from it.
struct EquilibriumRecord
{
    Index id = 0;
    double T = 0.0;
    double P = 0.0;
    Vector b;
    Vector n;

    /// False when the active set was degenerate; such records never predict.
    bool hasSensitivities = false;
    Sensitivities sens;

    Vector mu;
    Vector dmu_dT;
    Vector dmu_dP;
    Matrix dmu_dn;

    /// ln a and its derivatives, kept only for the activity test.
    bool hasActivities = false;
    Vector ln_a;
    Vector dlna_dT;
    Vector dlna_dP;
    Matrix dlna_dn;
};

enum class ResultKind { Predicted, Learned };

auto toString(ResultKind kind) -> std::string;

struct CallLogEntry
{
    Index call = 0;
    ResultKind kind = ResultKind::Learned;
    /// Input-space distance to the nearest record, NaN when the store was empty.
    double distance = 0.0;
    double seconds = 0.0;
};

struct StoreStats
{
    Index learned = 0;
    Index predicted = 0;
    std::vector<CallLogEntry> log;
};

struct NearestRecord
{
    const EquilibriumRecord* record = nullptr;
    double distance = 0.0;
};

/// Append-only collection of equilibrium records with nearest-neighbour search.
///
/// Any number of threads may call nearest() concurrently; insert() and
/// logCall() take an exclusive lock. Records never move once inserted, so the
/// references handed out stay valid for the lifetime of the store.
class RecordStore
{
public:
    RecordStore(std::uint64_t signature, Index numElements, Index numSpecies,
        SearchBackend backend = SearchBackend::KdTree, SearchWeights weights = {},
        Index rebuildInterval = 16);

    explicit RecordStore(const ChemicalSystem& system,
        SearchBackend backend = SearchBackend::KdTree, SearchWeights weights = {},
        Index rebuildInterval = 16);

    RecordStore(RecordStore&&) noexcept;
    RecordStore& operator=(RecordStore&&) noexcept;
    ~RecordStore();

    auto signature() const -> std::uint64_t { return m_signature; }
    auto numElements() const -> Index { return m_numElements; }
    auto numSpecies() const -> Index { return m_numSpecies; }
    auto dimension() const -> Index { return m_numElements + 2; }
    auto backend() const -> SearchBackend { return m_backend; }
    auto weights() const -> const SearchWeights& { return m_weights; }
    auto rebuildInterval() const -> Index { return m_rebuildInterval; }

    auto size() const -> Index;
    auto empty() const -> bool { return size() == 0; }
    auto record(Index id) const -> const EquilibriumRecord&;

    /// Appends a record, assigning its id. Returns the stored record.
    auto insert(EquilibriumRecord record) -> const EquilibriumRecord&;

    /// Record minimizing the weighted distance to (T, P, b); ties go to the lowest id.
    auto nearest(double T, double P, const Vector& b) const -> std::optional<NearestRecord>;

    /// Same query answered by an explicit backend.
    auto nearest(double T, double P, const Vector& b, SearchBackend backend) const
        -> std::optional<NearestRecord>;

    /// Weighted search coordinates of an input point.
    auto coordinates(double T, double P, const Vector& b) const -> std::vector<double>;

    void logCall(ResultKind kind, double distance, double seconds);
    auto stats() const -> StoreStats;
    auto learnedCount() const -> Index;
    auto predictedCount() const -> Index;
    /// Clears the counters and log; records are kept.
    void resetStats();

private:
    auto nearestLocked(const double* query, SearchBackend backend) const -> std::optional<NearestRecord>;

    std::uint64_t m_signature;
    Index m_numElements;
    Index m_numSpecies;
    SearchBackend m_backend;
    SearchWeights m_weights;
    Index m_rebuildInterval;

    std::deque<EquilibriumRecord> m_records;
    std::vector<double> m_coords;
    KdTree m_tree;
    StoreStats m_stats;
    std::unique_ptr<std::shared_mutex> m_mutex;
};

/// Binary store file: header (magic, format version, system signature, E, N,
/// record count) followed by fixed-layout little-endian records.
void saveStore(const RecordStore& store, std::ostream& out);
void saveStore(const RecordStore& store, const std::string& path);

/// Throws InputError on a bad magic, version or system signature, or truncated data.
auto loadStore(std::istream& in, const ChemicalSystem& system,
    SearchBackend backend = SearchBackend::KdTree, SearchWeights weights = {},
    Index rebuildInterval = 16) -> RecordStore;
auto loadStore(const std::string& path, const ChemicalSystem& system,
    SearchBackend backend = SearchBackend::KdTree, SearchWeights weights = {},
    Index rebuildInterval = 16) -> RecordStore;

} // namespace smarteq
