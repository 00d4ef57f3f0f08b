#pragma once

#include <cstddef>
#include <vector>

namespace smarteq {

/// Squared Euclidean distance between two points of dimension `dim`.
///
/// Every nearest-neighbour search in the library goes through this function so
/// that different search structures agree bit for bit.
inline auto squaredDistance(const double* a, const double* b, std::size_t dim) -> double
{
    double sum = 0.0;
    for(std::size_t j = 0; j < dim; ++j)
    {
        const double d = a[j] - b[j];
        sum += d * d;
    }
    return sum;
}

struct NearestPoint
{
    std::size_t id = 0;
    double distance2 = 0.0;
};

/// Lexicographic (distance², id) comparison used to break ties.
inline auto closer(double d2, std::size_t id, const NearestPoint& best) -> bool
{
    return d2 < best.distance2 || (d2 == best.distance2 && id < best.id);
}

/// Static kd-tree over the first `count` points of a flat coordinate array.
///
/// The tree stores indices only, the coordinates stay with the owner and are
/// passed in again on every query. Queries are exact.
class KdTree
{
public:
    KdTree() = default;

    void build(const std::vector<double>& coords, std::size_t dim, std::size_t count);

    auto size() const -> std::size_t { return m_count; }

    /// Nearest indexed point to `query`; `best` carries the incumbent and is
    /// only replaced by strictly closer points (ties by lower id).
    void nearest(const std::vector<double>& coords, const double* query, NearestPoint& best,
        bool& found) const;

private:
    struct Node
    {
        std::size_t point = 0;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    auto buildRange(const std::vector<double>& coords, std::size_t begin, std::size_t end) -> int;
    void search(const std::vector<double>& coords, int node, const double* query,
        NearestPoint& best, bool& found) const;

    std::vector<Node> m_nodes;
    std::vector<std::size_t> m_order;
    std::size_t m_dim = 0;
    std::size_t m_count = 0;
    int m_root = -1;
};

} // namespace smarteq
