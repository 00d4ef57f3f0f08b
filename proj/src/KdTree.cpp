#include <smarteq/KdTree.hpp>

#include <algorithm>

namespace smarteq {

void KdTree::build(const std::vector<double>& coords, std::size_t dim, std::size_t count)
{
    m_dim = dim;
    m_count = count;
    m_nodes.clear();
    m_nodes.reserve(count);
    m_order.resize(count);
    for(std::size_t i = 0; i < count; ++i)
        m_order[i] = i;
    m_root = count ? buildRange(coords, 0, count) : -1;
}

auto KdTree::buildRange(const std::vector<double>& coords, std::size_t begin, std::size_t end) -> int
{
    if(begin >= end)
        return -1;

    // Split on the axis of largest spread.
    int axis = 0;
    double spread = -1.0;
    for(std::size_t j = 0; j < m_dim; ++j)
    {
        double lo = coords[m_order[begin] * m_dim + j];
        double hi = lo;
        for(std::size_t k = begin + 1; k < end; ++k)
        {
            const double x = coords[m_order[k] * m_dim + j];
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if(hi - lo > spread)
        {
            spread = hi - lo;
            axis = static_cast<int>(j);
        }
    }

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(m_order.begin() + begin, m_order.begin() + mid, m_order.begin() + end,
        [&](std::size_t a, std::size_t b) {
            const double xa = coords[a * m_dim + axis];
            const double xb = coords[b * m_dim + axis];
            return xa < xb || (xa == xb && a < b);
        });

    const int index = static_cast<int>(m_nodes.size());
    m_nodes.push_back({m_order[mid], axis, -1, -1});
    const int left = buildRange(coords, begin, mid);
    const int right = buildRange(coords, mid + 1, end);
    m_nodes[index].left = left;
    m_nodes[index].right = right;
    return index;
}

void KdTree::nearest(const std::vector<double>& coords, const double* query, NearestPoint& best,
    bool& found) const
{
    if(m_root >= 0)
        search(coords, m_root, query, best, found);
}

void KdTree::search(const std::vector<double>& coords, int node, const double* query,
    NearestPoint& best, bool& found) const
{
    const Node& nd = m_nodes[node];
    const double* p = coords.data() + nd.point * m_dim;
    const double d2 = squaredDistance(query, p, m_dim);
    if(!found || closer(d2, nd.point, best))
    {
        best = {nd.point, d2};
        found = true;
    }

    const double diff = query[nd.axis] - p[nd.axis];
    const int nearSide = diff < 0.0 ? nd.left : nd.right;
    const int farSide = diff < 0.0 ? nd.right : nd.left;
    if(nearSide >= 0)
        search(coords, nearSide, query, best, found);
    // Points beyond the splitting plane are at least diff² away. Equality is
    // still visited so a lower id at the same distance is not missed.
    if(farSide >= 0 && diff * diff <= best.distance2)
        search(coords, farSide, query, best, found);
}

} // namespace smarteq
