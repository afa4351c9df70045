#include "dfm/coupling.hpp"

#include "dfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dfm {

namespace {

struct Duals {
    std::vector<double> u; // row potentials, 1-based
    std::vector<double> v; // column potentials, 1-based
    std::vector<std::size_t> match;
};

// Shortest augmenting path method with row and column potentials, O(n^3).
Duals solve(const Tensor& c) {
    const std::size_t n = c.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            const double* row = c.data() + (i0 - 1) * n;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = row[j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> match(n);
    for (std::size_t j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
    return {std::move(u), std::move(v), std::move(match)};
}

} // namespace

double assignment_cost(const Tensor& cost, const std::vector<std::size_t>& perm) {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) total += cost(i, perm[i]);
    return total;
}

std::vector<std::size_t> hungarian(const Tensor& cost) {
    if (cost.rank() != 2 || cost.rows() != cost.cols()) {
        throw ShapeError("hungarian needs a square cost matrix, got " + cost.shape_string());
    }
    if (!cost.all_finite()) throw NonFiniteError("hungarian cost matrix has non-finite entries");
    const std::size_t n = cost.rows();
    Duals d = solve(cost);

    // Every optimal assignment uses only edges with zero reduced cost under
    // optimal duals, so the lexicographically smallest optimum is the
    // lexicographically smallest perfect matching of that tight subgraph.
    double scale = 1.0;
    for (double x : cost.values()) scale = std::max(scale, std::abs(x));
    const double tol = 1e-9 * scale;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (cost(i, j) - d.u[i + 1] - d.v[j + 1] <= tol) adj[i].push_back(j);
        }
    }
    std::vector<std::size_t>& match = d.match;
    std::vector<std::size_t> owner(n);
    for (std::size_t i = 0; i < n; ++i) owner[match[i]] = i;

    std::vector<std::size_t> prev_row(n);
    std::vector<char> seen(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : adj[i]) {
            if (j == match[i]) break;
            if (owner[j] < i) continue;
            // Look for an alternating path from owner[j] to the column i frees.
            const std::size_t k = owner[j];
            const std::size_t target = match[i];
            std::fill(seen.begin(), seen.end(), 0);
            seen[j] = 1;
            std::deque<std::size_t> queue{k};
            bool found = false;
            while (!queue.empty() && !found) {
                const std::size_t r = queue.front();
                queue.pop_front();
                for (std::size_t c : adj[r]) {
                    if (seen[c] || owner[c] < i) continue;
                    seen[c] = 1;
                    prev_row[c] = r;
                    if (c == target) {
                        found = true;
                        break;
                    }
                    queue.push_back(owner[c]);
                }
            }
            if (!found) continue;
            std::size_t c = target;
            for (;;) {
                const std::size_t r = prev_row[c];
                const std::size_t old = match[r];
                match[r] = c;
                owner[c] = r;
                if (r == k) break;
                c = old;
            }
            match[i] = j;
            owner[j] = i;
            break;
        }
    }
    return match;
}

} // namespace dfm
