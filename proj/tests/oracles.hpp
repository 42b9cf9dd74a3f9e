#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include "compare.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Graphs straight from the definition: label every inserted point, try every
// set partition of all labels into vertices, keep the trees, then forget which
// copy of an inserted point is which. Returns canonical dumps.
inline std::multiset<std::string> brute_force_graphs(int l, int k, const std::vector<int>& D) {
    std::set<std::string> distinct;
    std::vector<int> n(l, 0);
    std::function<void(int)> choose = [&](int i) {
        if (i < l) {
            for (n[i] = 0; n[i] <= D[i]; ++n[i]) choose(i + 1);
            n[i] = 0;
            return;
        }
        // Labels: 0..l-1 internal, l..l+k-1 boundary, then inserted points with their source.
        std::vector<int> source;
        for (int a = 0; a < l; ++a)
            for (int c = 0; c < n[a]; ++c) source.push_back(a);
        int total = l + k + static_cast<int>(source.size());
        int edges = static_cast<int>(source.size());
        std::vector<int> block(total, 0);
        std::function<void(int, int)> part = [&](int x, int used) {
            if (x == total) {
                if (used != edges + 1) return;
                std::vector<int> parent(used);
                std::iota(parent.begin(), parent.end(), 0);
                std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
                int merged = 0;
                for (int e = 0; e < edges; ++e) {
                    int u = find(block[source[e]]), v = find(block[l + k + e]);
                    if (u != v) {
                        parent[u] = v;
                        ++merged;
                    }
                }
                if (merged != edges) return;
                ospin::ComparisonGraph g;
                g.vertices.resize(used);
                for (int v = 0; v < l; ++v) g.vertices[block[v]].internal.push_back(v);
                for (int v = 0; v < k; ++v) g.vertices[block[l + v]].boundary.push_back(v);
                for (int e = 0; e < edges; ++e) g.vertices[block[l + k + e]].inserted.push_back(source[e]);
                for (auto& vx : g.vertices) std::sort(vx.inserted.begin(), vx.inserted.end());
                std::sort(g.vertices.begin(), g.vertices.end());
                g.removed = n;
                distinct.insert(g.dump());
                return;
            }
            for (int b = 0; b <= used && b <= edges; ++b) {
                block[x] = b;
                part(x + 1, std::max(used, b + 1));
            }
        };
        part(0, 0);
    };
    choose(0);
    return {distinct.begin(), distinct.end()};
}

} // namespace oracle
