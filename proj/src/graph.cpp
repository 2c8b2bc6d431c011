#include "seamstress/graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

namespace seamstress {

Adjacency make_adjacency(std::size_t n,
                         const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Adjacency adj(n);
  for (auto [a, b] : edges) adj[a].push_back(b);
  for (auto& out : adj) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return adj;
}

std::vector<std::vector<std::size_t>> strongly_connected_components(const Adjacency& adj) {
  constexpr auto kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = adj.size();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  std::size_t counter = 0;

  struct Frame {
    std::size_t node;
    std::size_t next_edge;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& f = call.back();
      if (f.next_edge < adj[f.node].size()) {
        auto w = adj[f.node][f.next_edge++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      auto v = f.node;
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

std::vector<std::size_t> component_index(std::size_t n,
                                         const std::vector<std::vector<std::size_t>>& sccs) {
  std::vector<std::size_t> comp(n, 0);
  for (std::size_t c = 0; c < sccs.size(); ++c)
    for (auto v : sccs[c]) comp[v] = c;
  return comp;
}

std::vector<std::size_t> stable_dependency_order(const Adjacency& adj) {
  const std::size_t n = adj.size();
  auto sccs = strongly_connected_components(adj);
  auto comp = component_index(n, sccs);
  const std::size_t m = sccs.size();

  // Condensation: component c waits on every component it references.
  std::vector<std::set<std::size_t>> waits_on(m);
  std::vector<std::vector<std::size_t>> dependents(m);
  for (std::size_t v = 0; v < n; ++v)
    for (auto w : adj[v])
      if (comp[v] != comp[w] && waits_on[comp[v]].insert(comp[w]).second)
        dependents[comp[w]].push_back(comp[v]);

  // Components are already ordered by smallest member, so the component
  // index doubles as the source-order key.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  std::vector<std::size_t> pending(m);
  for (std::size_t c = 0; c < m; ++c) {
    pending[c] = waits_on[c].size();
    if (pending[c] == 0) ready.push(c);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    auto c = ready.top();
    ready.pop();
    order.insert(order.end(), sccs[c].begin(), sccs[c].end());
    for (auto d : dependents[c])
      if (--pending[d] == 0) ready.push(d);
  }
  return order;
}

}  // namespace seamstress
