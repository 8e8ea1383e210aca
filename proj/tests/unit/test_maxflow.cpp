#include <doctest.h>

#include <algorithm>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "coskel/maxflow.hpp"

using namespace coskel;

namespace {

// Dense Edmonds-Karp on node ids 0..n-1 plus source n and sink n+1.
struct Reference {
  int n;
  std::vector<std::vector<double>> cap;

  explicit Reference(int nodes) : n(nodes), cap(static_cast<std::size_t>(nodes + 2), std::vector<double>(static_cast<std::size_t>(nodes + 2), 0.0)) {}

  double solve() {
    const int s = n, t = n + 1, N = n + 2;
    double flow = 0.0;
    for (;;) {
      std::vector<int> parent(static_cast<std::size_t>(N), -1);
      parent[static_cast<std::size_t>(s)] = s;
      std::queue<int> q;
      q.push(s);
      while (!q.empty() && parent[static_cast<std::size_t>(t)] < 0) {
        const int u = q.front();
        q.pop();
        for (int v = 0; v < N; ++v)
          if (parent[static_cast<std::size_t>(v)] < 0 && cap[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] > 1e-12) {
            parent[static_cast<std::size_t>(v)] = u;
            q.push(v);
          }
      }
      if (parent[static_cast<std::size_t>(t)] < 0) return flow;
      double push = std::numeric_limits<double>::infinity();
      for (int v = t; v != s; v = parent[static_cast<std::size_t>(v)])
        push = std::min(push, cap[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])][static_cast<std::size_t>(v)]);
      for (int v = t; v != s; v = parent[static_cast<std::size_t>(v)]) {
        const int u = parent[static_cast<std::size_t>(v)];
        cap[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] -= push;
        cap[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] += push;
      }
      flow += push;
    }
  }
};

}  // namespace

TEST_CASE("single edge and trivial graphs") {
  MaxFlowGraph g(1);
  g.add_terminal_weights(0, 3.0, 5.0);
  CHECK(g.solve() == 3.0);
  CHECK_FALSE(g.in_source_segment(0));

  MaxFlowGraph chain(2);
  chain.add_terminal_weights(0, 4.0, 0.0);
  chain.add_terminal_weights(1, 0.0, 4.0);
  chain.add_edge(0, 1, 1.5, 0.0);
  CHECK(chain.solve() == 1.5);
  CHECK(chain.in_source_segment(0));
  CHECK_FALSE(chain.in_source_segment(1));
}

TEST_CASE("rejects negative capacities and double solves") {
  MaxFlowGraph g(2);
  CHECK_THROWS(g.add_terminal_weights(0, -1.0, 0.0));
  CHECK_THROWS(g.add_edge(0, 1, -1.0, 0.0));
  g.solve();
  CHECK_THROWS(g.solve());
}

TEST_CASE("max flow equals Edmonds-Karp and the cut is minimal") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> cap(0.0, 10.0);
  std::bernoulli_distribution sparse(0.35);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 9;
    MaxFlowGraph g(n);
    Reference ref(n);
    std::vector<std::vector<double>> arcs(static_cast<std::size_t>(n + 2), std::vector<double>(static_cast<std::size_t>(n + 2), 0.0));
    for (int i = 0; i < n; ++i) {
      const double a = sparse(rng) ? cap(rng) : 0.0;
      const double b = sparse(rng) ? cap(rng) : 0.0;
      g.add_terminal_weights(i, a, b);
      ref.cap[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)] += a;
      ref.cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(n + 1)] += b;
      arcs[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)] += a;
      arcs[static_cast<std::size_t>(i)][static_cast<std::size_t>(n + 1)] += b;
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (!sparse(rng)) continue;
        const double ab = cap(rng), ba = sparse(rng) ? cap(rng) : 0.0;
        g.add_edge(i, j, ab, ba);
        ref.cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += ab;
        ref.cap[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] += ba;
        arcs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += ab;
        arcs[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] += ba;
      }
    const double f = g.solve();
    CHECK(f == doctest::Approx(ref.solve()).epsilon(1e-9));
    double cut = 0.0;
    auto side = [&](int v) { return v == n ? true : v == n + 1 ? false : g.in_source_segment(v); };
    for (int u = 0; u < n + 2; ++u)
      for (int v = 0; v < n + 2; ++v)
        if (side(u) && !side(v)) cut += arcs[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
    CHECK(cut == doctest::Approx(f).epsilon(1e-9));
  }
}
