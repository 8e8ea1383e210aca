#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace coskel {

/// Augmenting-path max-flow with search-tree reuse (Boykov-Kolmogorov). Built for the sparse
/// grid graphs of binary segmentation: each node carries a signed terminal capacity and
/// a handful of pairwise arcs.
class MaxFlowGraph {
 public:
  using NodeId = int;

  explicit MaxFlowGraph(int node_count, int edge_hint = 0);

  int node_count() const noexcept { return static_cast<int>(nodes_.size()); }

  /// Adds capacity source->n and n->sink. Both must be >= 0.
  void add_terminal_weights(NodeId n, double source_cap, double sink_cap);
  /// Adds arc pair a->b (cap_ab) and b->a (cap_ba), both >= 0.
  void add_edge(NodeId a, NodeId b, double cap_ab, double cap_ba);

  /// Runs to completion and returns the max-flow value. Call once.
  double solve();

  /// After solve(): whether n ends on the source side of the minimum cut.
  bool in_source_segment(NodeId n) const;

 private:
  static constexpr int kNone = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;

  struct Node {
    int first_arc = kNone;
    int parent = kNone;  // arc index towards the parent, or one of the markers above
    double tr_cap = 0.0; // >0: residual from source, <0: residual to sink
    std::int64_t ts = 0;
    int dist = 0;
    bool is_sink = false;
    bool active = false;
  };
  struct Arc {
    int head = 0;
    int next = kNone;
    double r_cap = 0.0;
  };

  static int sister(int a) noexcept { return a ^ 1; }
  int tail(int a) const noexcept { return arcs_[static_cast<std::size_t>(sister(a))].head; }

  void set_active(int n);
  int next_active();
  void augment(int middle_arc);
  void adopt_orphans();
  void process_orphan(int n);
  // True when `j`'s tree path reaches a terminal; fills the distance to it.
  bool origin_distance(int j, int& distance);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::deque<int> active_;
  std::deque<int> orphans_;
  std::int64_t time_ = 0;
  double flow_ = 0.0;
  bool solved_ = false;
};

}  // namespace coskel
