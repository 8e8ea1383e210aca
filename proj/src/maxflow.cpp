#include "coskel/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace coskel {

MaxFlowGraph::MaxFlowGraph(int node_count, int edge_hint) {
  if (node_count < 0) throw std::invalid_argument("negative node count");
  nodes_.resize(static_cast<std::size_t>(node_count));
  arcs_.reserve(static_cast<std::size_t>(std::max(0, edge_hint)) * 2);
}

void MaxFlowGraph::add_terminal_weights(NodeId n, double source_cap, double sink_cap) {
  if (source_cap < 0.0 || sink_cap < 0.0) throw std::invalid_argument("negative terminal capacity");
  // Only the difference matters for the cut; the common part is sent directly.
  Node& node = nodes_.at(static_cast<std::size_t>(n));
  const double total_source = std::max(node.tr_cap, 0.0) + source_cap;
  const double total_sink = std::max(-node.tr_cap, 0.0) + sink_cap;
  flow_ += std::min(total_source, total_sink);
  node.tr_cap = total_source - total_sink;
}

void MaxFlowGraph::add_edge(NodeId a, NodeId b, double cap_ab, double cap_ba) {
  if (cap_ab < 0.0 || cap_ba < 0.0) throw std::invalid_argument("negative edge capacity");
  if (a == b) return;
  const int ab = static_cast<int>(arcs_.size());
  arcs_.push_back({b, nodes_.at(static_cast<std::size_t>(a)).first_arc, cap_ab});
  nodes_[static_cast<std::size_t>(a)].first_arc = ab;
  arcs_.push_back({a, nodes_.at(static_cast<std::size_t>(b)).first_arc, cap_ba});
  nodes_[static_cast<std::size_t>(b)].first_arc = ab + 1;
}

void MaxFlowGraph::set_active(int n) {
  Node& node = nodes_[static_cast<std::size_t>(n)];
  if (node.active) return;
  node.active = true;
  active_.push_back(n);
}

int MaxFlowGraph::next_active() {
  while (!active_.empty()) {
    const int n = active_.front();
    active_.pop_front();
    Node& node = nodes_[static_cast<std::size_t>(n)];
    node.active = false;
    if (node.parent != kNone) return n;
  }
  return kNone;
}

double MaxFlowGraph::solve() {
  if (solved_) throw std::logic_error("MaxFlowGraph::solve called twice");
  solved_ = true;

  for (int n = 0; n < node_count(); ++n) {
    Node& node = nodes_[static_cast<std::size_t>(n)];
    if (node.tr_cap != 0.0) {
      node.is_sink = node.tr_cap < 0.0;
      node.parent = kTerminal;
      node.ts = 0;
      node.dist = 1;
      set_active(n);
    }
  }

  int current = kNone;
  while (true) {
    if (current == kNone || nodes_[static_cast<std::size_t>(current)].parent == kNone) {
      current = next_active();
      if (current == kNone) break;
    }
    const Node& cur = nodes_[static_cast<std::size_t>(current)];

    // Grow the tree of `current` until it touches the opposite tree.
    int middle = kNone;
    if (!cur.is_sink) {
      for (int a = cur.first_arc; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
        if (arcs_[static_cast<std::size_t>(a)].r_cap <= 0.0) continue;
        const int j = arcs_[static_cast<std::size_t>(a)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.parent == kNone) {
          nj.is_sink = false;
          nj.parent = sister(a);
          nj.ts = cur.ts;
          nj.dist = cur.dist + 1;
          set_active(j);
        } else if (nj.is_sink) {
          middle = a;
          break;
        } else if (nj.ts <= cur.ts && nj.dist > cur.dist) {
          nj.parent = sister(a);
          nj.ts = cur.ts;
          nj.dist = cur.dist + 1;
        }
      }
    } else {
      for (int a = cur.first_arc; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
        if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= 0.0) continue;
        const int j = arcs_[static_cast<std::size_t>(a)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.parent == kNone) {
          nj.is_sink = true;
          nj.parent = sister(a);
          nj.ts = cur.ts;
          nj.dist = cur.dist + 1;
          set_active(j);
        } else if (!nj.is_sink) {
          middle = sister(a);
          break;
        } else if (nj.ts <= cur.ts && nj.dist > cur.dist) {
          nj.parent = sister(a);
          nj.ts = cur.ts;
          nj.dist = cur.dist + 1;
        }
      }
    }

    ++time_;
    if (middle != kNone) {
      // `current` may still have more arcs to explore: it stays the growth node.
      augment(middle);
      adopt_orphans();
    } else {
      current = kNone;
    }
  }
  return flow_;
}

void MaxFlowGraph::augment(int middle_arc) {
  // Bottleneck along source tree -> middle arc -> sink tree.
  double bottleneck = arcs_[static_cast<std::size_t>(middle_arc)].r_cap;
  int i = tail(middle_arc);
  while (true) {
    const int a = nodes_[static_cast<std::size_t>(i)].parent;
    if (a == kTerminal) break;
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(sister(a))].r_cap);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, nodes_[static_cast<std::size_t>(i)].tr_cap);
  i = arcs_[static_cast<std::size_t>(middle_arc)].head;
  while (true) {
    const int a = nodes_[static_cast<std::size_t>(i)].parent;
    if (a == kTerminal) break;
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(a)].r_cap);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, -nodes_[static_cast<std::size_t>(i)].tr_cap);

  arcs_[static_cast<std::size_t>(middle_arc)].r_cap -= bottleneck;
  arcs_[static_cast<std::size_t>(sister(middle_arc))].r_cap += bottleneck;

  i = tail(middle_arc);
  while (true) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    const int a = node.parent;
    if (a == kTerminal) {
      node.tr_cap -= bottleneck;
      if (node.tr_cap <= 0.0) {
        node.tr_cap = 0.0;
        node.parent = kOrphan;
        orphans_.push_front(i);
      }
      break;
    }
    arcs_[static_cast<std::size_t>(a)].r_cap += bottleneck;
    Arc& down = arcs_[static_cast<std::size_t>(sister(a))];
    down.r_cap -= bottleneck;
    const int next = arcs_[static_cast<std::size_t>(a)].head;
    if (down.r_cap <= 0.0) {
      down.r_cap = 0.0;
      node.parent = kOrphan;
      orphans_.push_front(i);
    }
    i = next;
  }

  i = arcs_[static_cast<std::size_t>(middle_arc)].head;
  while (true) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    const int a = node.parent;
    if (a == kTerminal) {
      node.tr_cap += bottleneck;
      if (node.tr_cap >= 0.0) {
        node.tr_cap = 0.0;
        node.parent = kOrphan;
        orphans_.push_front(i);
      }
      break;
    }
    arcs_[static_cast<std::size_t>(sister(a))].r_cap += bottleneck;
    Arc& up = arcs_[static_cast<std::size_t>(a)];
    up.r_cap -= bottleneck;
    const int next = up.head;
    if (up.r_cap <= 0.0) {
      up.r_cap = 0.0;
      node.parent = kOrphan;
      orphans_.push_front(i);
    }
    i = next;
  }
  flow_ += bottleneck;
}

bool MaxFlowGraph::origin_distance(int j, int& distance) {
  int d = 0;
  int k = j;
  while (true) {
    const Node& nk = nodes_[static_cast<std::size_t>(k)];
    if (nk.ts == time_) {
      d += nk.dist;
      break;
    }
    const int a = nk.parent;
    ++d;
    if (a == kTerminal) {
      break;
    }
    if (a == kOrphan || a == kNone) return false;
    k = arcs_[static_cast<std::size_t>(a)].head;
  }
  // Cache distances along the verified path.
  int dd = d;
  for (k = j; nodes_[static_cast<std::size_t>(k)].ts != time_;) {
    Node& nk = nodes_[static_cast<std::size_t>(k)];
    nk.ts = time_;
    nk.dist = dd--;
    if (nk.parent == kTerminal) break;
    k = arcs_[static_cast<std::size_t>(nk.parent)].head;
  }
  distance = d;
  return true;
}

void MaxFlowGraph::adopt_orphans() {
  while (!orphans_.empty()) {
    const int n = orphans_.front();
    orphans_.pop_front();
    process_orphan(n);
  }
}

void MaxFlowGraph::process_orphan(int n) {
  Node& node = nodes_[static_cast<std::size_t>(n)];
  const bool sink_tree = node.is_sink;
  int best_arc = kNone;
  int best_dist = std::numeric_limits<int>::max();

  for (int a = node.first_arc; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
    // Residual capacity from the candidate parent into n (source tree) or n into it (sink).
    const double cap = sink_tree ? arcs_[static_cast<std::size_t>(a)].r_cap
                                 : arcs_[static_cast<std::size_t>(sister(a))].r_cap;
    if (cap <= 0.0) continue;
    const int j = arcs_[static_cast<std::size_t>(a)].head;
    const Node& nj = nodes_[static_cast<std::size_t>(j)];
    if (nj.is_sink != sink_tree || nj.parent == kNone) continue;
    int d = 0;
    if (origin_distance(j, d) && d < best_dist) {
      best_arc = a;
      best_dist = d;
    }
  }

  if (best_arc != kNone) {
    node.parent = best_arc;
    node.ts = time_;
    node.dist = best_dist + 1;
    return;
  }

  // No valid parent: n becomes free and its children become orphans.
  node.ts = 0;
  for (int a = node.first_arc; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
    const int j = arcs_[static_cast<std::size_t>(a)].head;
    Node& nj = nodes_[static_cast<std::size_t>(j)];
    if (nj.is_sink != sink_tree || nj.parent == kNone) continue;
    const double cap = sink_tree ? arcs_[static_cast<std::size_t>(a)].r_cap
                                 : arcs_[static_cast<std::size_t>(sister(a))].r_cap;
    if (cap > 0.0) set_active(j);
    if (nj.parent != kTerminal && nj.parent != kOrphan &&
        arcs_[static_cast<std::size_t>(nj.parent)].head == n) {
      nj.parent = kOrphan;
      orphans_.push_back(j);
    }
  }
  node.parent = kNone;
}

bool MaxFlowGraph::in_source_segment(NodeId n) const {
  if (!solved_) throw std::logic_error("in_source_segment before solve");
  const Node& node = nodes_.at(static_cast<std::size_t>(n));
  return node.parent != kNone && !node.is_sink;
}

}  // namespace coskel
