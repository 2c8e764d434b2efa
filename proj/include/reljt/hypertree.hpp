#pragma once

// Hypergraph structure: twigs and branches, hypertree recognition by
// iterated twig removal, branching functions (the junction tree), hypertree
// covers and query join-paths.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reljt/error.hpp"
#include "reljt/relation.hpp"

namespace reljt {

/// Ordered family of distinct, non-empty variable sets with stable labels.
class Hypergraph {
 public:
  Hypergraph() = default;

  explicit Hypergraph(std::vector<Schema> edges, std::vector<std::string> labels = {})
      : edges_(std::move(edges)), labels_(std::move(labels)) {
    if (labels_.empty()) {
      for (std::size_t i = 0; i < edges_.size(); ++i) labels_.push_back("h" + std::to_string(i + 1));
    }
    if (labels_.size() != edges_.size()) throw Error("hyperedge label count does not match edge count");
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      auto& e = edges_[i];
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
      if (e.empty()) throw Error("hyperedge " + labels_[i] + " is empty");
      for (std::size_t j = 0; j < i; ++j) {
        if (edges_[j] == e) {
          throw DuplicateHyperedge("hyperedges " + labels_[j] + " and " + labels_[i] + " are the same set");
        }
        if (labels_[j] == labels_[i]) throw Error("duplicate hyperedge label " + labels_[i]);
      }
    }
  }

  static Hypergraph from_names(const VariableTable& table,
                               const std::vector<std::vector<std::string>>& edges,
                               std::vector<std::string> labels = {}) {
    std::vector<Schema> schemas;
    for (const auto& e : edges) schemas.push_back(table.schema(e));
    return Hypergraph(std::move(schemas), std::move(labels));
  }

  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  const Schema& edge(std::size_t i) const { return edges_.at(i); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<Schema>& edges() const { return edges_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// ∪ℋ
  Schema variables() const {
    Schema all;
    for (const auto& e : edges_) all = schema_union(all, e);
    return all;
  }

  std::optional<std::size_t> index_of(const Schema& edge) const {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (edges_[i] == edge) return i;
    }
    return std::nullopt;
  }

  std::string text(const VariableTable& table) const {
    std::string out;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (i) out += " ";
      out += labels_[i] + "=" + schema_text(table, edges_[i]);
    }
    return out;
  }

 private:
  std::vector<Schema> edges_;
  std::vector<std::string> labels_;
};

namespace detail {

// Branch of `t` within the active sub-hypergraph, lowest index first.
inline std::optional<std::size_t> branch_among(const Hypergraph& h, const std::vector<bool>& active,
                                               std::size_t t) {
  Schema rest;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i != t && active[i]) rest = schema_union(rest, h.edge(i));
  }
  const Schema shared = schema_intersection(h.edge(t), rest);
  for (std::size_t b = 0; b < h.size(); ++b) {
    if (b == t || !active[b]) continue;
    if (schema_intersection(h.edge(t), h.edge(b)) == shared) return b;
  }
  return std::nullopt;
}

// Remove twigs (highest index first, never `keep`) until one edge is left
// or no twig exists. Returns the removed (twig, branch) pairs in order.
inline std::vector<std::pair<std::size_t, std::size_t>> reduce(const Hypergraph& h, std::vector<bool>& active,
                                                               std::optional<std::size_t> keep) {
  std::vector<std::pair<std::size_t, std::size_t>> removed;
  std::size_t remaining = static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
  while (remaining > 1) {
    bool progressed = false;
    for (std::size_t t = h.size(); t-- > 0;) {
      if (!active[t] || (keep && *keep == t)) continue;
      if (auto b = branch_among(h, active, t)) {
        removed.emplace_back(t, *b);
        active[t] = false;
        --remaining;
        progressed = true;
        break;
      }
    }
    if (!progressed) break;
  }
  return removed;
}

}  // namespace detail

/// The branch for twig `t` in `h`, or nothing when `t` is not a twig.
inline std::optional<std::size_t> is_twig(const Hypergraph& h, std::size_t t) {
  if (t >= h.size()) throw NotAMember("hyperedge index " + std::to_string(t) + " is not in the hypergraph");
  if (h.size() < 2) return std::nullopt;
  return detail::branch_among(h, std::vector<bool>(h.size(), true), t);
}

/// Hyperedges left after removing every possible twig. Empty when `h` is a
/// hypertree.
inline std::vector<std::size_t> irreducible_core(const Hypergraph& h) {
  std::vector<bool> active(h.size(), true);
  detail::reduce(h, active, std::nullopt);
  std::vector<std::size_t> core;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (active[i]) core.push_back(i);
  }
  if (core.size() <= 1) core.clear();
  return core;
}

/// A construction ordering h_1..h_n together with its branching function.
/// Positions are 0-based: branch[i] is the position of h_{b(i)} and
/// branch[0] is empty.
struct HypertreeStructure {
  Hypergraph hypergraph;
  std::vector<std::size_t> ordering;
  std::vector<std::optional<std::size_t>> branch;

  std::size_t size() const { return ordering.size(); }
  const Schema& edge_at(std::size_t position) const { return hypergraph.edge(ordering.at(position)); }
  const std::string& label_at(std::size_t position) const { return hypergraph.label(ordering.at(position)); }

  /// h_i ∩ h_{b(i)}; empty for the root.
  Schema separator(std::size_t position) const {
    if (!branch.at(position)) return {};
    return schema_intersection(edge_at(position), edge_at(*branch[position]));
  }

  std::size_t position_of(std::size_t edge_index) const {
    auto it = std::find(ordering.begin(), ordering.end(), edge_index);
    if (it == ordering.end()) throw NotAMember("hyperedge is not part of the structure");
    return static_cast<std::size_t>(it - ordering.begin());
  }

  std::vector<std::size_t> children(std::size_t position) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < branch.size(); ++i) {
      if (branch[i] && *branch[i] == position) out.push_back(i);
    }
    return out;
  }
};

/// Checks the twig condition h_i ∩ (h_1 ∪ … ∪ h_{i-1}) = h_i ∩ h_{b(i)} at every
/// position and that the ordering is a permutation of the hyperedges.
inline bool is_valid_structure(const HypertreeStructure& s) {
  const std::size_t n = s.hypergraph.size();
  if (n == 0 || s.ordering.size() != n || s.branch.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t e : s.ordering) {
    if (e >= n || seen[e]) return false;
    seen[e] = true;
  }
  if (s.branch[0]) return false;
  Schema prefix = s.edge_at(0);
  for (std::size_t i = 1; i < n; ++i) {
    if (!s.branch[i] || *s.branch[i] >= i) return false;
    if (schema_intersection(s.edge_at(i), prefix) != s.separator(i)) return false;
    prefix = schema_union(prefix, s.edge_at(i));
  }
  return true;
}

/// Builds a structure from an explicit ordering and branching (positions,
/// 0-based), rejecting it unless it passes validation.
inline HypertreeStructure make_structure(Hypergraph h, std::vector<std::size_t> ordering,
                                         std::vector<std::optional<std::size_t>> branch) {
  HypertreeStructure s{std::move(h), std::move(ordering), std::move(branch)};
  if (!is_valid_structure(s)) throw Error("ordering and branching do not form a hypertree construction ordering");
  return s;
}

/// Construction ordering by iterated twig removal. The root (default: the
/// first hyperedge) is placed first; the highest-index twig is removed at each
/// step, so an input already listed in construction order keeps its order.
inline HypertreeStructure construction_ordering(const Hypergraph& h, std::optional<std::size_t> root = std::nullopt) {
  if (h.empty()) throw Error("hypergraph is empty");
  const std::size_t r = root.value_or(0);
  if (r >= h.size()) throw NotAMember("root " + std::to_string(r) + " is not in the hypergraph");

  std::vector<bool> active(h.size(), true);
  auto removed = detail::reduce(h, active, r);
  if (removed.size() + 1 != h.size()) {
    auto core = irreducible_core(h);
    if (core.empty()) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (active[i]) core.push_back(i);
      }
    }
    std::string msg = "hypergraph is not a hypertree; irreducible core:";
    for (std::size_t i : core) msg += " " + h.label(i);
    throw NotHypertree(msg, std::move(core));
  }

  HypertreeStructure s;
  s.hypergraph = h;
  s.ordering.push_back(r);
  for (auto it = removed.rbegin(); it != removed.rend(); ++it) s.ordering.push_back(it->first);
  s.branch.assign(h.size(), std::nullopt);
  for (const auto& [twig, br] : removed) s.branch[s.position_of(twig)] = s.position_of(br);
  return s;
}

inline bool is_hypertree(const Hypergraph& h) { return !h.empty() && irreducible_core(h).empty(); }

/// True iff every hyperedge of `h` lies inside some hyperedge of the hypertree `k`.
inline bool is_hypertree_cover(const Hypergraph& k, const Hypergraph& h) {
  construction_ordering(k);
  return std::all_of(h.edges().begin(), h.edges().end(), [&](const Schema& e) {
    return std::any_of(k.edges().begin(), k.edges().end(), [&](const Schema& c) { return is_subset(e, c); });
  });
}

/// Index of the first hyperedge of `k` containing each hyperedge of `h`.
inline std::vector<std::size_t> cover_assignment(const Hypergraph& k, const Hypergraph& h) {
  std::vector<std::size_t> out;
  for (const auto& e : h.edges()) {
    std::size_t i = 0;
    while (i < k.size() && !is_subset(e, k.edge(i))) ++i;
    if (i == k.size()) throw Error("hyperedge is not covered");
    out.push_back(i);
  }
  return out;
}

/// Hypertree cover by greedy min-fill variable elimination (ties broken by
/// variable order). Cliques that equal an input hyperedge keep its label;
/// the others are labelled k1, k2, ...
inline Hypergraph build_cover(const Hypergraph& h) {
  if (h.empty()) throw Error("hypergraph is empty");
  std::map<VarId, std::set<VarId>> adjacent;
  for (const auto& e : h.edges()) {
    for (VarId a : e) {
      adjacent[a];
      for (VarId b : e) {
        if (a != b) adjacent[a].insert(b);
      }
    }
  }

  std::set<VarId> remaining;
  for (const auto& [v, nb] : adjacent) remaining.insert(v);
  std::vector<Schema> cliques;
  while (!remaining.empty()) {
    VarId best{};
    std::size_t best_fill = static_cast<std::size_t>(-1);
    for (VarId v : remaining) {
      std::vector<VarId> nb(adjacent[v].begin(), adjacent[v].end());
      std::size_t fill = 0;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j = i + 1; j < nb.size(); ++j) {
          if (!adjacent[nb[i]].contains(nb[j])) ++fill;
        }
      }
      if (fill < best_fill) {
        best_fill = fill;
        best = v;
      }
    }
    Schema clique(adjacent[best].begin(), adjacent[best].end());
    clique.push_back(best);
    std::sort(clique.begin(), clique.end());
    for (VarId a : adjacent[best]) {
      for (VarId b : adjacent[best]) {
        if (a != b) adjacent[a].insert(b);
      }
    }
    for (VarId a : adjacent[best]) adjacent[a].erase(best);
    adjacent.erase(best);
    remaining.erase(best);
    cliques.push_back(std::move(clique));
  }

  std::vector<Schema> maximal;
  for (std::size_t i = 0; i < cliques.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < cliques.size() && !dominated; ++j) {
      if (i == j || !is_subset(cliques[i], cliques[j])) continue;
      dominated = cliques[i] != cliques[j] || j < i;
    }
    if (!dominated) maximal.push_back(cliques[i]);
  }

  // Order cliques by the first input hyperedge they contain.
  auto first_covered = [&](const Schema& c) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (is_subset(h.edge(i), c)) return i;
    }
    return h.size();
  };
  std::stable_sort(maximal.begin(), maximal.end(),
                   [&](const Schema& a, const Schema& b) { return first_covered(a) < first_covered(b); });

  std::vector<std::string> labels;
  std::size_t fresh = 0;
  for (const auto& c : maximal) {
    auto same = h.index_of(c);
    labels.push_back(same ? h.label(*same) : "k" + std::to_string(++fresh));
  }
  // A fresh label could collide with an input label that was not reused.
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (i != j && labels[i] == labels[j]) labels[i] += "_" + std::to_string(i + 1);
    }
  }
  return Hypergraph(std::move(maximal), std::move(labels));
}

/// Minimal connected subtree of the junction tree spanning the given
/// positions, in increasing position order.
inline std::vector<std::size_t> minimal_subtree(const HypertreeStructure& s, const std::vector<std::size_t>& pins) {
  if (pins.empty()) return {};
  std::vector<std::size_t> depth(s.size(), 0);
  for (std::size_t i = 1; i < s.size(); ++i) depth[i] = depth[*s.branch[i]] + 1;

  auto lca = [&](std::size_t a, std::size_t b) {
    while (a != b) {
      if (depth[a] < depth[b]) std::swap(a, b);
      a = *s.branch[a];
    }
    return a;
  };
  std::size_t top = pins.front();
  for (std::size_t p : pins) top = lca(top, p);

  std::set<std::size_t> nodes{top};
  for (std::size_t p : pins) {
    for (std::size_t at = p; at != top; at = *s.branch[at]) nodes.insert(at);
  }
  return {nodes.begin(), nodes.end()};
}

/// Lowest ordering position whose hyperedge contains `v`.
inline std::size_t pin(const HypertreeStructure& s, VarId v) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (contains(s.edge_at(i), v)) return i;
  }
  throw UnknownVariable("variable does not occur in any hyperedge");
}

/// Join-path for a query: the smallest connected subtree of the junction
/// tree whose hyperedges cover `vars`; ties go to the lexicographically
/// smallest position list. For each candidate top node the cheapest subtree
/// is the union of the paths to the nearest hyperedge holding each variable,
/// which is unique because those hyperedges form a connected subtree.
inline std::vector<std::size_t> join_path(const HypertreeStructure& s, const Schema& vars) {
  for (VarId v : vars) pin(s, v);
  if (vars.empty()) return {};
  const std::size_t n = s.size();
  std::vector<std::vector<std::size_t>> adjacent(n);
  for (std::size_t i = 1; i < n; ++i) {
    adjacent[i].push_back(*s.branch[i]);
    adjacent[*s.branch[i]].push_back(i);
  }

  std::vector<std::size_t> best;
  for (std::size_t top = 0; top < n; ++top) {
    // Breadth-first parents towards `top`.
    std::vector<std::size_t> parent(n, n), order{top};
    parent[top] = top;
    for (std::size_t k = 0; k < order.size(); ++k) {
      for (std::size_t w : adjacent[order[k]]) {
        if (parent[w] == n) {
          parent[w] = order[k];
          order.push_back(w);
        }
      }
    }
    std::set<std::size_t> nodes{top};
    for (VarId v : vars) {
      std::size_t nearest = n;
      for (std::size_t p : order) {
        if (contains(s.edge_at(p), v)) {
          nearest = p;
          break;
        }
      }
      for (std::size_t at = nearest; at != top; at = parent[at]) nodes.insert(at);
    }
    std::vector<std::size_t> candidate(nodes.begin(), nodes.end());
    if (best.empty() || candidate.size() < best.size() || (candidate.size() == best.size() && candidate < best)) {
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace reljt
