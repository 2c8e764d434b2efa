#pragma once

// Potentials to marginals: the backward pass collects messages towards the
// root of a construction ordering, the forward pass distributes the root
// marginal back out to every hyperedge.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reljt/error.hpp"
#include "reljt/hypertree.hpp"
#include "reljt/relation.hpp"

namespace reljt {

/// Variables, a hypergraph, and one potential per hyperedge whose schema is
/// exactly that hyperedge.
class MarkovModel {
 public:
  MarkovModel(TablePtr table, std::vector<Relation> potentials, std::vector<std::string> labels = {})
      : table_(std::move(table)) {
    if (!table_) throw Error("model needs a variable table");
    if (potentials.empty()) throw Error("model has no potentials");
    std::vector<Schema> edges;
    for (const auto& p : potentials) {
      if (p.table_ptr() != table_) throw SchemaMismatch("potential is over a different variable table");
      edges.push_back(p.schema());
    }
    hypergraph_ = Hypergraph(std::move(edges), std::move(labels));
    const Schema used = hypergraph_.variables();
    for (VarId v : table_->all()) {
      if (!contains(used, v)) throw Error("variable '" + table_->name(v) + "' is not used by any potential");
    }
    for (std::size_t i = 0; i < potentials.size(); ++i) {
      potentials_.push_back(potentials[i].renamed("f_" + hypergraph_.label(i)));
    }
  }

  const TablePtr& table_ptr() const { return table_; }
  const VariableTable& table() const { return *table_; }
  const Hypergraph& hypergraph() const { return hypergraph_; }
  const std::vector<Relation>& potentials() const { return potentials_; }
  const Relation& potential(std::size_t i) const { return potentials_.at(i); }

 private:
  TablePtr table_;
  Hypergraph hypergraph_;
  std::vector<Relation> potentials_;
};

/// Output of the backward pass. messages[i] is (Φ^i_{h_i})^{↓h_i∩h_{b(i)}}
/// for position i ≥ 1; messages[0] is empty.
struct BackwardResult {
  Relation root;
  std::vector<std::optional<Relation>> messages;
};

/// Per-hyperedge marginals of the joint, indexed by ordering position.
///
/// marginals are unnormalized: each sums to total_mass(). conditionals hold
/// the forward-pass factor Φ^i_{h_i} ⊗ (message_i)^{-1} (empty at the root).
class MarginalStore {
 public:
  MarginalStore(HypertreeStructure structure, std::vector<Relation> marginals,
                std::vector<std::optional<Relation>> conditionals, std::vector<std::optional<Relation>> messages)
      : structure_(std::move(structure)), marginals_(std::move(marginals)),
        conditionals_(std::move(conditionals)), messages_(std::move(messages)) {
    total_ = marginals_.at(0).total();
  }

  const HypertreeStructure& structure() const { return structure_; }
  const VariableTable& table() const { return marginals_.front().table(); }
  const TablePtr& table_ptr() const { return marginals_.front().table_ptr(); }
  std::size_t size() const { return marginals_.size(); }
  double total_mass() const { return total_; }

  const Relation& marginal_at(std::size_t position) const { return marginals_.at(position); }
  const std::optional<Relation>& conditional_at(std::size_t position) const { return conditionals_.at(position); }
  const std::optional<Relation>& message_at(std::size_t position) const { return messages_.at(position); }

  /// Marginal by hyperedge index of the model's hypergraph.
  const Relation& marginal(std::size_t edge_index) const {
    return marginals_.at(structure_.position_of(edge_index));
  }

  const Relation& marginal(const std::string& label) const {
    const auto& labels = structure_.hypergraph.labels();
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw NotAMember("no hyperedge labelled '" + label + "'");
    return marginal(static_cast<std::size_t>(it - labels.begin()));
  }

  Relation normalized_at(std::size_t position) const { return normalize(marginals_.at(position)); }
  Relation normalized(std::size_t edge_index) const { return normalize(marginal(edge_index)); }

 private:
  HypertreeStructure structure_;
  std::vector<Relation> marginals_;
  std::vector<std::optional<Relation>> conditionals_;
  std::vector<std::optional<Relation>> messages_;
  double total_ = 0.0;
};

namespace detail {

inline void require_matching_structure(const MarkovModel& model, const HypertreeStructure& s) {
  if (model.hypergraph().edges() != s.hypergraph.edges()) {
    throw SchemaMismatch("structure was built for a different hypergraph");
  }
  if (!is_valid_structure(s)) throw Error("structure is not a valid construction ordering");
}

// Φ^i_{h_i}: the potential with every child's message absorbed, in the
// order the backward pass absorbs them (highest position first).
inline Relation absorbed(const MarkovModel& model, const HypertreeStructure& s,
                         const std::vector<std::optional<Relation>>& messages, std::size_t position) {
  Relation out = model.potential(s.ordering[position]);
  auto kids = s.children(position);
  for (auto it = kids.rbegin(); it != kids.rend(); ++it) out = product_join(out, *messages.at(*it));
  return out;
}

}  // namespace detail

/// Iterates i = n..2, replacing Φ_{h_{b(i)}} by Φ_{h_{b(i)}} ⊗ (Φ^i_{h_i})^{↓h_i∩h_{b(i)}}.
/// Returns Φ^{↓h_1} (unnormalized) and every separator message.
inline BackwardResult backward_pass(const MarkovModel& model, const HypertreeStructure& s) {
  detail::require_matching_structure(model, s);
  std::vector<Relation> working;
  for (std::size_t e : s.ordering) working.push_back(model.potential(e));
  std::vector<std::optional<Relation>> messages(s.size());
  for (std::size_t i = s.size(); i-- > 1;) {
    Relation message = marginalize(working[i], s.separator(i));
    std::size_t parent = *s.branch[i];
    working[parent] = product_join(working[parent], message);
    messages[i] = std::move(message);
  }
  return BackwardResult{std::move(working[0]), std::move(messages)};
}

/// Φ^{↓h_i} = Φ^i_{h_i} ⊗ ((Φ^i_{h_i})^{↓sep})^{-1} ⊗ (Φ^{↓h_{b(i)}})^{↓sep}, parents first.
inline MarginalStore forward_pass(const MarkovModel& model, const HypertreeStructure& s, const Relation& root,
                                  const std::vector<std::optional<Relation>>& messages) {
  detail::require_matching_structure(model, s);
  if (messages.size() != s.size()) throw Error("message count does not match the structure");
  std::vector<Relation> marginals{root};
  std::vector<std::optional<Relation>> conditionals(s.size());
  for (std::size_t i = 1; i < s.size(); ++i) {
    const Relation conditional = product_join(detail::absorbed(model, s, messages, i), inverse(*messages[i]));
    const Relation& parent = marginals.at(*s.branch[i]);
    marginals.push_back(product_join(conditional, marginalize(parent, s.separator(i)))
                            .renamed("f_" + s.label_at(i)));
    conditionals[i] = conditional;
  }
  marginals[0] = marginals[0].renamed("f_" + s.label_at(0));
  return MarginalStore(s, std::move(marginals), std::move(conditionals), messages);
}

/// construction_ordering + backward_pass + forward_pass.
inline MarginalStore propagate(const MarkovModel& model, std::optional<std::size_t> root = std::nullopt) {
  HypertreeStructure s;
  try {
    s = construction_ordering(model.hypergraph(), root);
  } catch (const NotHypertree& e) {
    Hypergraph cover = build_cover(model.hypergraph());
    throw NotHypertree(std::string(e.what()) + "; a hypertree cover is " + cover.text(model.table()), e.core());
  }
  BackwardResult back = backward_pass(model, s);
  if (!(back.root.total() > 0.0)) throw ZeroMass("the product of the potentials has zero total mass");
  return forward_pass(model, s, back.root, back.messages);
}

/// Same distribution over a hypertree cover of the model's hypergraph: each
/// potential is multiplied into the first cover hyperedge containing it.
inline MarkovModel cover_model(const MarkovModel& model) {
  const Hypergraph cover = build_cover(model.hypergraph());
  const auto assignment = cover_assignment(cover, model.hypergraph());
  std::vector<Relation> potentials;
  for (std::size_t k = 0; k < cover.size(); ++k) {
    Relation p = unit_relation(model.table_ptr(), cover.edge(k));
    for (std::size_t h = 0; h < assignment.size(); ++h) {
      if (assignment[h] == k) p = product_join(p, model.potential(h));
    }
    potentials.push_back(std::move(p));
  }
  return MarkovModel(model.table_ptr(), std::move(potentials), cover.labels());
}

}  // namespace reljt
