#pragma once

// Conditional-probability requests: parsing, compilation into a join-path
// plan over a MarginalStore, and native evaluation.
//
// Request grammar (whitespace is insignificant):
//
//   request := "P" "(" name ("," name)* [ "|" name "=" label ("," name "=" label)* ] ")"
//
// A name or label is any non-empty run of characters other than whitespace
// and the punctuation ( ) , | =

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reljt/error.hpp"
#include "reljt/hypertree.hpp"
#include "reljt/propagation.hpp"
#include "reljt/relation.hpp"

namespace reljt {

/// p(targets | evidence). Targets keep the order they were written in.
struct ProbabilityQuery {
  std::vector<VarId> targets;
  std::vector<Assignment> evidence;

  Schema target_schema() const {
    Schema s = targets;
    std::sort(s.begin(), s.end());
    return s;
  }

  /// targets ∪ evidence variables, sorted.
  Schema variables() const {
    Schema s = target_schema();
    for (const auto& a : evidence) s = schema_union(s, Schema{a.var});
    return s;
  }
};

namespace detail {

class RequestLexer {
 public:
  explicit RequestLexer(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) throw SyntaxError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  // Returns the word and its starting offset.
  std::pair<std::string, std::size_t> word(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
    if (pos_ == start) throw SyntaxError(std::string("expected ") + what, start);
    return {std::string(text_.substr(start, pos_ - start)), start};
  }

  void expect_end() {
    skip_space();
    if (pos_ != text_.size()) throw SyntaxError("unexpected trailing text", pos_);
  }

 private:
  static bool is_delimiter(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' || c == '|' || c == '=';
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses and validates a request against the model's variables.
inline ProbabilityQuery parse_request(std::string_view text, const VariableTable& table) {
  detail::RequestLexer lex(text);
  lex.skip_space();
  auto [head, head_at] = lex.word("'P'");
  if (head != "P") throw SyntaxError("expected 'P'", head_at);
  lex.expect('(');

  ProbabilityQuery q;
  do {
    auto [name, at] = lex.word("a variable name");
    VarId v = table.id(name);
    if (std::find(q.targets.begin(), q.targets.end(), v) != q.targets.end()) {
      throw SyntaxError("variable '" + name + "' listed twice", at);
    }
    q.targets.push_back(v);
  } while (lex.accept(','));

  if (lex.accept('|')) {
    do {
      auto [name, at] = lex.word("a variable name");
      lex.expect('=');
      auto [label, label_at] = lex.word("a value label");
      VarId v = table.id(name);
      if (std::find(q.targets.begin(), q.targets.end(), v) != q.targets.end()) {
        throw TargetEvidenceOverlap("variable '" + name + "' is both a target and evidence");
      }
      for (const auto& a : q.evidence) {
        if (a.var == v) throw SyntaxError("evidence on '" + name + "' given twice", at);
      }
      q.evidence.push_back(Assignment{v, table.label_index(v, label)});
    } while (lex.accept(','));
  }
  lex.expect(')');
  lex.expect_end();
  return q;
}

/// One relation of the join-path. `separator` is empty for the first step.
struct PlanStep {
  std::size_t position = 0;
  Schema separator;
  std::vector<Assignment> evidence;
};

/// Join-path evaluation plan. The answer is Ψ_κ ⊗ Ψ̂_κ^{-1} where
/// Φ_ξ = ((M_1 ⊗′ M_2) ⊗′ …) over the evidence-selected path marginals and
/// Ψ_κ = Φ_ξ^{↓targets}.
struct QueryPlan {
  ProbabilityQuery query;
  Schema targets;
  std::vector<PlanStep> steps;

  std::size_t join_count() const { return steps.empty() ? 0 : steps.size() - 1; }
  std::vector<std::size_t> path() const {
    std::vector<std::size_t> out;
    for (const auto& s : steps) out.push_back(s.position);
    return out;
  }
};

namespace detail {

inline QueryPlan plan_over(const ProbabilityQuery& q, const HypertreeStructure& s, std::vector<std::size_t> path) {
  QueryPlan plan{q, q.target_schema(), {}};
  for (std::size_t i = 0; i < path.size(); ++i) {
    PlanStep step;
    step.position = path[i];
    if (i > 0) {
      Schema earlier;
      for (std::size_t j = 0; j < i; ++j) earlier = schema_union(earlier, s.edge_at(path[j]));
      step.separator = schema_intersection(s.edge_at(path[i]), earlier);
    }
    for (const auto& a : q.evidence) {
      if (contains(s.edge_at(path[i]), a.var)) step.evidence.push_back(a);
    }
    plan.steps.push_back(std::move(step));
  }
  Schema covered;
  for (std::size_t p : path) covered = schema_union(covered, s.edge_at(p));
  if (!is_subset(q.variables(), covered)) throw Error("join-path does not cover the query variables");
  return plan;
}

}  // namespace detail

inline QueryPlan compile_plan(const ProbabilityQuery& q, const MarginalStore& store) {
  const auto& s = store.structure();
  return detail::plan_over(q, s, join_path(s, q.variables()));
}

/// Plan with explicit pins: the path is the minimal subtree spanning `pins`
/// (ordering positions), which must cover every query variable.
inline QueryPlan compile_plan_pinned(const ProbabilityQuery& q, const MarginalStore& store,
                                     const std::vector<std::size_t>& pins) {
  const auto& s = store.structure();
  for (std::size_t p : pins) {
    if (p >= s.size()) throw NotAMember("pin position out of range");
  }
  return detail::plan_over(q, s, minimal_subtree(s, pins));
}

/// Φ_ξ: the evidence-selected path marginals chained with ⊗′, left to right.
/// Each step's separator inverse is taken from the prior marginal, restricted
/// only by evidence on separator variables.
inline Relation joined_path(const QueryPlan& plan, const MarginalStore& store) {
  if (plan.steps.empty()) throw Error("plan has no steps");
  const auto& evidence = plan.query.evidence;
  Relation acc = select_evidence(store.marginal_at(plan.steps[0].position), evidence);
  for (std::size_t i = 1; i < plan.steps.size(); ++i) {
    const Relation& m = store.marginal_at(plan.steps[i].position);
    const Relation separator = select_evidence(marginalize(m, plan.steps[i].separator), evidence);
    acc = product_join(product_join(acc, select_evidence(m, evidence)), inverse(separator));
  }
  return acc;
}

/// Normalized answer on exactly the target variables.
inline Relation execute_plan(const QueryPlan& plan, const MarginalStore& store) {
  Relation psi = marginalize(joined_path(plan, store), plan.targets);
  if (!(psi.total() > 0.0)) throw ZeroMass("evidence has zero probability");
  return normalize(psi).renamed("f");
}

inline Relation answer(std::string_view text, const MarginalStore& store) {
  const ProbabilityQuery q = parse_request(text, store.table());
  return execute_plan(compile_plan(q, store), store);
}

}  // namespace reljt
