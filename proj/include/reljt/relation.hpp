#pragma once

// Probability-annotated relations and the extended relational operators:
// product join, marginalization, inverse, generalized join, evidence
// selection and normalization.
//
// A relation is a schema (a sorted set of variables) plus a value column.
// Rows map configurations of the schema to nonnegative reals. Rows that are
// absent read as 0, so a relation with explicit zero rows compares equal to
// the same relation with those rows dropped.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reljt/detail/text.hpp"
#include "reljt/error.hpp"

namespace reljt {

struct VarId {
  std::uint32_t value = 0;
  auto operator<=>(const VarId&) const = default;
};

using LabelIndex = std::uint32_t;

/// Sorted, duplicate-free set of variables.
using Schema = std::vector<VarId>;

/// Label indices aligned position by position with a schema.
using Configuration = std::vector<LabelIndex>;

/// Variable names and their frames (ordered value labels).
class VariableTable {
 public:
  VarId add(std::string name, std::vector<std::string> frame) {
    if (name.empty()) throw Error("variable name must not be empty");
    if (index_.contains(name)) throw Error("duplicate variable '" + name + "'");
    if (frame.empty()) throw Error("variable '" + name + "' has an empty frame");
    for (std::size_t i = 0; i < frame.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (frame[i] == frame[j]) {
          throw Error("variable '" + name + "' repeats label '" + frame[i] + "'");
        }
      }
    }
    VarId id{static_cast<std::uint32_t>(names_.size())};
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    frames_.push_back(std::move(frame));
    return id;
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(VarId v) const { return names_.at(v.value); }
  const std::vector<std::string>& frame(VarId v) const { return frames_.at(v.value); }
  std::size_t frame_size(VarId v) const { return frames_.at(v.value).size(); }

  std::optional<VarId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  VarId id(std::string_view name) const {
    auto v = find(name);
    if (!v) throw UnknownVariable("unknown variable '" + std::string(name) + "'");
    return *v;
  }

  LabelIndex label_index(VarId v, std::string_view label) const {
    const auto& f = frame(v);
    auto it = std::find(f.begin(), f.end(), label);
    if (it == f.end()) {
      throw UnknownValueLabel("label '" + std::string(label) + "' is not in the frame of '" +
                              name(v) + "'");
    }
    return static_cast<LabelIndex>(it - f.begin());
  }

  /// Sorted schema for a list of names.
  Schema schema(const std::vector<std::string>& names) const {
    Schema s;
    for (const auto& n : names) s.push_back(id(n));
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
      throw Error("schema lists a variable twice");
    }
    return s;
  }

  std::vector<VarId> all() const {
    std::vector<VarId> out;
    for (std::uint32_t i = 0; i < names_.size(); ++i) out.push_back(VarId{i});
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> frames_;
  std::unordered_map<std::string, VarId> index_;
};

using TablePtr = std::shared_ptr<const VariableTable>;

// ---------------------------------------------------------------------------
// Schema helpers

inline Schema schema_union(const Schema& a, const Schema& b) {
  Schema out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline Schema schema_intersection(const Schema& a, const Schema& b) {
  Schema out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline Schema schema_difference(const Schema& a, const Schema& b) {
  Schema out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool is_subset(const Schema& sub, const Schema& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

inline bool contains(const Schema& s, VarId v) { return std::binary_search(s.begin(), s.end(), v); }

/// Positions of `sub`'s variables inside `super`; sub must be a subset.
inline std::vector<std::size_t> positions_in(const Schema& sub, const Schema& super) {
  std::vector<std::size_t> pos;
  pos.reserve(sub.size());
  for (VarId v : sub) {
    auto it = std::lower_bound(super.begin(), super.end(), v);
    pos.push_back(static_cast<std::size_t>(it - super.begin()));
  }
  return pos;
}

/// c^{↓h}: keep the values at the given positions.
inline Configuration project(const Configuration& c, const std::vector<std::size_t>& positions) {
  Configuration out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(c[p]);
  return out;
}

inline std::string schema_text(const VariableTable& table, const Schema& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += table.name(s[i]);
  }
  return out + "}";
}

/// Every configuration of `schema`, in canonical (lexicographic) order.
inline std::vector<Configuration> all_configurations(const VariableTable& table, const Schema& schema) {
  std::vector<Configuration> out;
  Configuration c(schema.size(), 0);
  for (;;) {
    out.push_back(c);
    std::size_t i = schema.size();
    for (;;) {
      if (i == 0) return out;
      --i;
      if (++c[i] < table.frame_size(schema[i])) break;
      c[i] = 0;
    }
  }
}

namespace detail {

// Value-column names record provenance; long chains collapse to a hash.
inline std::string provenance(std::string text) {
  constexpr std::size_t kMaxName = 48;
  if (text.size() <= kMaxName) return text;
  return "f#" + hex64(fnv1a(text));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Relation

class Relation {
 public:
  using Rows = std::map<Configuration, double>;

  Relation(TablePtr table, Schema schema, std::string value_name, Rows rows)
      : table_(std::move(table)), schema_(std::move(schema)),
        value_name_(std::move(value_name)), rows_(std::move(rows)) {
    if (!table_) throw Error("relation needs a variable table");
    if (!std::is_sorted(schema_.begin(), schema_.end()) ||
        std::adjacent_find(schema_.begin(), schema_.end()) != schema_.end()) {
      throw Error("relation schema must be sorted and duplicate-free");
    }
    for (VarId v : schema_) {
      if (v.value >= table_->size()) throw UnknownVariable("variable id out of range");
    }
    for (const auto& [config, value] : rows_) {
      check_configuration(config);
      if (!std::isfinite(value) || value < 0.0) {
        throw ValueOutOfDomain("value must be finite and nonnegative");
      }
    }
  }

  const TablePtr& table_ptr() const { return table_; }
  const VariableTable& table() const { return *table_; }
  const Schema& schema() const { return schema_; }
  const std::string& value_name() const { return value_name_; }
  const Rows& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  double at(const Configuration& c) const {
    auto it = rows_.find(c);
    return it == rows_.end() ? 0.0 : it->second;
  }

  /// Value at a configuration given as labels in schema order.
  double at_labels(const std::vector<std::string>& labels) const {
    return at(configuration(labels));
  }

  Configuration configuration(const std::vector<std::string>& labels) const {
    if (labels.size() != schema_.size()) throw SchemaMismatch("label count does not match schema");
    Configuration c;
    for (std::size_t i = 0; i < labels.size(); ++i) c.push_back(table_->label_index(schema_[i], labels[i]));
    return c;
  }

  double total() const {
    double sum = 0.0;
    for (const auto& [c, v] : rows_) sum += v;
    return sum;
  }

  Relation renamed(std::string value_name) const {
    return Relation(table_, schema_, std::move(value_name), rows_);
  }

 private:
  void check_configuration(const Configuration& c) const {
    if (c.size() != schema_.size()) throw SchemaMismatch("configuration arity does not match schema");
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] >= table_->frame_size(schema_[i])) {
        throw UnknownValueLabel("label index out of range for '" + table_->name(schema_[i]) + "'");
      }
    }
  }

  TablePtr table_;
  Schema schema_;
  std::string value_name_;
  Rows rows_;
};

namespace detail {

inline void require_same_table(const Relation& a, const Relation& b) {
  if (a.table_ptr() != b.table_ptr()) throw SchemaMismatch("relations are over different variable tables");
}

}  // namespace detail

/// Validated constructor. `schema` may be listed in any order; each row's
/// labels follow that listed order.
inline Relation make_relation(TablePtr table, const std::vector<std::string>& schema_names,
                              const std::vector<std::pair<std::vector<std::string>, double>>& rows,
                              std::string value_name = "f") {
  Schema schema = table->schema(schema_names);
  std::vector<std::size_t> source(schema.size());
  for (std::size_t i = 0; i < schema_names.size(); ++i) {
    VarId v = table->id(schema_names[i]);
    source[positions_in(Schema{v}, schema)[0]] = i;
  }
  Relation::Rows out;
  for (const auto& [labels, value] : rows) {
    if (labels.size() != schema.size()) throw SchemaMismatch("row has the wrong number of labels");
    if (!std::isfinite(value) || value < 0.0) {
      throw ValueOutOfDomain("value " + detail::round_trip(value) + " is not finite and nonnegative");
    }
    Configuration c(schema.size());
    for (std::size_t p = 0; p < schema.size(); ++p) c[p] = table->label_index(schema[p], labels[source[p]]);
    if (!out.emplace(std::move(c), value).second) {
      std::string text;
      for (const auto& l : labels) text += (text.empty() ? "" : " ") + l;
      throw DuplicateConfiguration("duplicate configuration (" + text + ")");
    }
  }
  return Relation(std::move(table), std::move(schema), std::move(value_name), std::move(out));
}

/// All-ones relation on `schema` (the unit function).
inline Relation unit_relation(TablePtr table, Schema schema, std::string value_name = "one") {
  Relation::Rows rows;
  for (auto& c : all_configurations(*table, schema)) rows.emplace(std::move(c), 1.0);
  return Relation(std::move(table), std::move(schema), std::move(value_name), std::move(rows));
}

// ---------------------------------------------------------------------------
// Natural join

struct JoinedRow {
  Configuration config;
  double left = 0.0;
  double right = 0.0;
};

/// Φ_h ⋈ Φ_k with both value columns kept.
struct JoinedRows {
  Schema schema;
  std::string left_name;
  std::string right_name;
  std::vector<JoinedRow> rows;
};

inline JoinedRows natural_join(const Relation& r, const Relation& s) {
  detail::require_same_table(r, s);
  const Schema shared = schema_intersection(r.schema(), s.schema());
  JoinedRows out{schema_union(r.schema(), s.schema()), r.value_name(), s.value_name(), {}};

  const auto r_shared = positions_in(shared, r.schema());
  const auto s_shared = positions_in(shared, s.schema());

  // For every output column: which side supplies it, and at which position.
  std::vector<std::pair<bool, std::size_t>> source;
  for (VarId v : out.schema) {
    if (contains(r.schema(), v)) {
      source.emplace_back(true, positions_in(Schema{v}, r.schema())[0]);
    } else {
      source.emplace_back(false, positions_in(Schema{v}, s.schema())[0]);
    }
  }

  std::map<Configuration, std::vector<const std::pair<const Configuration, double>*>> index;
  for (const auto& row : s.rows()) index[project(row.first, s_shared)].push_back(&row);

  for (const auto& [rc, rv] : r.rows()) {
    auto it = index.find(project(rc, r_shared));
    if (it == index.end()) continue;
    for (const auto* srow : it->second) {
      Configuration c;
      c.reserve(source.size());
      for (auto [from_left, pos] : source) c.push_back(from_left ? rc[pos] : srow->first[pos]);
      out.rows.push_back(JoinedRow{std::move(c), rv, srow->second});
    }
  }
  std::sort(out.rows.begin(), out.rows.end(),
            [](const JoinedRow& a, const JoinedRow& b) { return a.config < b.config; });
  return out;
}

/// Φ_h ⊗ Φ_k: natural join with the two value columns multiplied.
inline Relation product_join(const Relation& r, const Relation& s) {
  JoinedRows joined = natural_join(r, s);
  Relation::Rows rows;
  for (auto& row : joined.rows) rows.emplace_hint(rows.end(), std::move(row.config), row.left * row.right);
  return Relation(r.table_ptr(), std::move(joined.schema),
                  detail::provenance(r.value_name() + "*" + s.value_name()), std::move(rows));
}

/// Φ_k^{↓h}. Marginalizing onto the empty set yields one empty-configuration
/// row holding the total.
inline Relation marginalize(const Relation& r, const Schema& target) {
  if (!is_subset(target, r.schema())) {
    throw NotASubset(schema_text(r.table(), target) + " is not a subset of " +
                     schema_text(r.table(), r.schema()));
  }
  const auto pos = positions_in(target, r.schema());
  Relation::Rows rows;
  if (target.empty()) rows.emplace(Configuration{}, 0.0);
  for (const auto& [c, v] : r.rows()) rows[project(c, pos)] += v;
  return Relation(r.table_ptr(), target, r.value_name(), std::move(rows));
}

/// Reciprocals on the positive support; zero rows are dropped.
inline Relation inverse(const Relation& r) {
  Relation::Rows rows;
  for (const auto& [c, v] : r.rows()) {
    if (v > 0.0) rows.emplace_hint(rows.end(), c, 1.0 / v);
  }
  return Relation(r.table_ptr(), r.schema(), detail::provenance("inv(" + r.value_name() + ")"),
                  std::move(rows));
}

/// R ⊗′ S = R ⊗ S ⊗ (R^{↓h∩k})^{-1}. The separator marginal comes from the
/// left operand; for marginals of one distribution both sides agree.
inline Relation generalized_join(const Relation& r, const Relation& s) {
  const Schema separator = schema_intersection(r.schema(), s.schema());
  return product_join(product_join(r, s), inverse(marginalize(r, separator)));
}

struct Assignment {
  VarId var;
  LabelIndex label = 0;
  auto operator<=>(const Assignment&) const = default;
};

/// Keep only rows that agree with every assignment on a schema variable.
/// Assignments on variables outside the schema are ignored.
inline Relation select_evidence(const Relation& r, const std::vector<Assignment>& evidence) {
  std::vector<std::pair<std::size_t, LabelIndex>> checks;
  for (const auto& a : evidence) {
    if (a.var.value >= r.table().size()) throw UnknownVariable("evidence variable id out of range");
    if (a.label >= r.table().frame_size(a.var)) {
      throw UnknownValueLabel("label index out of range for '" + r.table().name(a.var) + "'");
    }
    if (contains(r.schema(), a.var)) checks.emplace_back(positions_in(Schema{a.var}, r.schema())[0], a.label);
  }
  Relation::Rows rows;
  for (const auto& [c, v] : r.rows()) {
    bool keep = std::all_of(checks.begin(), checks.end(), [&](auto chk) { return c[chk.first] == chk.second; });
    if (keep) rows.emplace_hint(rows.end(), c, v);
  }
  return Relation(r.table_ptr(), r.schema(), r.value_name(), std::move(rows));
}

inline Relation select_evidence(const Relation& r,
                                const std::vector<std::pair<std::string, std::string>>& evidence) {
  std::vector<Assignment> resolved;
  for (const auto& [name, label] : evidence) {
    VarId v = r.table().id(name);
    resolved.push_back(Assignment{v, r.table().label_index(v, label)});
  }
  return select_evidence(r, resolved);
}

/// Divide by λ = total mass.
inline Relation normalize(const Relation& r) {
  const double lambda = r.total();
  if (!(lambda > 0.0)) throw ZeroMass("relation has zero total mass");
  Relation::Rows rows;
  for (const auto& [c, v] : r.rows()) rows.emplace_hint(rows.end(), c, v / lambda);
  return Relation(r.table_ptr(), r.schema(), r.value_name(), std::move(rows));
}

/// Largest absolute difference over the union of supports (absent = 0).
inline double max_abs_diff(const Relation& a, const Relation& b) {
  if (a.schema() != b.schema()) throw SchemaMismatch("relations have different schemas");
  double worst = 0.0;
  for (const auto& [c, v] : a.rows()) worst = std::max(worst, std::abs(v - b.at(c)));
  for (const auto& [c, v] : b.rows()) worst = std::max(worst, std::abs(v - a.at(c)));
  return worst;
}

inline bool approx_equal(const Relation& a, const Relation& b, double tolerance = 1e-9) {
  return a.schema() == b.schema() && max_abs_diff(a, b) <= tolerance;
}

}  // namespace reljt
