#pragma once

// Standalone SQL scripts that simulate the product join, marginalization,
// inverse and generalized join on a plain relational engine, plus complete
// scripts answering a compiled query.
//
// Output format: one statement per line, each terminated by ';', preceded by
// a comment block and followed by a comment listing the temporary tables.
// Base marginals are tables phi_<label>, temporaries t<n>, value columns f<n>.

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reljt/detail/text.hpp"
#include "reljt/error.hpp"
#include "reljt/propagation.hpp"
#include "reljt/query.hpp"
#include "reljt/relation.hpp"

namespace reljt {

enum class Dialect {
  SelectInto,     // SELECT ... INTO t FROM ...
  CreateTableAs,  // CREATE TABLE t AS SELECT ... FROM ...
};

inline const char* dialect_name(Dialect d) { return d == Dialect::SelectInto ? "into" : "ctas"; }

struct SqlOptions {
  Dialect dialect = Dialect::SelectInto;
  /// Recorded in the header. Empty: a hash of the loaded marginals is used.
  std::string model_hash;
};

struct SqlTable {
  Schema vars;
  std::string value;
};

/// Statements plus the naming state needed to keep appending to them.
class SqlScript {
 public:
  SqlScript(const VariableTable& table, SqlOptions options) : table_(&table), options_(std::move(options)) {
    std::set<std::string> used;
    for (VarId v : table.all()) {
      std::string col = identifier(table.name(v));
      if (col == "f" || (col.size() > 1 && col[0] == 'f' && all_digits(col.substr(1))) ||
          (col.size() > 1 && col[0] == 't' && all_digits(col.substr(1)))) {
        col = "v_" + col;
      }
      std::string unique = col;
      for (int k = 2; used.contains(unique); ++k) unique = col + "_" + std::to_string(k);
      used.insert(unique);
      columns_.push_back(unique);
    }
  }

  const VariableTable& table() const { return *table_; }
  const SqlOptions& options() const { return options_; }
  const std::vector<std::string>& statements() const { return statements_; }
  const std::vector<std::string>& temporaries() const { return temporaries_; }
  const std::string& column(VarId v) const { return columns_.at(v.value); }

  const SqlTable& info(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw Error("table '" + name + "' is not defined earlier in the script");
    return it->second;
  }

  std::string fresh_table() {
    std::string name = "t" + std::to_string(++table_counter_);
    temporaries_.push_back(name);
    return name;
  }
  std::string fresh_value() { return "f" + std::to_string(++value_counter_); }

  void define(const std::string& name, SqlTable t) {
    if (tables_.contains(name)) throw Error("table '" + name + "' is defined twice");
    tables_.emplace(name, std::move(t));
  }

  void add(std::string statement) { statements_.push_back(std::move(statement) + ";"); }

  /// "SELECT <select> INTO <out> FROM <rest>" in the configured dialect.
  void add_select_into(const std::string& select, const std::string& out, const std::string& rest) {
    if (options_.dialect == Dialect::SelectInto) {
      add("SELECT " + select + " INTO " + out + " FROM " + rest);
    } else {
      add("CREATE TABLE " + out + " AS SELECT " + select + " FROM " + rest);
    }
  }

  std::string columns(const Schema& vars, const std::string& qualifier = {}) const {
    std::string out;
    for (VarId v : vars) {
      if (!out.empty()) out += ", ";
      out += qualifier.empty() ? column(v) : qualifier + "." + column(v) + " AS " + column(v);
    }
    return out;
  }

  std::string render(const std::vector<std::string>& header) const {
    std::string out;
    for (const auto& line : header) out += "-- " + line + "\n";
    for (const auto& s : statements_) out += s + "\n";
    out += "-- temporaries:";
    if (temporaries_.empty()) out += " none";
    for (const auto& t : temporaries_) out += " " + t;
    out += "\n";
    return out;
  }

  static std::string identifier(const std::string& raw) {
    std::string out;
    for (unsigned char c : raw) out += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_';
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "v_" + out;
    return out;
  }

  static std::string quote(const std::string& label) {
    std::string out = "'";
    for (char c : label) out += c == '\'' ? std::string("''") : std::string(1, c);
    return out + "'";
  }

 private:
  static bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  }

  const VariableTable* table_;
  SqlOptions options_;
  std::vector<std::string> columns_;
  std::vector<std::string> statements_;
  std::vector<std::string> temporaries_;
  std::map<std::string, SqlTable> tables_;
  int table_counter_ = 0;
  int value_counter_ = 0;
};

/// CREATE TABLE phi_<label> plus one INSERT per row, canonical order.
inline std::string emit_load(SqlScript& script, const Relation& r, const std::string& label) {
  const std::string name = "phi_" + SqlScript::identifier(label);
  const std::string value = script.fresh_value();
  std::string ddl = "CREATE TABLE " + name + " (";
  for (VarId v : r.schema()) {
    std::size_t width = 1;
    for (const auto& l : script.table().frame(v)) width = std::max(width, l.size());
    ddl += script.column(v) + " VARCHAR(" + std::to_string(width) + "), ";
  }
  script.add(ddl + value + " FLOAT)");
  for (const auto& [c, f] : r.rows()) {
    std::string row = "INSERT INTO " + name + " VALUES (";
    for (std::size_t i = 0; i < c.size(); ++i) row += SqlScript::quote(script.table().frame(r.schema()[i])[c[i]]) + ", ";
    script.add(row + detail::round_trip(f) + ")");
  }
  script.define(name, SqlTable{r.schema(), value});
  return name;
}

/// ⊗ as four statements: natural join, ALTER TABLE ADD, UPDATE SET product,
/// projection onto h ∪ k and the product column.
inline std::string emit_product_join(SqlScript& script, const std::string& h, const std::string& k,
                                     const std::string& out) {
  const SqlTable left = script.info(h);
  const SqlTable right = script.info(k);
  if (left.value == right.value) throw Error("product join operands share value column " + left.value);
  const Schema all = schema_union(left.vars, right.vars);
  const Schema shared = schema_intersection(left.vars, right.vars);

  std::string select;
  for (VarId v : all) {
    const char* q = contains(left.vars, v) ? "l" : "r";
    select += std::string(q) + "." + script.column(v) + " AS " + script.column(v) + ", ";
  }
  select += "l." + left.value + " AS " + left.value + ", r." + right.value + " AS " + right.value;
  std::string from = h + " l, " + k + " r";
  if (!shared.empty()) {
    from += " WHERE ";
    for (std::size_t i = 0; i < shared.size(); ++i) {
      if (i) from += " AND ";
      from += "l." + script.column(shared[i]) + " = r." + script.column(shared[i]);
    }
  }

  const std::string joined = script.fresh_table();
  const std::string product = script.fresh_value();
  script.add_select_into(select, joined, from);
  script.define(joined, SqlTable{all, ""});
  script.add("ALTER TABLE " + joined + " ADD " + product + " FLOAT");
  script.add("UPDATE " + joined + " SET " + product + " = " + left.value + " * " + right.value);
  std::string projection = script.columns(all);
  script.add_select_into(projection.empty() ? product : projection + ", " + product, out, joined);
  script.define(out, SqlTable{all, product});
  return out;
}

/// ↓ as SELECT … SUM … GROUP BY. Empty targets give a one-row total.
inline std::string emit_marginalize(SqlScript& script, const std::string& table, const Schema& targets,
                                    const std::string& out) {
  const SqlTable in = script.info(table);
  if (!is_subset(targets, in.vars)) throw NotASubset("marginalization targets are not columns of " + table);
  const std::string value = script.fresh_value();
  if (targets.empty()) {
    script.add_select_into("COALESCE(SUM(" + in.value + "), 0.0) AS " + value, out, table);
  } else {
    const std::string cols = script.columns(targets);
    script.add_select_into(cols + ", SUM(" + in.value + ") AS " + value, out, table + " GROUP BY " + cols);
  }
  script.define(out, SqlTable{targets, value});
  return out;
}

/// Reciprocals of the positive rows.
inline std::string emit_inverse(SqlScript& script, const std::string& table, const std::string& out) {
  const SqlTable in = script.info(table);
  const std::string value = script.fresh_value();
  std::string cols = script.columns(in.vars);
  if (!cols.empty()) cols += ", ";
  script.add_select_into(cols + "1.0 / " + in.value + " AS " + value, out, table + " WHERE " + in.value + " > 0");
  script.define(out, SqlTable{in.vars, value});
  return out;
}

/// Row selection on the evidence variables present in `table`. Returns
/// `table` itself when no assignment applies.
inline std::string emit_select(SqlScript& script, const std::string& table, const std::vector<Assignment>& evidence) {
  const SqlTable in = script.info(table);
  std::string where;
  for (const auto& a : evidence) {
    if (!contains(in.vars, a.var)) continue;
    if (!where.empty()) where += " AND ";
    where += script.column(a.var) + " = " + SqlScript::quote(script.table().frame(a.var).at(a.label));
  }
  if (where.empty()) return table;
  const std::string out = script.fresh_table();
  std::string cols = script.columns(in.vars);
  if (!cols.empty()) cols += ", ";
  script.add_select_into(cols + in.value, out, table + " WHERE " + where);
  script.define(out, in);
  return out;
}

/// Ψ̂_κ: every row of `table` carrying λ = the column total.
inline std::string emit_constant(SqlScript& script, const std::string& table, const std::string& out) {
  const SqlTable in = script.info(table);
  const std::string value = script.fresh_value();
  std::string cols = script.columns(in.vars);
  if (!cols.empty()) cols += ", ";
  script.add_select_into(cols + "(SELECT SUM(" + in.value + ") FROM " + table + ") AS " + value, out, table);
  script.define(out, SqlTable{in.vars, value});
  return out;
}

namespace detail {

inline std::string marginals_hash(const MarginalStore& store) {
  std::string text;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Relation& m = store.marginal_at(i);
    text += store.structure().label_at(i) + ":";
    for (const auto& [c, v] : m.rows()) {
      for (auto l : c) text += std::to_string(l) + ",";
      text += round_trip(v) + ";";
    }
  }
  return "fnv1a64:" + hex64(fnv1a(text));
}

}  // namespace detail

/// Load script for every (normalized) marginal in the store.
inline SqlScript emit_load_ddl(const MarginalStore& store, const SqlOptions& options = {}) {
  SqlScript script(store.table(), options);
  for (std::size_t i = 0; i < store.size(); ++i) emit_load(script, store.normalized_at(i), store.structure().label_at(i));
  return script;
}

inline std::vector<std::string> load_header(const MarginalStore& store, const SqlOptions& options) {
  return {"reljt marginal relations",
          "model: " + (options.model_hash.empty() ? detail::marginals_hash(store) : options.model_hash),
          std::string("dialect: ") + dialect_name(options.dialect)};
}

/// Canonical text of a request, e.g. "P(x1, x2 | x9=0)".
inline std::string request_text(const ProbabilityQuery& q, const VariableTable& table) {
  std::string out = "P(";
  for (std::size_t i = 0; i < q.targets.size(); ++i) out += (i ? ", " : "") + table.name(q.targets[i]);
  if (!q.evidence.empty()) {
    out += " |";
    for (std::size_t i = 0; i < q.evidence.size(); ++i) {
      const auto& a = q.evidence[i];
      out += (i ? ", " : " ") + table.name(a.var) + "=" + table.frame(a.var)[a.label];
    }
  }
  return out + ")";
}

/// Complete script whose final table `answer` holds the normalized answer.
inline SqlScript emit_query_script(const QueryPlan& plan, const MarginalStore& store, const SqlOptions& options = {}) {
  SqlScript script(store.table(), options);
  const auto& s = store.structure();
  std::vector<std::string> base;
  for (const auto& step : plan.steps) base.push_back(emit_load(script, store.normalized_at(step.position), s.label_at(step.position)));

  const auto& evidence = plan.query.evidence;
  std::string acc = emit_select(script, base[0], evidence);
  for (std::size_t i = 1; i < plan.steps.size(); ++i) {
    std::string separator = emit_marginalize(script, base[i], plan.steps[i].separator, script.fresh_table());
    separator = emit_select(script, separator, evidence);
    const std::string inverse_separator = emit_inverse(script, separator, script.fresh_table());
    const std::string selected = emit_select(script, base[i], evidence);
    const std::string product = emit_product_join(script, acc, selected, script.fresh_table());
    acc = emit_product_join(script, product, inverse_separator, script.fresh_table());
  }
  const std::string psi = emit_marginalize(script, acc, plan.targets, script.fresh_table());
  const std::string psi_hat = emit_constant(script, psi, script.fresh_table());
  const std::string psi_hat_inverse = emit_inverse(script, psi_hat, script.fresh_table());
  emit_product_join(script, psi, psi_hat_inverse, "answer");
  return script;
}

inline std::vector<std::string> query_header(const QueryPlan& plan, const MarginalStore& store,
                                             const SqlOptions& options) {
  std::string path;
  for (const auto& step : plan.steps) path += (path.empty() ? "" : " ") + store.structure().label_at(step.position);
  return {"reljt query script",
          "model: " + (options.model_hash.empty() ? detail::marginals_hash(store) : options.model_hash),
          "query: " + request_text(plan.query, store.table()),
          "join-path: " + path,
          std::string("dialect: ") + dialect_name(options.dialect)};
}

/// Rendered text of emit_query_script with its header.
inline std::string query_script_text(const QueryPlan& plan, const MarginalStore& store, const SqlOptions& options = {}) {
  return emit_query_script(plan, store, options).render(query_header(plan, store, options));
}

}  // namespace reljt
