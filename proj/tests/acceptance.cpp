// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "reljt/reljt.hpp"
#include "support/oracle.hpp"
#include "support/sqlite_runner.hpp"
#include "support/tables16.hpp"

using namespace reljt;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& note) {
    if (!ok) {
      pass = false;
      notes.push_back(note);
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const std::vector<MarkovModel>& corpus() {
  static const std::vector<MarkovModel> c = oracle::corpus(1234, 100);
  return c;
}

Outcome published_columns(bool final_column) {
  Outcome o;
  const auto t0 = Clock::now();
  MarkovModel m = tables16::load();
  MarginalStore store = propagate(m);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::size_t checked = 0, failed = 0;
  for (std::size_t i = final_column ? 0 : 1; i < store.size(); ++i) {
    const std::string label = store.structure().label_at(i);
    const Relation& r = final_column ? store.normalized_at(i) : *store.conditional_at(i);
    const auto& printed = final_column ? tables16::marginals()[i] : tables16::conditionals()[i - 1];
    for (const auto& e : tables16::compare(r, printed, label)) {
      ++checked;
      worst = std::max(worst, e.diff());
      if (!(e.diff() <= 2e-3)) {
        ++failed;
        o.require(false, e.where + ": printed " + num(e.printed) + ", computed " + num(e.computed));
      }
    }
  }
  o.detail = std::to_string(checked - failed) + "/" + std::to_string(checked) + " entries within 2e-3, max diff " +
             num(worst);
  if (final_column) {
    o.detail += ", " + num(elapsed) + " s";
    o.require(elapsed < 1.0, "runtime " + num(elapsed) + " s");
  }
  return o;
}

Outcome lemma_one() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937 rng(20240501);
  auto table = oracle::binary_table(4);
  double worst_i = 0.0, worst_ii = 0.0;
  for (int n = 0; n < 200; ++n) {
    Relation k = oracle::random_relation(rng, table, oracle::random_subset(rng, table->all(), false));
    Schema g = oracle::random_subset(rng, k.schema(), true);
    Schema h = oracle::random_subset(rng, g, true);
    worst_i = std::max(worst_i, max_abs_diff(marginalize(marginalize(k, g), h), marginalize(k, h)));
  }
  for (int n = 0; n < 200; ++n) {
    Relation a = oracle::random_relation(rng, table, oracle::random_subset(rng, table->all(), false));
    Relation b = oracle::random_relation(rng, table, oracle::random_subset(rng, table->all(), false));
    Relation lhs = marginalize(product_join(a, b), a.schema());
    Relation rhs = product_join(a, marginalize(b, schema_intersection(a.schema(), b.schema())));
    worst_ii = std::max(worst_ii, max_abs_diff(lhs, rhs));
  }
  const double elapsed = seconds_since(t0);
  o.detail = "200+200 cases, max diff " + num(worst_i) + " / " + num(worst_ii) + ", " + num(elapsed) + " s";
  o.require(worst_i <= 1e-9, "consecutive marginalization off by " + num(worst_i));
  o.require(worst_ii <= 1e-9, "join pushdown off by " + num(worst_ii));
  o.require(elapsed < 5.0, "runtime " + num(elapsed) + " s");
  return o;
}

Outcome reduction() {
  Outcome o;
  double worst = 0.0;
  for (const auto& m : corpus()) {
    HypertreeStructure s = construction_ordering(m.hypergraph());
    BackwardResult b = backward_pass(m, s);
    oracle::Joint j = oracle::brute_joint(m);
    worst = std::max(worst, oracle::max_diff(b.root, oracle::brute_marginal(j, s.edge_at(0))));
    MarginalStore store = forward_pass(m, s, b.root, b.messages);
    for (std::size_t i = 0; i < store.size(); ++i) {
      worst = std::max(worst, oracle::max_diff(store.marginal_at(i), oracle::brute_marginal(j, s.edge_at(i))));
    }
  }
  o.detail = std::to_string(corpus().size()) + " models, max diff " + num(worst);
  o.require(worst <= 1e-9, "marginal off by " + num(worst));
  return o;
}

Outcome lossless() {
  Outcome o;
  double worst = 0.0;
  for (const auto& m : corpus()) {
    MarginalStore store = propagate(m);
    Relation acc = store.marginal_at(0);
    for (std::size_t i = 1; i < store.size(); ++i) acc = generalized_join(acc, store.marginal_at(i));
    worst = std::max(worst, oracle::max_diff(acc, oracle::brute_marginal(oracle::brute_joint(m), m.table().all())));
  }
  o.detail = std::to_string(corpus().size()) + " models, max diff " + num(worst);
  o.require(worst <= 1e-9, "joint off by " + num(worst));
  return o;
}

Outcome queries() {
  Outcome o;
  std::mt19937 rng(42);
  double worst = 0.0;
  for (int n = 0; n < 300; ++n) {
    const MarkovModel& m = corpus()[n % corpus().size()];
    MarginalStore store = propagate(m);
    oracle::Joint j = oracle::brute_joint(m);
    oracle::RandomQuery rq = oracle::random_query(rng, m, j);
    const double d = oracle::max_diff(answer(rq.text, store), *oracle::brute_conditional(j, rq.targets, rq.evidence));
    worst = std::max(worst, d);
    if (!(d <= 1e-9)) o.require(false, rq.text + " off by " + num(d));
  }

  // Zero-probability evidence.
  std::mt19937 zr(77);
  int zero_cases = 0, raised = 0;
  for (int n = 0; n < 400 && zero_cases < 30; ++n) {
    MarkovModel m = oracle::random_hypertree_model(zr, 5, 7, 0.4);
    oracle::Joint j = oracle::brute_joint(m);
    if (oracle::total(j) <= 0.0 || m.table().size() < 2) continue;
    MarginalStore store = propagate(m);
    for (const auto& c : j.configs) {
      std::vector<std::pair<VarId, LabelIndex>> ev;
      std::string text = "P(x1 |";
      for (std::uint32_t v = 1; v < m.table().size(); ++v) {
        ev.emplace_back(VarId{v}, c[v]);
        text += (v > 1 ? ", " : " ") + m.table().name(VarId{v}) + "=" + m.table().frame(VarId{v})[c[v]];
      }
      text += ")";
      if (oracle::brute_conditional(j, {VarId{0}}, ev)) continue;
      ++zero_cases;
      try {
        answer(text, store);
        o.require(false, text + " did not raise ZeroMass");
      } catch (const ZeroMass&) {
        ++raised;
      }
      break;
    }
  }
  o.detail = "300 queries, max diff " + num(worst) + "; ZeroMass " + std::to_string(raised) + "/" +
             std::to_string(zero_cases);
  o.require(zero_cases >= 10, "only " + std::to_string(zero_cases) + " zero-evidence cases generated");
  return o;
}

Outcome recognition() {
  Outcome o;
  auto t = oracle::binary_table(9);
  Hypergraph four = Hypergraph::from_names(*t, {{"x1", "x2", "x3"}, {"x1", "x2", "x4"}, {"x2", "x3", "x5"}, {"x5", "x6"}});
  try {
    o.require(oracle::valid_structure(construction_ordering(four)), "four-edge structure fails validation");
  } catch (const NotHypertree&) {
    o.require(false, "four-edge hypergraph rejected");
  }
  Hypergraph six = Hypergraph::from_names(
      *t, {{"x1", "x2"}, {"x1", "x3"}, {"x1", "x2", "x4"}, {"x2", "x5"}, {"x3", "x5"}, {"x5", "x6"}});
  try {
    construction_ordering(six);
    o.require(false, "six-edge hypergraph accepted");
  } catch (const NotHypertree& e) {
    std::vector<Schema> core;
    for (std::size_t i : e.core()) core.push_back(six.edge(i));
    std::vector<Schema> expect{t->schema({"x1", "x2"}), t->schema({"x1", "x3"}), t->schema({"x2", "x5"}),
                               t->schema({"x3", "x5"})};
    std::sort(core.begin(), core.end());
    std::sort(expect.begin(), expect.end());
    o.require(core == expect, "irreducible core differs");
  }
  Hypergraph cover = build_cover(six);
  o.require(is_hypertree_cover(cover, six), "build_cover output is not a hypertree cover");
  o.detail = "accepted, rejected with core, cover " + cover.text(*t);
  return o;
}

std::string statements(const SqlScript& s) {
  std::string out;
  for (const auto& st : s.statements()) out += st + "\n";
  return out;
}

Outcome sql_backend() {
  Outcome o;
  double worst = 0.0;
  int count = 0;
  auto check = [&](const std::string& text, const MarginalStore& store) {
    QueryPlan plan = compile_plan(parse_request(text, store.table()), store);
    sqlrun::Database db;
    db.exec(statements(emit_query_script(plan, store, {Dialect::CreateTableAs, ""})));
    const double d = max_abs_diff(db.read("answer", store.table_ptr()), execute_plan(plan, store));
    worst = std::max(worst, d);
    ++count;
    if (!(d <= 1e-9)) o.require(false, text + " off by " + num(d));
  };
  std::mt19937 rng(42);
  for (int n = 0; n < 30; ++n) {
    const MarkovModel& m = corpus()[(n * 7) % corpus().size()];
    MarginalStore store = propagate(m);
    check(oracle::random_query(rng, m, oracle::brute_joint(m)).text, store);
  }
  const MarkovModel tm = tables16::load();
  const MarginalStore ts = propagate(tm);
  for (const char* text : {"P(x1, x2)", "P(x9 | x1=0)", "P(x1 | x9=0)", "P(x3 | x6=1)", "P(x2, x3)",
                           "P(x3, x7 | x5=1, x9=1)", "P(x6, x8 | x1=1, x4=0)"}) {
    check(text, ts);
  }

  struct Golden {
    const char* file;
    const char* request;
    Dialect dialect;
  };
  const Golden goldens[] = {
      {"tables16_x1_x2.into.sql", "P(x1, x2)", Dialect::SelectInto},
      {"tables16_x1_x2.ctas.sql", "P(x1, x2)", Dialect::CreateTableAs},
      {"tables16_x9_given_x1.into.sql", "P(x9 | x1=0)", Dialect::SelectInto},
      {"tables16_x3_given_x6.ctas.sql", "P(x3 | x6=1)", Dialect::CreateTableAs},
  };
  int golden_ok = 0;
  for (const auto& g : goldens) {
    std::ifstream in(std::string(RELJT_GOLDEN_DIR) + "/" + g.file, std::ios::binary);
    std::ostringstream b;
    b << in.rdbuf();
    QueryPlan plan = compile_plan(parse_request(g.request, ts.table()), ts);
    const SqlOptions options{g.dialect, model_hash(tm)};
    const std::string first = query_script_text(plan, ts, options);
    const std::string second = query_script_text(plan, propagate(tables16::load()), options);
    const bool ok = first == second && first == b.str();
    golden_ok += ok;
    o.require(ok, std::string("golden mismatch ") + g.file);
  }
  o.detail = std::to_string(count) + " scripts on SQLite, max diff " + num(worst) + "; golden " +
             std::to_string(golden_ok) + "/4";
  return o;
}

Outcome root_independence() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t n = 0; n < 20; ++n) {
    const MarkovModel& m = corpus()[n];
    MarginalStore base = propagate(m, 0);
    for (std::size_t r = 1; r < m.hypergraph().size(); ++r) {
      MarginalStore other = propagate(m, r);
      for (std::size_t e = 0; e < m.hypergraph().size(); ++e) {
        worst = std::max(worst, max_abs_diff(base.normalized(e), other.normalized(e)));
      }
    }
  }
  o.detail = "20 models, all roots, max diff " + num(worst);
  o.require(worst <= 1e-9, "marginals differ by " + num(worst));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"tables16 final marginals", [] { return published_columns(true); }},
      {"tables16 intermediate columns", [] { return published_columns(false); }},
      {"marginalization properties", lemma_one},
      {"twig reduction vs brute force", reduction},
      {"lossless generalized-join chain", lossless},
      {"query oracle equivalence", queries},
      {"hypertree recognition", recognition},
      {"SQL backend equivalence", sql_backend},
      {"root independence", root_independence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s  %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    for (const auto& note : o.notes) std::printf("        %s\n", note.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures ? 1 : 0;
}
