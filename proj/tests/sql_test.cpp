#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "reljt/reljt.hpp"
#include "support/oracle.hpp"
#include "support/sqlite_runner.hpp"
#include "support/tables16.hpp"

#ifndef RELJT_GOLDEN_DIR
#error "RELJT_GOLDEN_DIR must point at tests/golden"
#endif

using namespace reljt;

namespace {

const MarkovModel& tables_model() {
  static const MarkovModel m = tables16::load();
  return m;
}

const MarginalStore& tables_store() {
  static const MarginalStore s = propagate(tables_model());
  return s;
}

SqlOptions ctas() { return SqlOptions{Dialect::CreateTableAs, ""}; }

std::string statements(const SqlScript& s) {
  std::string out;
  for (const auto& st : s.statements()) out += st + "\n";
  return out;
}

Relation run_query(const std::string& text, const MarginalStore& store) {
  QueryPlan plan = compile_plan(parse_request(text, store.table()), store);
  sqlrun::Database db;
  db.exec(statements(emit_query_script(plan, store, ctas())));
  return db.read("answer", store.table_ptr());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

std::shared_ptr<VariableTable> three_binary() { return oracle::binary_table(3); }

}  // namespace

TEST(EmitLoad, PairMarginal) {
  auto t = three_binary();
  SqlScript s(*t, {});
  Relation r = make_relation(t, {"x1", "x2"},
                             {{{"0", "0"}, 0.391}, {{"0", "1"}, 0.058}, {{"1", "0"}, 0.387}, {{"1", "1"}, 0.164}});
  EXPECT_EQ(emit_load(s, r, "h1"), "phi_h1");
  ASSERT_EQ(s.statements().size(), 5u);
  EXPECT_EQ(s.statements()[0], "CREATE TABLE phi_h1 (x1 VARCHAR(1), x2 VARCHAR(1), f1 FLOAT);");
  EXPECT_EQ(s.statements()[1], "INSERT INTO phi_h1 VALUES ('0', '0', 0.391);");
  EXPECT_EQ(s.statements()[4], "INSERT INTO phi_h1 VALUES ('1', '1', 0.164);");
}

TEST(EmitLoad, EmptyRelationAndDistinctValueColumns) {
  auto t = three_binary();
  SqlScript s(*t, {});
  emit_load(s, make_relation(t, {"x1"}, {}), "a");
  emit_load(s, make_relation(t, {"x1", "x2"}, {{{"0", "1"}, 1.0}}), "b");
  ASSERT_EQ(s.statements().size(), 3u);
  EXPECT_EQ(s.statements()[0], "CREATE TABLE phi_a (x1 VARCHAR(1), f1 FLOAT);");
  EXPECT_EQ(s.statements()[1], "CREATE TABLE phi_b (x1 VARCHAR(1), x2 VARCHAR(1), f2 FLOAT);");
  EXPECT_EQ(s.info("phi_a").value, "f1");
  EXPECT_EQ(s.info("phi_b").value, "f2");
}

TEST(EmitLoadDdl, WholeStore) {
  SqlScript s = emit_load_ddl(tables_store(), ctas());
  sqlrun::Database db;
  db.exec(statements(s));
  for (std::size_t i = 0; i < tables_store().size(); ++i) {
    Relation back = db.read("phi_" + tables_store().structure().label_at(i), tables_store().table_ptr());
    EXPECT_LE(max_abs_diff(back, tables_store().normalized_at(i)), 0.0);
  }
}

TEST(EmitProductJoin, PairwiseProducts) {
  auto t = three_binary();
  SqlScript s(*t, ctas());
  Relation h = make_relation(t, {"x1", "x2"}, {{{"0", "0"}, 2}, {{"0", "1"}, 3}, {{"1", "0"}, 5}, {{"1", "1"}, 7}});
  Relation k = make_relation(t, {"x2", "x3"}, {{{"0", "0"}, 11}, {{"0", "1"}, 13}, {{"1", "0"}, 17}, {{"1", "1"}, 19}});
  emit_load(s, h, "h");
  emit_load(s, k, "k");
  const std::size_t before = s.statements().size();
  emit_product_join(s, "phi_h", "phi_k", "hk");
  ASSERT_EQ(s.statements().size() - before, 4u);
  EXPECT_NE(s.statements()[before].find("WHERE l.x2 = r.x2"), std::string::npos);
  EXPECT_EQ(s.statements()[before + 1].rfind("ALTER TABLE", 0), 0u);
  EXPECT_EQ(s.statements()[before + 2].rfind("UPDATE", 0), 0u);

  sqlrun::Database db;
  db.exec(statements(s));
  EXPECT_LE(max_abs_diff(db.read("hk", t), product_join(h, k)), 0.0);
}

TEST(EmitProductJoin, DisjointAndIdenticalSchemas) {
  auto t = three_binary();
  SqlScript s(*t, ctas());
  emit_load(s, make_relation(t, {"x1"}, {{{"0"}, 1}, {{"1"}, 2}}), "a");
  emit_load(s, make_relation(t, {"x2"}, {{{"0"}, 3}, {{"1"}, 4}}), "b");
  emit_load(s, make_relation(t, {"x1"}, {{{"0"}, 5}, {{"1"}, 6}}), "c");
  std::size_t at = s.statements().size();
  emit_product_join(s, "phi_a", "phi_b", "ab");
  EXPECT_EQ(s.statements()[at].find("WHERE"), std::string::npos);
  at = s.statements().size();
  emit_product_join(s, "phi_a", "phi_c", "ac");
  EXPECT_NE(s.statements()[at].find("WHERE l.x1 = r.x1;"), std::string::npos);

  sqlrun::Database db;
  db.exec(statements(s));
  EXPECT_EQ(db.read("ab", t).size(), 4u);
  Relation ac = db.read("ac", t);
  EXPECT_EQ(ac.at({0}), 5.0);
  EXPECT_EQ(ac.at({1}), 12.0);
}

TEST(EmitMarginalize, Sums) {
  auto t = three_binary();
  SqlScript s(*t, ctas());
  Relation k = make_relation(t, {"x1", "x2", "x3"},
                             {{{"0", "0", "0"}, 2}, {{"0", "0", "1"}, 3}, {{"0", "1", "0"}, 5}, {{"0", "1", "1"}, 5},
                              {{"1", "0", "0"}, 7}, {{"1", "0", "1"}, 7}, {{"1", "1", "0"}, 11}, {{"1", "1", "1"}, 13}});
  emit_load(s, k, "k");
  emit_marginalize(s, "phi_k", t->schema({"x1", "x2"}), "m");
  emit_marginalize(s, "phi_k", k.schema(), "full");
  emit_marginalize(s, "phi_k", {}, "total");
  EXPECT_THROW(emit_marginalize(s, "m", t->schema({"x3"}), "bad"), NotASubset);

  sqlrun::Database db;
  db.exec(statements(s));
  EXPECT_LE(max_abs_diff(db.read("m", t), marginalize(k, t->schema({"x1", "x2"}))), 0.0);
  EXPECT_LE(max_abs_diff(db.read("full", t), k), 0.0);
  Relation total = db.read("total", t);
  ASSERT_EQ(total.size(), 1u);
  EXPECT_EQ(total.at({}), 53.0);
}

TEST(EmitInverse, Reciprocals) {
  auto t = three_binary();
  SqlScript s(*t, ctas());
  emit_load(s, make_relation(t, {"x1"}, {{{"0"}, 0.25}, {{"1"}, 0.75}}), "a");
  emit_load(s, make_relation(t, {"x1"}, {{{"0"}, 0.0}, {{"1"}, 2.0}}), "b");
  emit_load(s, make_relation(t, {"x1"}, {{{"0"}, 0.0}, {{"1"}, 0.0}}), "c");
  emit_inverse(s, "phi_a", "ia");
  emit_inverse(s, "phi_b", "ib");
  emit_inverse(s, "phi_c", "ic");
  sqlrun::Database db;
  db.exec(statements(s));
  Relation ia = db.read("ia", t);
  EXPECT_DOUBLE_EQ(ia.at({0}), 4.0);
  EXPECT_DOUBLE_EQ(ia.at({1}), 1.0 / 0.75);
  Relation ib = db.read("ib", t);
  EXPECT_EQ(ib.size(), 1u);
  EXPECT_EQ(ib.at({1}), 0.5);
  EXPECT_TRUE(db.read("ic", t).empty());
}

TEST(EmitQueryScript, SingleEdgeNoEvidence) {
  const auto& store = tables_store();
  QueryPlan plan = compile_plan(parse_request("P(x1, x2)", store.table()), store);
  SqlScript s = emit_query_script(plan, store, ctas());
  std::size_t group_by = 0, joins = 0;
  for (const auto& st : s.statements()) {
    group_by += st.find("GROUP BY") != std::string::npos;
    joins += st.find(" l, ") != std::string::npos;
  }
  EXPECT_EQ(group_by, 1u);
  EXPECT_EQ(joins, 1u);  // the final Ψ ⊗ Ψ̂⁻¹ only
  Relation r = run_query("P(x1, x2)", store);
  double worst = 0.0;
  for (const auto& e : tables16::compare(r, tables16::marginals()[0], "h1")) worst = std::max(worst, e.diff());
  EXPECT_LE(worst, 2e-3);
}

TEST(EmitQueryScript, TablesQueriesMatchNative) {
  for (const char* text : {"P(x1, x2)", "P(x9 | x1=0)", "P(x1 | x9=0)", "P(x3 | x6=1)", "P(x2, x3)",
                           "P(x3, x7 | x5=1, x9=1)", "P(x6, x8 | x1=1, x4=0)"}) {
    Relation native = answer(text, tables_store());
    Relation sql = run_query(text, tables_store());
    EXPECT_LE(max_abs_diff(native, sql), 1e-9) << text;
  }
}

TEST(EmitQueryScript, ZeroEvidenceGivesEmptyAnswer) {
  Relation r = run_query("P(x1 | x2=0, x4=1)", tables_store());
  EXPECT_TRUE(r.empty());
}

TEST(EmitQueryScript, DialectsDifferOnlyInStatementForm) {
  const auto& store = tables_store();
  for (const char* text : {"P(x1, x2)", "P(x9 | x1=0)"}) {
    QueryPlan plan = compile_plan(parse_request(text, store.table()), store);
    std::string into = statements(emit_query_script(plan, store, {}));
    std::string create = statements(emit_query_script(plan, store, ctas()));
    EXPECT_NE(into, create);
    EXPECT_NE(into.find(" INTO t1 FROM "), std::string::npos);
    EXPECT_EQ(sqlrun::into_as_ctas(into), create);
  }
}

TEST(EmitQueryScript, Deterministic) {
  const auto& store = tables_store();
  QueryPlan plan = compile_plan(parse_request("P(x1 | x9=0)", store.table()), store);
  EXPECT_EQ(query_script_text(plan, store), query_script_text(plan, store));
  EXPECT_EQ(query_script_text(plan, propagate(tables16::load())), query_script_text(plan, store));
}

TEST(EmitQueryScript, Golden) {
  struct Case {
    const char* file;
    const char* request;
    Dialect dialect;
  };
  const Case cases[] = {
      {"tables16_x1_x2.into.sql", "P(x1, x2)", Dialect::SelectInto},
      {"tables16_x1_x2.ctas.sql", "P(x1, x2)", Dialect::CreateTableAs},
      {"tables16_x9_given_x1.into.sql", "P(x9 | x1=0)", Dialect::SelectInto},
      {"tables16_x3_given_x6.ctas.sql", "P(x3 | x6=1)", Dialect::CreateTableAs},
  };
  const auto& store = tables_store();
  for (const auto& c : cases) {
    SqlOptions options{c.dialect, model_hash(tables_model())};
    QueryPlan plan = compile_plan(parse_request(c.request, store.table()), store);
    const std::string expect = read_file(std::string(RELJT_GOLDEN_DIR) + "/" + c.file);
    ASSERT_FALSE(expect.empty()) << "missing golden file " << c.file;
    EXPECT_EQ(query_script_text(plan, store, options), expect) << c.file;
  }
}

TEST(EmitQueryScript, HeaderAndTrailer) {
  const auto& store = tables_store();
  QueryPlan plan = compile_plan(parse_request("P(x3|x6=1)", store.table()), store);
  const std::string text = query_script_text(plan, store, {Dialect::SelectInto, "fnv1a64:0"});
  EXPECT_EQ(text.rfind("-- reljt query script\n-- model: fnv1a64:0\n-- query: P(x3 | x6=1)\n-- join-path: h2 h3\n"
                       "-- dialect: into\n",
                       0),
            0u);
  EXPECT_NE(text.find("\n-- temporaries: t1 "), std::string::npos);
  for (std::size_t at = text.find('\n'); at + 1 < text.size(); at = text.find('\n', at + 1)) {
    const std::string line = text.substr(at + 1, text.find('\n', at + 1) - at - 1);
    EXPECT_TRUE(line.rfind("--", 0) == 0 || line.back() == ';') << line;
  }
}

TEST(SqlScriptNames, ColumnsAreSanitized) {
  auto t = std::make_shared<VariableTable>();
  t->add("Rain Today", {"no", "yes"});
  t->add("f2", {"a", "b"});
  t->add("9lives", {"x"});
  SqlScript s(*t, {});
  EXPECT_EQ(s.column(VarId{0}), "rain_today");
  EXPECT_EQ(s.column(VarId{1}), "v_f2");
  EXPECT_EQ(s.column(VarId{2}), "v_9lives");
  EXPECT_EQ(SqlScript::quote("it's"), "'it''s'");
}

// ---------------------------------------------------------------------------
// Randomized corpus.

TEST(Corpus, ScriptsMatchNative) {
  const auto models = oracle::corpus(1234, 100);
  std::mt19937 rng(42);
  for (int n = 0; n < 30; ++n) {
    const MarkovModel& m = models[(n * 7) % models.size()];
    MarginalStore store = propagate(m);
    oracle::RandomQuery rq = oracle::random_query(rng, m, oracle::brute_joint(m));
    Relation native = answer(rq.text, store);
    Relation sql = run_query(rq.text, store);
    ASSERT_LE(max_abs_diff(native, sql), 1e-9) << rq.text;
  }
}
