// reljt: check, propagate, query and emit-sql over a model file.
//
// Exit status: 0 success, 1 domain failure (not a hypertree, zero-probability
// evidence), 2 usage, I/O or parse failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "reljt/reljt.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

std::string edge_list(const reljt::Hypergraph& h, const reljt::VariableTable& table,
                      const std::vector<std::size_t>& which) {
  std::string out;
  for (std::size_t i : which) out += (out.empty() ? "" : " ") + h.label(i) + "=" + reljt::schema_text(table, h.edge(i));
  return out;
}

int run_check(const std::string& model_path) {
  const reljt::MarkovModel model = reljt::load_model(model_path);
  const auto& h = model.hypergraph();
  try {
    const auto s = reljt::construction_ordering(h);
    std::cout << "hypertree: yes\n";
    std::cout << "ordering:";
    for (std::size_t i = 0; i < s.size(); ++i) std::cout << " " << s.label_at(i);
    std::cout << "\nbranching:";
    if (s.size() == 1) std::cout << " none";
    for (std::size_t i = 1; i < s.size(); ++i) std::cout << " b(" << i + 1 << ")=" << *s.branch[i] + 1;
    std::cout << "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::cout << "  " << i + 1 << ". " << s.label_at(i) << " " << reljt::schema_text(model.table(), s.edge_at(i));
      if (s.branch[i]) {
        std::cout << "  branch " << s.label_at(*s.branch[i]) << "  separator "
                  << reljt::schema_text(model.table(), s.separator(i));
      }
      std::cout << "\n";
    }
    return kOk;
  } catch (const reljt::NotHypertree& e) {
    const reljt::Hypergraph cover = reljt::build_cover(h);
    std::vector<std::size_t> cover_all(cover.size());
    for (std::size_t i = 0; i < cover_all.size(); ++i) cover_all[i] = i;
    std::cout << "hypertree: no\n";
    std::cout << "irreducible core: " << edge_list(h, model.table(), e.core()) << "\n";
    std::cout << "suggested cover: " << edge_list(cover, model.table(), cover_all) << "\n";
    return kDomainFailure;
  }
}

int run_propagate(const std::string& model_path, const std::filesystem::path& out_dir, const std::string& format) {
  const reljt::MarkovModel model = reljt::load_model(model_path);
  const auto fmt = format == "csv" ? reljt::OutputFormat::Csv : reljt::OutputFormat::Table;
  const reljt::MarginalStore store = reljt::propagate(model);
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto path = out_dir / ("phi_" + store.structure().label_at(i) + (fmt == reljt::OutputFormat::Csv ? ".csv" : ".txt"));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << reljt::format_relation(store.normalized_at(i), fmt);
    std::cout << path.string() << "\n";
  }
  return kOk;
}

int run_query(const std::string& model_path, const std::string& request) {
  const reljt::MarkovModel model = reljt::load_model(model_path);
  const reljt::MarginalStore store = reljt::propagate(model);
  std::cout << reljt::format_table(reljt::answer(request, store));
  return kOk;
}

int run_emit_sql(const std::string& model_path, const std::string& request, const std::string& out_path,
                 const std::string& dialect) {
  const reljt::MarkovModel model = reljt::load_model(model_path);
  const reljt::MarginalStore store = reljt::propagate(model);
  const auto query = reljt::parse_request(request, model.table());
  const auto plan = reljt::compile_plan(query, store);
  reljt::SqlOptions options;
  options.dialect = dialect == "ctas" ? reljt::Dialect::CreateTableAs : reljt::Dialect::SelectInto;
  options.model_hash = reljt::model_hash(model);
  const std::string text = reljt::query_script_text(plan, store, options);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Junction-tree inference over probability-annotated relations"};
  app.require_subcommand(1);

  std::string model_path;
  std::string request;
  std::string out_dir = ".";
  std::string out_path;
  std::string format = "table";
  std::string dialect = "into";

  auto* check = app.add_subcommand("check", "Test whether the model's hypergraph is a hypertree");
  check->add_option("model", model_path, "Model file")->required();

  auto* prop = app.add_subcommand("propagate", "Write the normalized marginal of every hyperedge");
  prop->add_option("model", model_path, "Model file")->required();
  prop->add_option("--out", out_dir, "Output directory")->capture_default_str();
  prop->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "csv"}))->capture_default_str();

  auto* query = app.add_subcommand("query", "Answer a request such as \"P(x1 | x9=0)\"");
  query->add_option("model", model_path, "Model file")->required();
  query->add_option("request", request, "Probability request")->required();

  auto* emit = app.add_subcommand("emit-sql", "Write a standalone SQL script answering a request");
  emit->add_option("model", model_path, "Model file")->required();
  emit->add_option("request", request, "Probability request")->required();
  emit->add_option("--out", out_path, "Output file (default: standard output)");
  emit->add_option("--dialect", dialect, "SELECT INTO or CREATE TABLE AS")
      ->check(CLI::IsMember({"into", "ctas"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*check) return run_check(model_path);
    if (*prop) return run_propagate(model_path, out_dir, format);
    if (*query) return run_query(model_path, request);
    if (*emit) return run_emit_sql(model_path, request, out_path, dialect);
  } catch (const reljt::NotHypertree& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  } catch (const reljt::ZeroMass& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
