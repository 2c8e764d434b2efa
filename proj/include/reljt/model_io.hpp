#pragma once

// Model files and result serialization.
//
// A model file is UTF-8 JSON; // and /* */ comments are allowed.
//
//   {
//     "variables": [ {"name": "x1", "frame": ["0", "1"]}, ... ],
//     "potentials": [
//       {"label": "h1", "vars": ["x1", "x2"],
//        "rows": [["0", "0", 0.502], ["0", "1", 0.261], ...]},
//       ...
//     ]
//   }
//
// "label" is optional (default h<index>). Each row lists one label per entry
// of "vars", in that order, followed by the value. Labels may be written as
// strings or integers. Rows that are left out have value 0.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reljt/detail/text.hpp"
#include "reljt/error.hpp"
#include "reljt/propagation.hpp"
#include "reljt/relation.hpp"

namespace reljt {

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline std::string label_of(const nlohmann::json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ModelError(where + ": labels must be strings or integers");
}

inline const nlohmann::json& member(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ModelError(where + ": missing \"" + key + "\"");
  return obj.at(key);
}

// Rethrow with context, keeping the error's type.
template <class E>
[[noreturn]] void rethrow_with(const E& e, const std::string& context) {
  throw E(context + ": " + e.what());
}

}  // namespace detail

inline MarkovModel parse_model(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, column] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    auto cut = what.find("; ");
    throw ParseError(cut == std::string::npos ? what : what.substr(cut + 2), line, column);
  }
  if (!doc.is_object()) throw ModelError("model must be a JSON object");

  auto table = std::make_shared<VariableTable>();
  const auto& vars = detail::member(doc, "variables", "model");
  if (!vars.is_array()) throw ModelError("\"variables\" must be an array");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "variable " + std::to_string(i + 1);
    const auto& name = detail::member(vars[i], "name", where);
    const auto& frame = detail::member(vars[i], "frame", where);
    if (!name.is_string()) throw ModelError(where + ": \"name\" must be a string");
    if (!frame.is_array()) throw ModelError(where + ": \"frame\" must be an array");
    std::vector<std::string> labels;
    for (const auto& l : frame) labels.push_back(detail::label_of(l, where));
    try {
      table->add(name.get<std::string>(), std::move(labels));
    } catch (const Error& e) {
      throw ModelError(where + ": " + e.what());
    }
  }

  const auto& pots = detail::member(doc, "potentials", "model");
  if (!pots.is_array()) throw ModelError("\"potentials\" must be an array");
  std::vector<Relation> potentials;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < pots.size(); ++i) {
    const auto& p = pots[i];
    std::string label = "h" + std::to_string(i + 1);
    if (p.is_object() && p.contains("label")) {
      if (!p["label"].is_string()) throw ModelError("potential " + std::to_string(i + 1) + ": \"label\" must be a string");
      label = p["label"].get<std::string>();
    }
    const std::string where = "potential " + std::to_string(i + 1) + " (" + label + ")";
    const auto& pvars = detail::member(p, "vars", where);
    const auto& prows = detail::member(p, "rows", where);
    if (!pvars.is_array() || !prows.is_array()) throw ModelError(where + ": \"vars\" and \"rows\" must be arrays");
    std::vector<std::string> names;
    for (const auto& v : pvars) {
      if (!v.is_string()) throw ModelError(where + ": variable names must be strings");
      names.push_back(v.get<std::string>());
    }
    std::vector<std::pair<std::vector<std::string>, double>> rows;
    for (const auto& row : prows) {
      if (!row.is_array() || row.size() != names.size() + 1 || !row.back().is_number()) {
        throw ModelError(where + ": each row needs " + std::to_string(names.size()) + " labels and a number");
      }
      std::vector<std::string> ls;
      for (std::size_t k = 0; k < names.size(); ++k) ls.push_back(detail::label_of(row[k], where));
      rows.emplace_back(std::move(ls), row.back().get<double>());
    }
    try {
      potentials.push_back(make_relation(table, names, rows));
    } catch (const DuplicateConfiguration& e) {
      detail::rethrow_with(e, where);
    } catch (const ValueOutOfDomain& e) {
      detail::rethrow_with(e, where);
    } catch (const UnknownVariable& e) {
      detail::rethrow_with(e, where);
    } catch (const UnknownValueLabel& e) {
      detail::rethrow_with(e, where);
    } catch (const SchemaMismatch& e) {
      detail::rethrow_with(e, where);
    } catch (const Error& e) {
      throw ModelError(where + ": " + e.what());
    }
    labels.push_back(std::move(label));
  }
  try {
    return MarkovModel(table, std::move(potentials), std::move(labels));
  } catch (const DuplicateHyperedge& e) {
    detail::rethrow_with(e, "model");
  } catch (const Error& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
}

inline MarkovModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

namespace detail {

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace detail

/// Canonical model text: potentials in model order, schemas and rows in
/// canonical order, values with full round-trip precision.
inline std::string save_model(const MarkovModel& model) {
  const auto& table = model.table();
  std::string out = "{\n  \"variables\": [\n";
  for (VarId v : table.all()) {
    out += "    {\"name\": " + detail::json_string(table.name(v)) + ", \"frame\": [";
    const auto& f = table.frame(v);
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? ", " : "") + detail::json_string(f[i]);
    out += v.value + 1 < table.size() ? "]},\n" : "]}\n";
  }
  out += "  ],\n  \"potentials\": [\n";
  for (std::size_t p = 0; p < model.potentials().size(); ++p) {
    const Relation& r = model.potential(p);
    out += "    {\"label\": " + detail::json_string(model.hypergraph().label(p)) + ", \"vars\": [";
    for (std::size_t i = 0; i < r.schema().size(); ++i) out += (i ? ", " : "") + detail::json_string(table.name(r.schema()[i]));
    out += "],\n     \"rows\": [";
    std::size_t n = 0;
    for (const auto& [c, value] : r.rows()) {
      out += n++ ? ",\n              [" : "\n              [";
      for (std::size_t i = 0; i < c.size(); ++i) out += detail::json_string(table.frame(r.schema()[i])[c[i]]) + ", ";
      out += detail::round_trip(value) + "]";
    }
    out += "]}";
    out += p + 1 < model.potentials().size() ? ",\n" : "\n";
  }
  out += "  ]\n}\n";
  return out;
}

inline std::string model_hash(const MarkovModel& model) {
  return "fnv1a64:" + detail::hex64(detail::fnv1a(save_model(model)));
}

enum class OutputFormat { Table, Csv };

/// Aligned text table, 6 significant digits.
inline std::string format_table(const Relation& r) {
  const auto& table = r.table();
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header;
  for (VarId v : r.schema()) header.push_back(table.name(v));
  header.push_back("f");
  cells.push_back(header);
  for (const auto& [c, value] : r.rows()) {
    std::vector<std::string> row;
    for (std::size_t i = 0; i < c.size(); ++i) row.push_back(table.frame(r.schema()[i])[c[i]]);
    row.push_back(detail::significant(value, 6));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

/// Header row of variable names then `f`; full round-trip precision.
inline std::string format_csv(const Relation& r) {
  const auto& table = r.table();
  std::string out;
  for (VarId v : r.schema()) out += detail::csv_field(table.name(v)) + ",";
  out += "f\n";
  for (const auto& [c, value] : r.rows()) {
    for (std::size_t i = 0; i < c.size(); ++i) out += detail::csv_field(table.frame(r.schema()[i])[c[i]]) + ",";
    out += detail::round_trip(value) + "\n";
  }
  return out;
}

inline std::string format_relation(const Relation& r, OutputFormat format) {
  return format == OutputFormat::Csv ? format_csv(r) : format_table(r);
}

}  // namespace reljt
