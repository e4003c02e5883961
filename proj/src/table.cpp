#include "latmut/table.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace latmut {

const StatRow* ResultTable::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

double ResultTable::value_of(const std::string& name) const {
  const StatRow* r = find(name);
  if (!r) throw std::out_of_range("ResultTable: no row named " + name);
  return r->value;
}

void ResultTable::add(const std::string& name, double value, double std_error,
                      long replicates, std::uint64_t seed) {
  rows.push_back({name, value, std_error, replicates, seed});
}

namespace {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  bool need = s.find_first_of(",\"\r\n") != std::string::npos;
  if (!need) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string to_csv(const ResultTable& table) {
  std::string out = "name,value,std_error,replicates,seed\n";
  for (const auto& r : table.rows) {
    out += csv_quote(r.name);
    out += ',';
    out += fmt17(r.value);
    out += ',';
    out += fmt17(r.std_error);
    out += ',';
    out += std::to_string(r.replicates);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

std::string to_json(const ResultTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"name", r.name},
                    {"value", r.value},
                    {"std_error", r.std_error},
                    {"replicates", r.replicates},
                    {"seed", r.seed}});
  }
  nlohmann::json doc;
  doc["columns"] = {"name", "value", "std_error", "replicates", "seed"};
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

ResultTable table_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  ResultTable table;
  for (const auto& r : doc.at("rows")) {
    table.rows.push_back({r.at("name").get<std::string>(), r.at("value").get<double>(),
                          r.at("std_error").get<double>(), r.at("replicates").get<long>(),
                          r.at("seed").get<std::uint64_t>()});
  }
  return table;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace latmut
