#include "chainid/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ArgumentError(what + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ArgumentError(what + " rows must all have the same length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

std::vector<VertexPair> pairs_from_json(const Json& j, const std::string& what) {
  std::vector<VertexPair> pairs;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ArgumentError(what + " entries must be [u, v] pairs");
    pairs.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  return pairs;
}

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw ArgumentError(std::string("missing field '") + name + "'");
  return j.at(name);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& cell) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\r')) ++end;
  if (end == begin || *end != '\0' || errno == ERANGE) throw ArgumentError("bad number '" + cell + "' in CSV");
  return v;
}

// Header row plus numeric rows; returns the value rows.
Eigen::MatrixXd parse_numeric_csv(const std::string& text, std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("CSV input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  header = split(line, ',');
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ArgumentError("CSV row " + std::to_string(rows.size() + 1) + " has " + std::to_string(cells.size()) +
                          " columns, header has " + std::to_string(header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_number(c));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < header.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::string header_row(const std::vector<int>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ',';
    out += 'x' + std::to_string(labels[i]);
  }
  return out + '\n';
}

std::string matrix_rows_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Json graph_to_json(const ChainGraph& graph) {
  Json j;
  j["n"] = graph.n_vertices();
  j["components"] = graph.components();
  Json directed = Json::array();
  for (const auto& [u, v] : graph.directed_edges()) directed.push_back({u, v});
  Json undirected = Json::array();
  for (const auto& [u, v] : graph.undirected_edges()) undirected.push_back({u, v});
  j["directed_edges"] = std::move(directed);
  j["undirected_edges"] = std::move(undirected);
  return j;
}

ChainGraph graph_from_json(const Json& j) {
  try {
    return ChainGraph::checked(field(j, "n").get<int>(), field(j, "components").get<std::vector<VertexSet>>(),
                               pairs_from_json(field(j, "directed_edges"), "directed_edges"),
                               pairs_from_json(field(j, "undirected_edges"), "undirected_edges"));
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed graph JSON: ") + e.what());
  }
}

Json covariance_to_json(const CovMatrix& sigma) {
  Json j;
  j["labels"] = sigma.labels();
  j["matrix"] = matrix_to_json(sigma.entries());
  return j;
}

CovMatrix covariance_from_json(const Json& j) {
  try {
    std::vector<int> labels;
    if (j.is_object() && j.contains("labels")) labels = j.at("labels").get<std::vector<int>>();
    const Json& m = j.is_object() ? field(j, "matrix") : j;
    return CovMatrix(matrix_from_json(m, "matrix"), std::move(labels));
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed covariance JSON: ") + e.what());
  }
}

Json sem_to_json(const AmpSem& sem) {
  Json j = graph_to_json(sem.graph);
  j["weights"] = matrix_to_json(sem.weights);
  Json blocks = Json::array();
  for (const auto& b : sem.noise_covs) blocks.push_back(matrix_to_json(b));
  j["noise_covs"] = std::move(blocks);
  return j;
}

AmpSem sem_from_json(const Json& j) {
  AmpSem sem;
  try {
    sem.graph = graph_from_json(j);
    sem.weights = matrix_from_json(field(j, "weights"), "weights");
    for (const auto& b : field(j, "noise_covs")) sem.noise_covs.push_back(matrix_from_json(b, "noise_covs block"));
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed SEM JSON: ") + e.what());
  }
  if (static_cast<int>(sem.noise_covs.size()) != sem.graph.n_components()) {
    throw ArgumentError("SEM JSON needs one noise block per component");
  }
  for (int c = 0; c < sem.graph.n_components(); ++c) {
    const auto size = static_cast<Eigen::Index>(sem.graph.component(c).size());
    if (sem.noise_covs[c].rows() != size || sem.noise_covs[c].cols() != size) {
      throw ArgumentError("noise block " + std::to_string(c) + " does not match its component size");
    }
  }
  if (const auto v = validate(sem); !v) throw ArgumentError("invalid SEM: " + v.violation);
  return sem;
}

Json learn_result_to_json(const LearnResult& result) {
  Json j;
  j["order"] = result.order.sequence;
  j["partition"] = result.partition;
  j["step_values"] = result.step_values;
  j["graph"] = result.recovered_graph ? graph_to_json(*result.recovered_graph) : Json(nullptr);
  j["mode"] = result.mode;
  return j;
}

std::vector<VertexSet> components_from_json(const Json& j) {
  try {
    if (j.is_object()) return field(j, "components").get<std::vector<VertexSet>>();
    return j.get<std::vector<VertexSet>>();
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed components JSON: ") + e.what());
  }
}

std::string dataset_to_csv(const Dataset& data) {
  std::vector<int> labels(static_cast<std::size_t>(data.values.cols()));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  return header_row(labels) + matrix_rows_csv(data.values);
}

Dataset dataset_from_csv(const std::string& text) {
  std::vector<std::string> header;
  Dataset data;
  data.values = parse_numeric_csv(text, header);
  data.n_samples = static_cast<int>(data.values.rows());
  data.n_vars = static_cast<int>(data.values.cols());
  if (!data.values.allFinite()) throw DataError("dataset contains non-finite values");
  return data;
}

std::string covariance_to_csv(const CovMatrix& sigma) {
  return header_row(sigma.labels()) + matrix_rows_csv(sigma.entries());
}

CovMatrix covariance_from_csv(const std::string& text) {
  std::vector<std::string> header;
  Eigen::MatrixXd m = parse_numeric_csv(text, header);
  std::vector<int> labels;
  for (const auto& h : header) {
    if (h.size() < 2 || h[0] != 'x') throw ArgumentError("covariance CSV header cells must look like x<label>");
    labels.push_back(static_cast<int>(parse_number(h.substr(1))));
  }
  return CovMatrix(std::move(m), std::move(labels));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw ArgumentError("error writing '" + path + "'");
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ArgumentError("malformed JSON in " + what + ": " + e.what());
  }
}

}  // namespace chainid
