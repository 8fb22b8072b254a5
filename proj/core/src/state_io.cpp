#include "csl/state_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace csl {

namespace {

using nlohmann::json;

Complex parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw ContractViolation("complex entry must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Matrix parse_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw ContractViolation("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw ContractViolation("matrix rows have unequal length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = parse_complex(j[i][k]);
  }
  return m;
}

RegisterLayout parse_layout(const json& j) {
  if (!j.is_array()) throw ContractViolation("layout must be an array of [label, dim]");
  std::vector<Register> regs;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != 2) throw ContractViolation("layout entry must be [label, dim]");
    regs.push_back({r[0].get<std::string>(), r[1].get<int>()});
  }
  return RegisterLayout(regs);
}

json encode_complex(Complex c) { return json::array({c.real(), c.imag()}); }

json encode_layout(const RegisterLayout& l) {
  json out = json::array();
  for (const auto& r : l.registers()) out.push_back(json::array({r.label, r.dim}));
  return out;
}

json parse_or_throw(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

SampledState parse_state_json(const std::string& text) {
  json j = parse_or_throw(text);
  try {
    RegisterLayout layout = parse_layout(j.at("layout"));
    if (j.contains("matrix")) return DensityOperator(parse_matrix(j["matrix"]), layout);
    if (j.contains("vector")) {
      const auto& v = j["vector"];
      Vector amps(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) amps(i) = parse_complex(v[i]);
      return PureStateVector(amps, layout);
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("state file: ") + e.what());
  }
  throw ContractViolation("state file needs a \"matrix\" or \"vector\" field");
}

SampledState read_state_file(const std::string& path) {
  return parse_state_json(read_text_file(path));
}

std::string state_to_json(const DensityOperator& rho) {
  json m = json::array();
  for (Eigen::Index i = 0; i < rho.matrix().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < rho.matrix().cols(); ++k) row.push_back(encode_complex(rho.matrix()(i, k)));
    m.push_back(row);
  }
  return json{{"layout", encode_layout(rho.layout())}, {"matrix", m}}.dump();
}

std::string state_to_json(const PureStateVector& psi) {
  json v = json::array();
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) v.push_back(encode_complex(psi.amplitudes()(i)));
  return json{{"layout", encode_layout(psi.layout())}, {"vector", v}}.dump();
}

KrausData parse_kraus_json(const std::string& text) {
  json j = parse_or_throw(text);
  KrausData out;
  try {
    out.input_dim = j.at("input_dim").get<int>();
    out.output_dim = j.at("output_dim").get<int>();
    for (const auto& k : j.at("kraus")) out.kraus.push_back(parse_matrix(k));
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("kraus file: ") + e.what());
  }
  return out;
}

KrausData read_kraus_file(const std::string& path) { return parse_kraus_json(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace csl
