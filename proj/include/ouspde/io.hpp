#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ouspde/basis.hpp"
#include "ouspde/common.hpp"
#include "ouspde/fit.hpp"
#include "ouspde/kernel.hpp"
#include "ouspde/operators.hpp"
#include "ouspde/simulator.hpp"

namespace ouspde {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

/// Splits one CSV data line into doubles.
inline std::vector<double> split_csv(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace detail

/// Grid profile as "x,value" rows.
inline void write_grid_function(const std::string& path, const GridFunction& g) {
  auto out = detail::open_out(path);
  out << "x,value\n";
  for (int i = 0; i <= g.panels(); ++i)
    out << detail::fmt17(g.x(i)) << ',' << detail::fmt17(g.values[i]) << '\n';
}

inline GridFunction read_grid_function(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::split_csv(line);
    require(row.size() == 2, "grid function row must be x,value");
    vals.push_back(row[1]);
  }
  require(vals.size() >= 3 && vals.size() % 2 == 1, "grid function needs an even panel count");
  GridFunction g;
  g.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
  return g;
}

/// Coefficients as "n,coeff" rows.
inline void write_spectral_state(const std::string& path, const SpectralState& s) {
  auto out = detail::open_out(path);
  out << "n,coeff\n";
  for (int n = 0; n <= s.truncation(); ++n)
    out << n << ',' << detail::fmt17(s.coeffs[n]) << '\n';
}

inline SpectralState read_spectral_state(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::split_csv(line);
    require(row.size() == 2, "spectral state row must be n,coeff");
    require(static_cast<size_t>(row[0]) == vals.size(), "spectral state rows must be ordered");
    vals.push_back(row[1]);
  }
  require(!vals.empty(), "spectral state is empty");
  SpectralState s;
  s.coeffs = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
  return s;
}

/// Dense matrix as "i,j,value" rows.
inline void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = detail::open_out(path);
  out << "i,j,value\n";
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      out << i << ',' << j << ',' << detail::fmt17(m(i, j)) << '\n';
}

inline Eigen::MatrixXd read_matrix(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::tuple<int, int, double>> cells;
  int rows = 0, cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::split_csv(line);
    require(row.size() == 3, "matrix row must be i,j,value");
    const int i = static_cast<int>(row[0]), j = static_cast<int>(row[1]);
    cells.emplace_back(i, j, row[2]);
    rows = std::max(rows, i + 1);
    cols = std::max(cols, j + 1);
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& [i, j, v] : cells) m(i, j) = v;
  return m;
}

/// Trajectory in long form, "t,n,coeff" rows.
inline void write_trajectory(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  out << "t,n,coeff\n";
  for (size_t k = 0; k < traj.states.size(); ++k)
    for (int n = 0; n < traj.states[k].size(); ++n)
      out << detail::fmt17(traj.times[k]) << ',' << n << ','
          << detail::fmt17(traj.states[k][n]) << '\n';
}

inline Trajectory read_trajectory(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);
  Trajectory traj;
  std::vector<double> current;
  double current_t = 0.0;
  bool have_row = false;
  auto flush = [&] {
    if (!have_row) return;
    traj.times.push_back(current_t);
    traj.states.push_back(
        Eigen::Map<Eigen::VectorXd>(current.data(), static_cast<long>(current.size())));
    current.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::split_csv(line);
    require(row.size() == 3, "trajectory row must be t,n,coeff");
    if (!have_row || row[0] != current_t) {
      flush();
      current_t = row[0];
      have_row = true;
    }
    require(static_cast<size_t>(row[1]) == current.size(), "trajectory modes must be ordered");
    current.push_back(row[2]);
  }
  flush();
  require(!traj.states.empty(), "trajectory is empty");
  return traj;
}

/// Reconstructed profile snapshots, "t,x,u" rows, every `stride`-th state.
inline void write_snapshots(const std::string& path, const Trajectory& traj,
                            const BasisSpec& spec, int stride = 1) {
  require(stride >= 1, "write_snapshots: stride must be positive");
  auto out = detail::open_out(path);
  out << "t,x,u\n";
  for (size_t k = 0; k < traj.states.size(); k += stride) {
    SpectralState s;
    s.coeffs = traj.states[k];
    const GridFunction g = reconstruct(s, spec);
    for (int i = 0; i <= g.panels(); ++i)
      out << detail::fmt17(traj.times[k]) << ',' << detail::fmt17(g.x(i)) << ','
          << detail::fmt17(g.values[i]) << '\n';
  }
}

/// Sweep rows "param,estimate,stderr".
inline void write_sweep(const std::string& path, const std::vector<SweepPoint>& points) {
  auto out = detail::open_out(path);
  out << "param,estimate,stderr\n";
  for (const auto& p : points)
    out << detail::fmt17(p.param) << ',' << detail::fmt17(p.estimate) << ','
        << detail::fmt17(p.std_error) << '\n';
}

inline json decay_fit_json(const DecayFit& fit) {
  json j;
  j["exponent"] = fit.exponent;
  j["constant"] = fit.constant;
  j["max_residual_ratio"] = fit.max_residual_ratio;
  j["pass"] = fit.pass;
  j["degenerate"] = fit.degenerate;
  j["points_used"] = fit.points_used;
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline json read_json_file(const std::string& path) {
  auto in = detail::open_in(path);
  json j;
  in >> j;
  return j;
}

inline json operator_to_json(const CoefficientOperator& op) {
  json j;
  switch (op.kind) {
    case OperatorKind::constant: j["kind"] = "constant"; break;
    case OperatorKind::inner_product: j["kind"] = "inner_product"; break;
    case OperatorKind::convolution: j["kind"] = "convolution"; break;
  }
  j["value"] = op.value;
  j["f_const"] = op.f_const;
  j["terms"] = json::array();
  for (const auto& t : op.terms) {
    json jt;
    jt["amp"] = t.amp;
    jt["profile_mode"] = t.profile_mode;
    jt["link"] = link_name(t.link);
    jt["scale"] = t.scale;
    jt["arg"] = t.arg;
    j["terms"].push_back(jt);
  }
  j["phis"] = op.phis;
  j["psi"] = op.psi;
  j["kappa2"] = op.kappa2;
  j["alpha"] = op.alpha;
  j["beta"] = op.beta;
  j["gamma"] = op.gamma;
  return j;
}

inline CoefficientOperator operator_from_json(const json& j) {
  CoefficientOperator op;
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant")
    op.kind = OperatorKind::constant;
  else if (kind == "inner_product")
    op.kind = OperatorKind::inner_product;
  else if (kind == "convolution")
    op.kind = OperatorKind::convolution;
  else
    throw std::invalid_argument("unknown operator kind: " + kind);
  op.value = j.value("value", 1.0);
  op.f_const = j.value("f_const", op.kind == OperatorKind::constant ? op.value : 1.0);
  if (j.contains("terms"))
    for (const auto& jt : j["terms"]) {
      LinkTerm t;
      t.amp = jt.value("amp", 0.0);
      t.profile_mode = jt.value("profile_mode", 0);
      t.link = link_from_name(jt.value("link", "tanh"));
      t.scale = jt.value("scale", 1.0);
      t.arg = jt.value("arg", 0);
      op.terms.push_back(t);
    }
  if (j.contains("phis")) op.phis = j["phis"].get<std::vector<std::string>>();
  op.psi = j.value("psi", "");
  op.kappa2 = j.value("kappa2", 0.5);
  op.alpha = j.value("alpha", 1.0);
  op.beta = j.value("beta", 4.0);
  op.gamma = j.value("gamma", 4.0);
  return op;
}

inline json field_to_json(const CovarianceField& field) {
  json j;
  j["K"] = field.spec.truncation;
  j["M"] = field.spec.grid_points;
  j["operator"] = operator_to_json(field.op);
  return j;
}

/// Accepts either {"builtin": name, "K":.., "M":..} or an explicit operator
/// description. K defaults apply when the file leaves them out.
inline CovarianceField field_from_json(const json& j, int default_k = 16, int default_m = 4096) {
  const int K = j.value("K", default_k);
  const int M = j.value("M", default_m);
  if (j.contains("builtin")) return builtin_field(j["builtin"].get<std::string>(), K, M);
  CovarianceField field;
  field.spec = BasisSpec::make(K, M);
  require(j.contains("operator"), "field config needs an operator block or a builtin name");
  field.op = operator_from_json(j["operator"]);
  return field;
}

}  // namespace ouspde
