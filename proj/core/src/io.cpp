#include "robusttransport/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rtr {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line,
                             const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

DiscreteMeasure read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_commas(line);
  if (header.empty()) parse_fail(path, 1, "empty header");

  bool has_weights = header[0] == "w";
  size_t first_col = has_weights ? 1 : 0;
  size_t d = header.size() - first_col;
  if (d == 0) parse_fail(path, 1, "no coordinate columns");
  for (size_t j = 0; j < d; ++j)
    if (header[first_col + j] != "x" + std::to_string(j + 1))
      parse_fail(path, 1, "expected column x" + std::to_string(j + 1) + ", got '" +
                              header[first_col + j] + "'");

  std::vector<double> weights;
  std::vector<double> coords;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_commas(line);
    if (cells.size() != header.size())
      parse_fail(path, lineno,
                 "expected " + std::to_string(header.size()) + " cells, got " +
                     std::to_string(cells.size()));
    try {
      size_t pos = 0;
      if (has_weights) {
        weights.push_back(std::stod(cells[0], &pos));
        if (pos != cells[0].size()) throw std::invalid_argument(cells[0]);
      }
      for (size_t j = 0; j < d; ++j) {
        coords.push_back(std::stod(cells[first_col + j], &pos));
        if (pos != cells[first_col + j].size())
          throw std::invalid_argument(cells[first_col + j]);
      }
    } catch (const std::exception&) {
      parse_fail(path, lineno, "malformed number");
    }
  }
  const auto n = static_cast<Eigen::Index>(coords.size() / d);
  if (n == 0) parse_fail(path, lineno + 1, "no data rows");
  Eigen::MatrixXd pts(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j)
      pts(i, j) = coords[static_cast<size_t>(i) * d + static_cast<size_t>(j)];
  if (!has_weights) return DiscreteMeasure::uniform(std::move(pts));
  Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(weights.data(), n);
  return DiscreteMeasure(std::move(pts), std::move(w));
}

void write_csv(const std::filesystem::path& path, const DiscreteMeasure& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "w";
  for (Eigen::Index j = 0; j < m.dim(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    out << format_double(m.weights()[i]);
    for (Eigen::Index j = 0; j < m.dim(); ++j)
      out << "," << format_double(m.points()(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const auto d = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < d; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

}  // namespace

json plan_to_json(const CorruptionPlan& plan) {
  return json{{"eps", plan.eps},
              {"rho", plan.rho},
              {"tv_indices", plan.tv_indices},
              {"displacements", matrix_to_json(plan.displacements)},
              {"average_displacement", plan.average_displacement()}};
}

CorruptionPlan plan_from_json(const json& j) {
  CorruptionPlan plan;
  plan.eps = j.at("eps").get<double>();
  plan.rho = j.at("rho").get<double>();
  plan.tv_indices = j.at("tv_indices").get<std::vector<int>>();
  plan.displacements = matrix_from_json(j.at("displacements"));
  return plan;
}

json report_to_json(const FilterReport& report) {
  json iters = json::array();
  for (const auto& it : report.iterations)
    iters.push_back(json{{"trace_objective", it.trace_objective},
                         {"projector_rank", it.projector_rank},
                         {"removed_indices", it.removed_indices},
                         {"L_indices", it.L_indices}});
  return json{{"iterations", std::move(iters)},
              {"final_size", report.final_size},
              {"terminated_by_threshold", report.terminated_by_threshold},
              {"diagnostic", report.diagnostic},
              {"kept_indices", report.kept_indices}};
}

namespace {

std::string tag_name(LossTag tag) {
  switch (tag) {
    case LossTag::linear: return "linear";
    case LossTag::absolute_regression: return "absolute_regression";
    case LossTag::hinge: return "hinge";
  }
  throw std::logic_error("unknown loss tag");
}

LossTag tag_from_name(const std::string& name) {
  if (name == "linear") return LossTag::linear;
  if (name == "absolute_regression") return LossTag::absolute_regression;
  if (name == "hinge") return LossTag::hinge;
  throw std::runtime_error("unknown loss family '" + name + "'");
}

}  // namespace

json loss_to_json(const LossSpec& loss) {
  return json{{"family", tag_name(loss.tag)},
              {"theta", vector_to_json(loss.theta)},
              {"affine_map", matrix_to_json(loss.affine_map)},
              {"offset", vector_to_json(loss.offset)},
              {"growth_order", loss.growth_order},
              {"lip_const", loss.lip_const()}};
}

LossSpec loss_from_json(const json& j) {
  LossSpec loss;
  loss.tag = tag_from_name(j.at("family").get<std::string>());
  loss.theta = vector_from_json(j.at("theta"));
  loss.affine_map = matrix_from_json(j.at("affine_map"));
  loss.offset = vector_from_json(j.at("offset"));
  loss.growth_order = j.value("growth_order", 1);
  return loss;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace rtr
