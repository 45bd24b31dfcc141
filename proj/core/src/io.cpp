#include "qpareto/io.hpp"

#include <cstdio>
#include <fstream>

namespace qpareto::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);  // fixed line endings everywhere
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const std::vector<double>& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

void write_field_csv(const std::filesystem::path& path, const ControlField& f) {
  std::vector<std::vector<double>> rows;
  rows.reserve(f.grid().steps);
  for (int j = 0; j < f.grid().steps; ++j)
    rows.push_back({f.grid().time(j), f.value(j)});
  write_csv(path, {"t", "epsilon"}, rows);
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const FieldSpectrum& spec) {
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < spec.frequencies.size(); ++k)
    rows.push_back({spec.frequencies[k], spec.power[k]});
  write_csv(path, {"omega", "power"}, rows);
}

void write_gradient_csv(const std::filesystem::path& path,
                        const GradientVector& grad) {
  std::vector<std::string> header{"t"};
  for (int i = 0; i < grad.observable_count(); ++i)
    header.push_back("a_" + std::to_string(i + 1));
  std::vector<std::vector<double>> rows;
  for (int j = 0; j < grad.grid.steps; ++j) {
    std::vector<double> row{grad.grid.time(j)};
    for (int i = 0; i < grad.observable_count(); ++i)
      row.push_back(grad.samples(i, j));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_track_csv(const std::filesystem::path& path, const TrackResult& res) {
  const int m = res.targets.empty() ? 0 : static_cast<int>(res.targets[0].size());
  std::vector<std::string> header{"s"};
  for (int k = 0; k < m; ++k) header.push_back("w_" + std::to_string(k + 1));
  for (int k = 0; k < m; ++k) header.push_back("phi_" + std::to_string(k + 1));
  header.insert(header.end(), {"error", "condition", "fluence"});
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < res.s.size(); ++i) {
    std::vector<double> row{res.s[i]};
    for (int k = 0; k < m; ++k) row.push_back(res.targets[i][k]);
    for (int k = 0; k < m; ++k) row.push_back(res.expectations[i][k]);
    row.push_back(res.tracking_error[i]);
    row.push_back(res.condition_numbers[i]);
    row.push_back(res.fluence[i]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_partition_csv(const std::filesystem::path& path,
                         const PermutationClassPartition& part) {
  std::vector<std::vector<double>> rows;
  for (size_t c = 0; c < part.classes.size(); ++c)
    rows.push_back({static_cast<double>(c),
                    static_cast<double>(part.classes[c].size()),
                    part.critical_values[c],
                    static_cast<double>(part.dimensions[c])});
  write_csv(path, {"class_id", "size", "critical_value", "dimension"}, rows);
}

void write_shots_csv(const std::filesystem::path& path,
                     const std::vector<ShotRecord>& records) {
  std::ofstream out = open_out(path);
  out << "basis,outcome,count\n";
  for (const ShotRecord& rec : records)
    for (size_t i = 0; i < rec.counts.size(); ++i)
      out << rec.basis_index << "," << i << "," << rec.counts[i] << "\n";
}

nlohmann::json matrix_to_json(const cxmat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

cxmat matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return cxmat(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  cxmat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const nlohmann::json& e = j.at(r).at(c);
      m(r, c) = cxd(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace qpareto::io
