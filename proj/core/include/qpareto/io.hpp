#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qpareto/field.hpp"
#include "qpareto/gradient.hpp"
#include "qpareto/kinematics.hpp"
#include "qpareto/measurement.hpp"
#include "qpareto/motc.hpp"

namespace qpareto::io {

// Shortest round-trip decimal representation (printf %.17g); all CSV output
// goes through this so re-runs are byte-identical.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// t,epsilon
void write_field_csv(const std::filesystem::path& path, const ControlField& f);
// omega,power
void write_spectrum_csv(const std::filesystem::path& path,
                        const FieldSpectrum& spec);
// t,a_1,...,a_m
void write_gradient_csv(const std::filesystem::path& path,
                        const GradientVector& grad);
// s,w_1..w_m,phi_1..phi_m,error,condition,fluence
void write_track_csv(const std::filesystem::path& path, const TrackResult& res);
// class_id,size,critical_value,dimension
void write_partition_csv(const std::filesystem::path& path,
                         const PermutationClassPartition& part);
// basis,outcome,count
void write_shots_csv(const std::filesystem::path& path,
                     const std::vector<ShotRecord>& records);

// Row-major complex matrix as nested [re, im] pairs.
nlohmann::json matrix_to_json(const cxmat& m);
cxmat matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace qpareto::io
