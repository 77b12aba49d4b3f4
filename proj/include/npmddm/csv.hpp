#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace npmddm {

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_number(double v);

/// Matrix as comma-separated rows, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Curves as columns under a header row.
void write_columns_csv(const std::filesystem::path& path, std::span<const std::string> headers,
                       std::span<const std::vector<double>> columns);

/// Parses a headerless numeric CSV matrix.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

}  // namespace npmddm
