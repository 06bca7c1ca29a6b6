#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "hetgm/graph.hpp"

namespace hetgm {

/// Writes via a temporary file in the same directory, then renames, so
/// readers never observe a partial file.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer);

/// FNV-1a 64 over the file bytes, lowercase hex.
std::string file_checksum(const std::string& path);

/// Headerless CSV, one row per line, values printed with enough digits to
/// round-trip exactly.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// One "node,j,l,value" row per upper-triangular entry (j <= l), 0-based.
void write_omega_csv(const OmegaField& field, const std::string& path);
OmegaField read_omega_csv(const std::string& path);

/// JSON lines, one object per node: {"node": i, "d": d, "edges": [[j,l], ...]}.
void write_edges_jsonl(const EdgeSetCollection& edges, const std::string& path);
EdgeSetCollection read_edges_jsonl(const std::string& path, int dim_hint = 0);

}  // namespace hetgm
