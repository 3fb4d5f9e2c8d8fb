#pragma once

#include <filesystem>
#include <iosfwd>

#include "pcd/problem.hpp"

namespace pcd {

// JSON instance document: layout, edge list, per-node dense row-major H_i,
// r_i, regularizer, and generation provenance. Only QP terms with box or
// zero regularizers are serializable.
void write_instance(std::ostream& out, const PartitionedProblem& problem);
PartitionedProblem read_instance(std::istream& in);

void save_instance(const std::filesystem::path& path, const PartitionedProblem& problem);
PartitionedProblem load_instance(const std::filesystem::path& path);

}  // namespace pcd
