#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strongsig/summaries.hpp"

namespace strongsig {

inline constexpr const char* kVersion = "0.1.0";

// Shortest round-trip decimal representation, locale-independent.
std::string format_double(double v);

// Matrix TSV: header `gene_id<TAB>sample:group[:batch]...`, one row per gene.
ReplicateMatrix read_matrix_tsv(const std::string& path);

// Summary TSV: `gene_id<TAB>xbar<TAB>s2<TAB>df`, with header.
std::vector<GeneSummary> read_summary_tsv(const std::string& path);
void write_summary_tsv(const std::string& path,
                       const std::vector<GeneSummary>& summaries);

// One variance per line; blank lines ignored.
std::vector<double> read_variance_file(const std::string& path);

// FNV-1a hash of the file bytes, for run manifests.
std::uint64_t file_digest(const std::string& path);

}  // namespace strongsig
