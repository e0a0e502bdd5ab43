#pragma once

#include <tiedlm/net.hpp>

#include <filesystem>
#include <iosfwd>

namespace tiedlm {

// On-disk layout:
//   "TIEDLM1\n"
//   key=value lines for every ModelConfig field, then an empty line
//   "<tensor count>\n"
//   per tensor: "<name> <rows> <cols>\n" then rows*cols little-endian float64, row-major

void write_checkpoint(std::ostream &out, const ModelParams &params);
ModelParams read_checkpoint(std::istream &in);

/// Writes to a sibling temporary and renames, so a failed write leaves no partial file.
void save_checkpoint(const std::filesystem::path &path, const ModelParams &params);
ModelParams load_checkpoint(const std::filesystem::path &path);

} // namespace tiedlm
