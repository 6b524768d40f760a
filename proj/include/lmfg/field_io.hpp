#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lmfg/grid.hpp"

namespace lmfg {

/// Binary record: "LMFG", u32 version (1), u8 dims, u32 n_i per axis,
/// f64 L_i per axis, then f64 values, all little-endian, row-major.
void write_field(std::ostream& os, const Field& f);
Field read_field(std::istream& is);

void write_field_file(const std::string& path, const Field& f);
Field read_field_file(const std::string& path);

/// A sequence of records back to back; used for trajectories.
void write_fields_file(const std::string& path, const std::vector<Field>& fields);
std::vector<Field> read_fields_file(const std::string& path);

}  // namespace lmfg
