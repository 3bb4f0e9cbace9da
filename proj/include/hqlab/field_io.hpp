#pragma once

// Raw little-endian float64 dumps of grid fields with a JSON sidecar
// describing the layout: <stem>.f64 and <stem>.meta.json.

#include <filesystem>

#include "hqlab/grid.hpp"

namespace hqlab {

/// Scalars in site order.
void write_field(const std::filesystem::path& stem, const ScalarField& u);
/// Per site the n x n matrix row-major, each entry as (re, im).
void write_field(const std::filesystem::path& stem, const HermitianField& a);

ScalarField read_scalar_field(const std::filesystem::path& stem);
HermitianField read_hermitian_field(const std::filesystem::path& stem);

}  // namespace hqlab
