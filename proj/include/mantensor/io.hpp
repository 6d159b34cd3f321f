#pragma once

#include <string>

#include "mantensor/experiments.hpp"
#include "mantensor/tensor.hpp"

namespace mantensor {

// Binary tensor container. Little-endian layout:
//   bytes 0..3   magic "MVT1"
//   byte  4      endianness tag (1 = little)
//   byte  5      format version (1)
//   bytes 6..7   reserved (0)
//   u32          manifold kind (0 euclidean, 1 sphere, 2 spd)
//   u32          intrinsic dim
//   u32          embedding dim
//   u32          order
//   u64[order]   shape
//   f64[...]     entries row-major, coordinates contiguous per entry
void write_mvt(const std::string& path, const MvTensor& t);

// Validates manifold invariants on read. With repair=true sphere points are
// renormalised and SPD matrices symmetrised with eigenvalues clamped to
// repair_clamp_rel * lambda_max; otherwise a bad point throws
// InvariantViolation.
MvTensor read_mvt(const std::string& path, bool repair = false,
                  double repair_clamp_rel = 1e-12);

// Raw f64 voxel field of row-major 3x3 matrices, voxel index
// ((x*Y)+y)*Z + z. Crop bounds are 1-based inclusive; a single z slice
// yields a 2-D tensor. Each voxel is symmetrised and its eigenvalues are
// clamped to clamp_rel * lambda_max (falling back to 1 when lambda_max <= 0).
MvTensor ingest_spd_image(const std::string& path, int x_dim, int y_dim,
                          int z_dim, int x0, int x1, int y0, int y1, int z0,
                          int z1, double clamp_rel = 1e-6);

// header method,rank,eps_rel,delta_rel,lower_bound,time_s,iters; rank tuples
// join with 'x'; absent optionals stay empty; floats print with 17
// significant digits so reread values match exactly.
std::string report_to_csv(const SweepReport& report);
SweepReport report_from_csv(const std::string& text);

void write_report_csv(const std::string& path, const SweepReport& report);
SweepReport read_report_csv(const std::string& path);

}  // namespace mantensor
