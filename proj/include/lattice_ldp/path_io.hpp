#pragma once

// Path ensemble export.
//
// CSV: header "replica,site,time,value"; site is the lexicographic flat index
// into V_n, time is t_step; rows ordered by replica, then time, then site.
//
// Binary (little-endian):
//   char[8]  "LLDPPATH"
//   u32      version (1), dim, radius, reserved (0)
//   u64      replicas, recorded time points
//   f64      horizon, dt
//   u64      record_every
//   u64      recorded step indices (one per time point)
//   f64      values, row-major [replica][time][site]

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lattice_ldp/lattice.hpp"

namespace lattice_ldp {

struct PathTable {
  LatticeShape shape;
  TimeGrid grid;
  std::size_t record_every = 1;
  std::vector<std::size_t> steps;
  std::vector<PathField> replicas;
};

void write_paths_csv(std::ostream& out, const PathTable& table);
void write_paths_binary(std::ostream& out, const PathTable& table);
PathTable read_paths_binary(std::istream& in);

/// Parses the CSV layout back; shape and grid are not stored in CSV, so they are supplied.
PathTable read_paths_csv(std::istream& in, const LatticeShape& shape, const TimeGrid& grid);

/// Formats a double so that it round-trips exactly.
std::string format_double(double value);

}  // namespace lattice_ldp
