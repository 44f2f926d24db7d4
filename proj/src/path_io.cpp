#include "lattice_ldp/path_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "lattice_ldp/error.hpp"

namespace lattice_ldp {

static_assert(std::endian::native == std::endian::little, "binary path format assumes little-endian");

namespace {

constexpr char kMagic[8] = {'L', 'L', 'D', 'P', 'P', 'A', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    fail(ErrorCode::io_failure, "truncated binary path file");
  }
  return value;
}

void check_table(const PathTable& table) {
  for (const auto& field : table.replicas) {
    if (field.shape != table.shape || field.time_points != table.steps.size()) {
      fail(ErrorCode::invalid_argument, "path table replicas disagree with its header");
    }
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_paths_csv(std::ostream& out, const PathTable& table) {
  check_table(table);
  out << "replica,site,time,value\n";
  std::string line;
  for (std::size_t r = 0; r < table.replicas.size(); ++r) {
    const auto& field = table.replicas[r];
    for (std::size_t p = 0; p < table.steps.size(); ++p) {
      const std::string prefix = std::to_string(r) + ",";
      const std::string time = "," + format_double(table.grid.time(table.steps[p])) + ",";
      for (std::size_t s = 0; s < table.shape.site_count(); ++s) {
        line = prefix;
        line += std::to_string(s);
        line += time;
        line += format_double(field.at(p, s));
        line += '\n';
        out << line;
      }
    }
  }
  if (!out) fail(ErrorCode::io_failure, "failed writing path CSV");
}

void write_paths_binary(std::ostream& out, const PathTable& table) {
  check_table(table);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.shape.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.shape.radius()));
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, table.replicas.size());
  put<std::uint64_t>(out, table.steps.size());
  put<double>(out, table.grid.horizon());
  put<double>(out, table.grid.dt());
  put<std::uint64_t>(out, table.record_every);
  for (auto s : table.steps) put<std::uint64_t>(out, s);
  for (const auto& field : table.replicas) {
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  }
  if (!out) fail(ErrorCode::io_failure, "failed writing binary paths");
}

PathTable read_paths_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    fail(ErrorCode::io_failure, "not a binary path file");
  }
  if (get<std::uint32_t>(in) != kVersion) fail(ErrorCode::io_failure, "unsupported path file version");
  const auto dim = static_cast<int>(get<std::uint32_t>(in));
  const auto radius = static_cast<int>(get<std::uint32_t>(in));
  get<std::uint32_t>(in);
  const auto replicas = get<std::uint64_t>(in);
  const auto points = get<std::uint64_t>(in);
  const double horizon = get<double>(in);
  const double dt = get<double>(in);

  PathTable table;
  table.shape = LatticeShape(dim, radius);
  table.grid = TimeGrid::from_step(horizon, dt);
  table.record_every = get<std::uint64_t>(in);
  for (std::uint64_t p = 0; p < points; ++p) table.steps.push_back(get<std::uint64_t>(in));
  for (std::uint64_t r = 0; r < replicas; ++r) {
    PathField field(table.shape, points);
    if (!in.read(reinterpret_cast<char*>(field.values.data()),
                 static_cast<std::streamsize>(field.values.size() * sizeof(double)))) {
      fail(ErrorCode::io_failure, "truncated binary path file");
    }
    table.replicas.push_back(std::move(field));
  }
  return table;
}

PathTable read_paths_csv(std::istream& in, const LatticeShape& shape, const TimeGrid& grid) {
  std::string line;
  if (!std::getline(in, line) || line != "replica,site,time,value") {
    fail(ErrorCode::io_failure, "missing path CSV header");
  }
  // replica -> step -> site values
  std::map<std::size_t, std::map<std::size_t, std::vector<double>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string a, b, c, d;
    if (!std::getline(fields, a, ',') || !std::getline(fields, b, ',') ||
        !std::getline(fields, c, ',') || !std::getline(fields, d)) {
      fail(ErrorCode::io_failure, "malformed path CSV line " + std::to_string(line_no));
    }
    const std::size_t replica = std::stoul(a), site = std::stoul(b);
    const double time = std::stod(c);
    const auto step = static_cast<std::size_t>(std::llround(time / grid.dt()));
    if (site >= shape.site_count() || step > grid.steps()) {
      fail(ErrorCode::io_failure, "path CSV entry out of range on line " + std::to_string(line_no));
    }
    auto& row = rows[replica][step];
    row.resize(shape.site_count(), 0.0);
    row[site] = std::stod(d);
  }
  PathTable table;
  table.shape = shape;
  table.grid = grid;
  if (rows.empty()) return table;
  for (const auto& [step, _] : rows.begin()->second) table.steps.push_back(step);
  table.record_every = table.steps.size() > 1 ? table.steps[1] - table.steps[0] : 1;
  for (const auto& [replica, by_step] : rows) {
    PathField field(shape, table.steps.size());
    std::size_t p = 0;
    for (const auto& [step, values] : by_step) {
      std::copy(values.begin(), values.end(), field.row(p++).begin());
    }
    table.replicas.push_back(std::move(field));
  }
  return table;
}

}  // namespace lattice_ldp
