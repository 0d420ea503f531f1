#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "stochfield/lattice.hpp"
#include "stochfield/noise.hpp"

namespace stochfield::cli {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// RFC 4180 style writer: ',' separator, '\n' line ends, fields quoted only
/// when they contain a separator, quote or newline.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& add(double v);
  CsvWriter& add(std::int64_t v);
  CsvWriter& add(std::uint64_t v);
  CsvWriter& add(int v) { return add(static_cast<std::int64_t>(v)); }
  CsvWriter& add(std::string_view s);
  void end_row();
  void close();

 private:
  void sep();
  std::ofstream out_;
  std::string line_;
  bool first_ = true;
  std::filesystem::path path_;
};

/// Reads a headered CSV of numbers; each row must have at least `columns`
/// fields. Lines starting with '#' are skipped.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns);

void write_modes_csv(const std::filesystem::path& path, const ModeTable& table);

/// Recorded noise of one trajectory, replayable bit-exactly.
struct NoiseDump {
  LatticeSpec lattice;
  double dt = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory_id = 0;
  std::vector<std::uint32_t> dof_modes;  // mode id of each dof
  std::vector<NoiseSlice> slices;
};

/// Binary replay format (host byte order, little-endian on all supported targets):
///   "SQFNOISE" u32 version=1 u32 dim u32 sites u32 dofs
///   f64 length f64 mass f64 dt u64 master_seed u64 trajectory u64 slices
///   u32 mode_id[dofs]  then per slice and dof: f64 re, f64 im.
void write_noise_bin(const std::filesystem::path& path, const NoiseDump& dump);
NoiseDump read_noise_bin(const std::filesystem::path& path);

/// CSV form: a '#' metadata line, then slice_index,mode_id,re,im.
void write_noise_csv(const std::filesystem::path& path, const NoiseDump& dump);
NoiseDump read_noise_csv(const std::filesystem::path& path);

/// Dispatches on the extension (.bin or .csv).
NoiseDump read_noise(const std::filesystem::path& path);
void write_noise(const std::filesystem::path& path, const NoiseDump& dump);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace stochfield::cli
