#include "stochfield_cli/io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <openssl/evp.h>

#include "stochfield/error.hpp"

namespace stochfield::cli {

namespace {

constexpr char kMagic[8] = {'S', 'Q', 'F', 'N', 'O', 'I', 'S', 'E'};
constexpr std::uint32_t kVersion = 1;

[[noreturn]] void io_fail(const std::filesystem::path& p, const std::string& what) {
  throw std::runtime_error(p.string() + ": " + what);
}

template <class T>
void put(std::ostream& o, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  o.write(b, sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& p) {
  char b[sizeof(T)];
  if (!in.read(b, sizeof(T))) io_fail(p, "truncated noise file");
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& p, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e) io_fail(p, "line " + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) io_fail(path, "cannot open for writing");
  for (const auto& h : header) add(std::string_view(h));
  end_row();
}

void CsvWriter::sep() {
  if (!first_) line_.push_back(',');
  first_ = false;
}

CsvWriter& CsvWriter::add(double v) {
  sep();
  line_ += format_double(v);
  return *this;
}

CsvWriter& CsvWriter::add(std::int64_t v) {
  sep();
  line_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::add(std::uint64_t v) {
  sep();
  line_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::add(std::string_view s) {
  sep();
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    line_ += s;
  } else {
    line_.push_back('"');
    for (char ch : s) {
      if (ch == '"') line_.push_back('"');
      line_.push_back(ch);
    }
    line_.push_back('"');
  }
  return *this;
}

void CsvWriter::end_row() {
  line_.push_back('\n');
  out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  line_.clear();
  first_ = true;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) io_fail(path_, "write failed");
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t n = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() < columns) io_fail(path, "line " + std::to_string(n) + ": expected " + std::to_string(columns) + " columns");
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f, path, n));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_modes_csv(const std::filesystem::path& path, const ModeTable& table) {
  const int dim = table.spec().dim;
  std::vector<std::string> header{"mode_id"};
  for (int d = 0; d < dim; ++d) header.push_back("n_" + std::to_string(d));
  for (int d = 0; d < dim; ++d) header.push_back("p_" + std::to_string(d));
  for (const char* h : {"E_p", "class", "partner_id"}) header.emplace_back(h);
  CsvWriter w(path, header);
  for (const Mode& m : table.modes()) {
    w.add(static_cast<std::uint64_t>(m.id));
    for (int d = 0; d < dim; ++d) w.add(m.index[d]);
    for (int d = 0; d < dim; ++d) w.add(m.momentum[d]);
    w.add(m.energy).add(std::string_view(to_string(m.cls))).add(static_cast<std::uint64_t>(m.partner));
    w.end_row();
  }
  w.close();
}

void write_noise_bin(const std::filesystem::path& path, const NoiseDump& d) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.lattice.dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.lattice.sites_per_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.dof_modes.size()));
  put<double>(out, d.lattice.box_length);
  put<double>(out, d.lattice.mass);
  put<double>(out, d.dt);
  put<std::uint64_t>(out, d.master_seed);
  put<std::uint64_t>(out, d.trajectory_id);
  put<std::uint64_t>(out, d.slices.size());
  for (std::uint32_t m : d.dof_modes) put<std::uint32_t>(out, m);
  for (const auto& s : d.slices) {
    if (s.increments.size() != d.dof_modes.size()) io_fail(path, "slice width differs from dof count");
    for (const Complex& w : s.increments) {
      put<double>(out, w.real());
      put<double>(out, w.imag());
    }
  }
  out.close();
  if (!out) io_fail(path, "write failed");
}

NoiseDump read_noise_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) io_fail(path, "not a noise replay file");
  if (get<std::uint32_t>(in, path) != kVersion) io_fail(path, "unsupported noise file version");
  NoiseDump d;
  d.lattice.dim = static_cast<int>(get<std::uint32_t>(in, path));
  d.lattice.sites_per_dim = static_cast<int>(get<std::uint32_t>(in, path));
  const std::uint32_t dofs = get<std::uint32_t>(in, path);
  d.lattice.box_length = get<double>(in, path);
  d.lattice.mass = get<double>(in, path);
  d.dt = get<double>(in, path);
  d.master_seed = get<std::uint64_t>(in, path);
  d.trajectory_id = get<std::uint64_t>(in, path);
  const std::uint64_t slices = get<std::uint64_t>(in, path);
  d.dof_modes.resize(dofs);
  for (auto& m : d.dof_modes) m = get<std::uint32_t>(in, path);
  d.slices.resize(slices);
  for (auto& s : d.slices) {
    s.dt = d.dt;
    s.increments.resize(dofs);
    for (auto& w : s.increments) {
      const double re = get<double>(in, path);
      const double im = get<double>(in, path);
      w = {re, im};
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) io_fail(path, "trailing bytes after noise data");
  return d;
}

void write_noise_csv(const std::filesystem::path& path, const NoiseDump& d) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  out << "# stochfield-noise v1 dim=" << d.lattice.dim << " sites=" << d.lattice.sites_per_dim
      << " length=" << format_double(d.lattice.box_length) << " mass=" << format_double(d.lattice.mass)
      << " dt=" << format_double(d.dt) << " master_seed=" << d.master_seed << " trajectory=" << d.trajectory_id
      << " slices=" << d.slices.size() << " dofs=" << d.dof_modes.size() << '\n';
  out << "slice_index,mode_id,re,im\n";
  std::string line;
  for (std::size_t s = 0; s < d.slices.size(); ++s) {
    for (std::size_t k = 0; k < d.dof_modes.size(); ++k) {
      line = std::to_string(s) + ',' + std::to_string(d.dof_modes[k]) + ',' +
             format_double(d.slices[s].increments.at(k).real()) + ',' +
             format_double(d.slices[s].increments.at(k).imag()) + '\n';
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
  }
  out.close();
  if (!out) io_fail(path, "write failed");
}

NoiseDump read_noise_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# stochfield-noise v1", 0) != 0) io_fail(path, "missing noise metadata line");
  NoiseDump d;
  std::uint64_t slices = 0, dofs = 0;
  {
    std::istringstream meta(line.substr(21));
    std::string kv;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) io_fail(path, "bad metadata entry '" + kv + "'");
      const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "dim") d.lattice.dim = std::stoi(v);
      else if (k == "sites") d.lattice.sites_per_dim = std::stoi(v);
      else if (k == "length") d.lattice.box_length = parse_double(v, path, 1);
      else if (k == "mass") d.lattice.mass = parse_double(v, path, 1);
      else if (k == "dt") d.dt = parse_double(v, path, 1);
      else if (k == "master_seed") d.master_seed = std::stoull(v);
      else if (k == "trajectory") d.trajectory_id = std::stoull(v);
      else if (k == "slices") slices = std::stoull(v);
      else if (k == "dofs") dofs = std::stoull(v);
      else io_fail(path, "unknown metadata key '" + k + "'");
    }
  }
  if (!std::getline(in, line) || line.rfind("slice_index,mode_id,re,im", 0) != 0) io_fail(path, "missing CSV header");
  d.slices.assign(slices, NoiseSlice{d.dt, std::vector<Complex>(dofs)});
  d.dof_modes.assign(dofs, 0);
  std::size_t n = 2;
  std::uint64_t count = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 4) io_fail(path, "line " + std::to_string(n) + ": expected 4 columns");
    const std::uint64_t s = std::stoull(f[0]);
    const std::uint64_t k = count % std::max<std::uint64_t>(dofs, 1);
    if (s >= slices || s != count / std::max<std::uint64_t>(dofs, 1)) io_fail(path, "line " + std::to_string(n) + ": rows out of order");
    const auto mode = static_cast<std::uint32_t>(std::stoul(f[1]));
    if (s == 0) d.dof_modes[k] = mode;
    else if (d.dof_modes[k] != mode) io_fail(path, "line " + std::to_string(n) + ": mode id differs from slice 0");
    d.slices[s].increments[k] = {parse_double(f[2], path, n), parse_double(f[3], path, n)};
    ++count;
  }
  if (count != slices * dofs) io_fail(path, "expected " + std::to_string(slices * dofs) + " rows, found " + std::to_string(count));
  return d;
}

NoiseDump read_noise(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".bin") return read_noise_bin(path);
  if (ext == ".csv") return read_noise_csv(path);
  throw ConfigError("noise file must end in .bin or .csv: " + path.string());
}

void write_noise(const std::filesystem::path& path, const NoiseDump& dump) {
  const auto ext = path.extension().string();
  if (ext == ".bin") return write_noise_bin(path, dump);
  if (ext == ".csv") return write_noise_csv(path, dump);
  throw ConfigError("noise file must end in .bin or .csv: " + path.string());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest init failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(tmp, "cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) io_fail(tmp, "write failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace stochfield::cli
