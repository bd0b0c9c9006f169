#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emot/errors.hpp"
#include "emot/heston.hpp"
#include "emot/measure.hpp"
#include "emot/sinkhorn.hpp"

namespace emot {

// ---------------------------------------------------------------------------
// Number formatting: shortest round-trip decimal, locale-independent.

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("cannot parse number from '" + std::string(s) + "'");
  return v;
}

// ---------------------------------------------------------------------------
// Whole-file helpers. Writers emit '\n' newlines and no BOM.

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return content;
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit content hashes, recorded in manifests.

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x00000100000001B3ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (std::size_t i = 16; i-- > 0; h >>= 4) out[i] = digits[h & 0xF];
  return out;
}

inline std::string hash_file(const std::filesystem::path& path) {
  return fnv1a64_hex(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Raw little-endian float64 arrays (tensor payloads, sample triples).

namespace detail {

inline std::uint64_t to_little_endian_bits(double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t swapped = 0;
    for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xFF) << (8 * (7 - i));
    bits = swapped;
  }
  return bits;
}

inline double from_little_endian_bits(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t swapped = 0;
    for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xFF) << (8 * (7 - i));
    bits = swapped;
  }
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::string doubles_to_bytes_le(const std::vector<double>& values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = detail::to_little_endian_bits(values[i]);
    std::memcpy(bytes.data() + i * 8, &bits, 8);
  }
  return bytes;
}

inline std::vector<double> bytes_le_to_doubles(std::string_view bytes) {
  if (bytes.size() % 8 != 0)
    throw IoError("binary float64 payload has size not divisible by 8");
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes.data() + i * 8, 8);
    values[i] = detail::from_little_endian_bits(bits);
  }
  return values;
}

// ---------------------------------------------------------------------------
// Tensor files: raw little-endian float64 in row-major (i,j,k) order plus a
// JSON sidecar {"shape":[N,M,L],"order":"ijk", ...extra metadata}.

struct TensorFile {
  std::array<std::size_t, 3> shape{0, 0, 0};
  std::vector<double> values;
  nlohmann::json sidecar;
};

inline void write_tensor(const std::filesystem::path& bin_path,
                         const std::filesystem::path& json_path,
                         const std::array<std::size_t, 3>& shape,
                         const std::vector<double>& values,
                         const nlohmann::json& extra = nlohmann::json::object()) {
  if (shape[0] * shape[1] * shape[2] != values.size())
    throw IoError("tensor shape does not match value count");
  nlohmann::json sidecar = extra;
  sidecar["shape"] = {shape[0], shape[1], shape[2]};
  sidecar["order"] = "ijk";
  write_text_file(bin_path, doubles_to_bytes_le(values));
  write_text_file(json_path, sidecar.dump(2) + "\n");
}

inline TensorFile read_tensor(const std::filesystem::path& bin_path,
                              const std::filesystem::path& json_path) {
  TensorFile t;
  try {
    t.sidecar = nlohmann::json::parse(read_text_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad tensor sidecar " + json_path.string() + ": " + e.what());
  }
  if (!t.sidecar.contains("shape") || !t.sidecar.contains("order"))
    throw IoError("tensor sidecar missing shape/order: " + json_path.string());
  if (t.sidecar["order"] != "ijk")
    throw IoError("unsupported tensor order in " + json_path.string());
  const auto& s = t.sidecar["shape"];
  if (!s.is_array() || s.size() != 3)
    throw IoError("tensor sidecar shape must have 3 entries: " + json_path.string());
  for (std::size_t a = 0; a < 3; ++a) t.shape[a] = s[a].get<std::size_t>();
  t.values = bytes_le_to_doubles(read_text_file(bin_path));
  if (t.values.size() != t.shape[0] * t.shape[1] * t.shape[2])
    throw IoError("tensor payload size disagrees with sidecar shape: " + bin_path.string());
  return t;
}

// ---------------------------------------------------------------------------
// CSV files. All tables have a fixed header line; numbers round-trip exactly.

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

}  // namespace detail

/// Parses a CSV with the exact expected header into per-column doubles.
inline std::vector<std::vector<double>> read_csv_columns(const std::filesystem::path& path,
                                                         std::string_view expected_header) {
  const std::string content = read_text_file(path);
  std::vector<std::vector<double>> columns;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string_view line = detail::strip_eol(
        std::string_view(content).substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != expected_header)
        throw IoError(path.string() + ": expected header '" + std::string(expected_header) +
                      "', found '" + std::string(line) + "'");
      columns.resize(detail::split(line, ',').size());
      saw_header = true;
      continue;
    }
    const auto cells = detail::split(line, ',');
    if (cells.size() != columns.size())
      throw IoError(path.string() + ": row with " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(columns.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) columns[c].push_back(parse_double(cells[c]));
  }
  if (!saw_header) throw IoError(path.string() + ": empty file");
  return columns;
}

inline std::string measure_to_csv(const DiscreteMeasure& m) {
  std::string out = "point,weight\n";
  for (std::size_t i = 0; i < m.size(); ++i)
    out += format_double(m.points[i]) + "," + format_double(m.weights[i]) + "\n";
  return out;
}

inline void write_measure_csv(const std::filesystem::path& path, const DiscreteMeasure& m) {
  write_text_file(path, measure_to_csv(m));
}

inline DiscreteMeasure read_measure_csv(const std::filesystem::path& path) {
  auto cols = read_csv_columns(path, "point,weight");
  if (cols[0].empty()) throw IoError(path.string() + ": measure file has no rows");
  try {
    return DiscreteMeasure{std::move(cols[0]), std::move(cols[1])};
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline std::string trace_to_csv(const SolveTrace& trace) {
  std::string out = "iter,G,mx_err,my_err,mart_rel,max_f,max_g,max_h,ms\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.iter) + ",";
    out += format_double(r.g_value) + ",";
    out += format_double(r.x_err) + ",";
    out += format_double(r.y_err) + ",";
    out += format_double(r.mart_rel) + ",";
    out += format_double(r.max_f) + ",";
    out += format_double(r.max_g) + ",";
    out += format_double(r.max_h) + ",";
    out += format_double(r.wall_ms) + "\n";
  }
  return out;
}

inline void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace) {
  write_text_file(path, trace_to_csv(trace));
}

inline SolveTrace read_trace_csv(const std::filesystem::path& path) {
  auto cols = read_csv_columns(path, "iter,G,mx_err,my_err,mart_rel,max_f,max_g,max_h,ms");
  SolveTrace trace;
  trace.records.resize(cols[0].size());
  for (std::size_t r = 0; r < cols[0].size(); ++r) {
    auto& rec = trace.records[r];
    rec.iter = static_cast<std::size_t>(cols[0][r]);
    rec.g_value = cols[1][r];
    rec.x_err = cols[2][r];
    rec.y_err = cols[3][r];
    rec.mart_rel = cols[4][r];
    rec.max_f = cols[5][r];
    rec.max_g = cols[6][r];
    rec.max_h = cols[7][r];
    rec.wall_ms = cols[8][r];
  }
  return trace;
}

inline std::string x_potentials_to_csv(const DiscreteMeasure& mu, const std::vector<double>& f,
                                       const std::vector<double>& h) {
  std::string out = "i,x,f,h\n";
  for (std::size_t i = 0; i < mu.size(); ++i)
    out += std::to_string(i) + "," + format_double(mu.points[i]) + "," +
           format_double(f[i]) + "," + format_double(h[i]) + "\n";
  return out;
}

inline std::string y_potentials_to_csv(const DiscreteMeasure& nu, const std::vector<double>& g) {
  std::string out = "j,y,g\n";
  for (std::size_t j = 0; j < nu.size(); ++j)
    out += std::to_string(j) + "," + format_double(nu.points[j]) + "," +
           format_double(g[j]) + "\n";
  return out;
}

inline void write_price_csv(const std::filesystem::path& path,
                            const std::vector<double>& strikes,
                            const std::vector<double>& prices) {
  if (strikes.size() != prices.size()) throw IoError("price table: size mismatch");
  std::string out = "strike,price\n";
  for (std::size_t i = 0; i < strikes.size(); ++i)
    out += format_double(strikes[i]) + "," + format_double(prices[i]) + "\n";
  write_text_file(path, out);
}

inline std::pair<std::vector<double>, std::vector<double>> read_price_csv(
    const std::filesystem::path& path) {
  auto cols = read_csv_columns(path, "strike,price");
  return {std::move(cols[0]), std::move(cols[1])};
}

// ---------------------------------------------------------------------------
// Optional sample export: per path, (s1, s2, v1) as three little-endian
// float64 values.

inline void write_sample_triples(const std::filesystem::path& path, const PathSample& sample) {
  std::vector<double> flat(sample.size() * 3);
  for (std::size_t p = 0; p < sample.size(); ++p) {
    flat[3 * p] = sample.s1[p];
    flat[3 * p + 1] = sample.s2[p];
    flat[3 * p + 2] = sample.v1[p];
  }
  write_text_file(path, doubles_to_bytes_le(flat));
}

}  // namespace emot
