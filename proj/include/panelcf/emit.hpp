#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "panelcf/errors.hpp"
#include "panelcf/panel.hpp"

namespace panelcf {

// Artifact writer used by the batch runner. Every table is delimited text
// with a `.meta` sidecar of `key=value` lines describing it (column names,
// row count, method, parameters). Nothing here writes a timestamp: the run
// manifest must be byte-identical across repeated runs, so wall-clock time
// goes into its own file.
class Emitter {
public:
  explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cli", "emit", "cannot create '" + dir_.string() + "': " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  // numeric cell in full round-trip precision
  static std::string cell(double v) { return detail::format_value(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }

  void write_table(const std::string& name, const std::vector<std::string>& columns,
                   const std::vector<std::vector<std::string>>& rows,
                   const std::map<std::string, std::string>& meta = {}) {
    std::ofstream out = open(name + ".csv");
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << columns[c];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
      out << "\n";
    }
    std::map<std::string, std::string> m = meta;
    m["table"] = name;
    m["rows"] = std::to_string(rows.size());
    std::string cols;
    for (std::size_t c = 0; c < columns.size(); ++c)
      cols += (c ? "," : "") + columns[c];
    m["columns"] = cols;
    write_meta(name, m);
    written_.push_back(name + ".csv");
  }

  // long-format panel table; re-parses under load_panel
  void write_panel(const std::string& name, const PanelDataset& p,
                   std::map<std::string, std::string> meta = {}) {
    std::ofstream out = open(name + ".csv");
    out << panel_to_csv(p);
    meta["table"] = name;
    meta["format"] = "long-panel";
    meta["units"] = std::to_string(p.n_units());
    meta["years"] = std::to_string(p.first_year()) + ".." + std::to_string(p.last_year());
    write_meta(name, meta);
    written_.push_back(name + ".csv");
  }

  void write_meta(const std::string& name, const std::map<std::string, std::string>& kv) {
    std::ofstream out = open(name + ".meta");
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  }

  // manifest: configuration hash, seed, versions — no timestamp (that lives
  // in timestamp.txt so manifests diff clean)
  void write_manifest(const std::map<std::string, std::string>& kv) {
    write_meta("manifest", kv);
    std::ofstream(dir_ / "manifest.txt") << [&] {
      std::string s;
      for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
      return s;
    }();
  }

  void write_timestamp(const std::string& iso) {
    std::ofstream(dir_ / "timestamp.txt") << iso << "\n";
  }

  const std::vector<std::string>& written() const { return written_; }

private:
  std::ofstream open(const std::string& filename) {
    std::ofstream out(dir_ / filename, std::ios::binary);
    if (!out)
      throw Error("cli", "emit", "cannot write '" + (dir_ / filename).string() + "'");
    return out;
  }

  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

// FNV-1a over the canonical configuration dump; stable across platforms.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

} // namespace panelcf
