#include "io.hpp"

#include <cstdio>
#include <fstream>

#include "errors.hpp"
#include "version.hpp"

namespace episim {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  row(header);
}

CsvWriter::~CsvWriter() {
  std::ofstream out(path_, std::ios::binary);
  out << buffer_;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  require(cells.size() == columns_, ErrorCode::Io, "CSV column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) buffer_ += ',';
    buffer_ += cells[i];
  }
  buffer_ += '\n';
}

std::string cell(double v) { return format_double(v); }
std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(std::int64_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(const std::string& v) { return v; }

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create output directory " + dir.string());
}

void write_manifest(const std::filesystem::path& dir,
                    const std::string& subcommand,
                    const nlohmann::json& config, std::uint64_t master_seed,
                    double wall_seconds) {
  nlohmann::json manifest;
  manifest["tool"] = "episim";
  manifest["version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config;
  manifest["master_seed"] = master_seed;
  manifest["wall_clock_seconds"] = wall_seconds;
  write_json_file(dir / "manifest.json", manifest);
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& value) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << value.dump(2) << '\n';
}

}  // namespace episim
