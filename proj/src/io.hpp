#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace episim {

// Locale-independent float formatting; %.17g round-trips doubles, so equal
// runs give byte-identical files.
std::string format_double(double v);

// Line-buffered CSV writer with a fixed header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string buffer_;
  std::size_t columns_;
};

std::string cell(double v);
std::string cell(std::uint64_t v);
std::string cell(std::int64_t v);
std::string cell(int v);
std::string cell(const std::string& v);

void ensure_directory(const std::filesystem::path& dir);

// Writes the run manifest: tool version, subcommand, the full effective
// configuration, master seed, and wall-clock (the only field allowed to
// differ between identical runs).
void write_manifest(const std::filesystem::path& dir,
                    const std::string& subcommand,
                    const nlohmann::json& config, std::uint64_t master_seed,
                    double wall_seconds);

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& value);

}  // namespace episim
