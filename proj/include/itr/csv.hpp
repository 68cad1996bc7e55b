#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace itr::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

// Comma separated, header row required, double-quoted fields allowed.
Table read(const std::filesystem::path& path);
Table parse(std::istream& in);

// Strict numeric parse of a cell; nullopt for empty, NA or garbage.
std::optional<double> to_number(std::string_view cell);

// 17 significant digits, enough to round-trip any double.
std::string format(double value);

std::ofstream open_for_write(const std::filesystem::path& path);

}  // namespace itr::csv
