#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowldp/kernels.hpp"
#include "flowldp/pathmaps.hpp"
#include "flowldp/varmin.hpp"

namespace flowldp {

using Json = nlohmann::json;

/// Numeric table with named columns.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;  // throws ConfigError if absent
  std::vector<double> values(std::string_view name) const;
};

Table read_csv(const std::filesystem::path& file);

// Shortest round-trip formatting, so equal doubles always print identically.
std::string format_double(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::initializer_list<double> values);
  void row(const std::vector<std::string>& cells);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Json read_json(const std::filesystem::path& file);
void write_json(const std::filesystem::path& file, const Json& j);

std::uint64_t fnv1a64(std::string_view bytes);

// {"family":"gaussian","bandwidth":b} or {"family":"tabulated","grid_step":h,"values":[...]}
Kernel kernel_from_json(const Json& j);
// {"kind":"halfspace","normal":[...],"offset":c} | {"kind":"box","lo":[...],"hi":[...]}
// | {"kind":"finite_union","boxes":[{"lo":..,"hi":..}, ...]}
HittingSet hitting_set_from_json(const Json& j);
// {"functional":..., "constraint":{"type":..., ...}, "steps":T, "starts":[...]}
VariationalProblem problem_from_json(const Json& j);
Tolerances tolerances_from_json(const Json& j);

}  // namespace flowldp
