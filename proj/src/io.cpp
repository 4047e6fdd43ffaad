#include "flowldp/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "flowldp/error.hpp"

namespace flowldp {

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("csv: missing column '" + std::string(name) + "'");
}

std::vector<double> Table::values(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return cells;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("csv line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

Table read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  Table t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ConfigError(file.string() + ":" + std::to_string(n) + ": expected " +
                        std::to_string(t.header.size()) + " columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, n));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ConfigError(file.string() + ": empty csv");
  return t;
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
    : impl_(std::make_unique<Impl>()) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  impl_->out.open(file);
  if (!impl_->out) throw ConfigError("cannot write " + file.string());
  row(header);
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) impl_->out << ',';
    impl_->out << format_double(v);
    first = false;
  }
  impl_->out << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

Json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& file, const Json& j) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

template <class T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Kernel kernel_from_json(const Json& j) {
  const auto family = get<std::string>(j, "family");
  if (family == "gaussian") return make_gaussian_kernel(get<double>(j, "bandwidth"));
  if (family == "tabulated") {
    return make_tabulated_kernel(get<double>(j, "grid_step"), get<std::vector<double>>(j, "values"));
  }
  throw ConfigError("unknown kernel family '" + family + "'");
}

HittingSet hitting_set_from_json(const Json& j) {
  const auto kind = get<std::string>(j, "kind");
  if (kind == "halfspace") {
    return HittingSet::halfspace(vec(get<std::vector<double>>(j, "normal")), get<double>(j, "offset"));
  }
  if (kind == "box") {
    return HittingSet::box(vec(get<std::vector<double>>(j, "lo")), vec(get<std::vector<double>>(j, "hi")));
  }
  if (kind == "finite_union") {
    std::vector<Box> boxes;
    for (const auto& b : get<Json>(j, "boxes")) {
      boxes.push_back({vec(get<std::vector<double>>(b, "lo")), vec(get<std::vector<double>>(b, "hi"))});
    }
    return HittingSet::finite_union(std::move(boxes));
  }
  throw ConfigError("unknown hitting set kind '" + kind + "'");
}

VariationalProblem problem_from_json(const Json& j) {
  VariationalProblem p;
  const auto functional = get<std::string>(j, "functional");
  if (functional == "schilder_1d") {
    p.functional = Functional::schilder_1d;
  } else if (functional == "stopped") {
    p.functional = Functional::stopped;
  } else if (functional == "npoint_coalescing") {
    p.functional = Functional::npoint_coalescing;
  } else {
    throw ConfigError("unknown functional '" + functional + "'");
  }
  const Json c = get<Json>(j, "constraint");
  const auto type = get<std::string>(c, "type");
  if (type == "endpoint_at_least") {
    p.constraint = EndpointAtLeast{get<double>(c, "c"), c.value("particle", std::size_t{0})};
  } else if (type == "endpoint_in_box") {
    p.constraint = EndpointInBox{Box{vec(get<std::vector<double>>(c, "lo")), vec(get<std::vector<double>>(c, "hi"))}};
  } else if (type == "coalesce_by") {
    p.constraint = CoalesceBy{get<double>(c, "t_c")};
  } else if (type == "hit_set_by") {
    p.constraint = HitSetBy{hitting_set_from_json(get<Json>(c, "set")), get<double>(c, "t_c")};
  } else {
    throw ConfigError("unknown constraint type '" + type + "'");
  }
  p.steps = j.value("steps", p.steps);
  p.starts = get<std::vector<double>>(j, "starts");
  return p;
}

Tolerances tolerances_from_json(const Json& j) {
  Tolerances t;
  if (j.is_null()) return t;
  t.gradient = j.value("gradient", t.gradient);
  t.max_iterations = j.value("max_iterations", t.max_iterations);
  t.multistarts = j.value("multistarts", t.multistarts);
  t.seed = j.value("seed", t.seed);
  return t;
}

}  // namespace flowldp
