#include "io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nhocp::cli {

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Splits one logical record; quoted fields may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else if (c == '\n') {
      break;
    } else {
      field += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted CSV field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

void append_names(std::vector<std::string>& header, const char* prefix, int count) {
  for (int i = 1; i <= count; ++i) header.push_back(prefix + std::to_string(i));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << quote_if_needed(cells[i]);
    }
    out << "\r\n";
  };
  emit(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::logic_error("CSV row width differs from header");
    emit(row);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  if (!read_record(in, table.header)) throw std::runtime_error(path.string() + ": empty CSV");
  std::vector<std::string> row;
  while (read_record(in, row)) {
    if (row.size() != table.header.size()) throw std::runtime_error(path.string() + ": ragged CSV row");
    table.rows.push_back(row);
  }
  return table;
}

CsvTable trajectory_table(const Trajectory& traj) {
  CsvTable table;
  const bool extremal = traj.layout == StateLayout::Extremal;
  const int width = static_cast<int>(traj.states.empty() ? 0 : traj.states.front().size());
  table.header.push_back("t");
  if (traj.layout == StateLayout::Generic) {
    append_names(table.header, "x", width);
  } else {
    append_names(table.header, "q", traj.n);
    append_names(table.header, "y", traj.k);
    if (extremal) {
      append_names(table.header, "pb", traj.n);
      append_names(table.header, "pf", traj.k);
    }
  }
  const bool with_u = !traj.controls.empty();
  if (with_u) append_names(table.header, "u", static_cast<int>(traj.controls.front().size()));

  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(format_double(traj.times[i]));
    for (int j = 0; j < traj.states[i].size(); ++j) row.push_back(format_double(traj.states[i](j)));
    if (with_u) {
      for (int j = 0; j < traj.controls[i].size(); ++j) row.push_back(format_double(traj.controls[i](j)));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Trajectory trajectory_from_table(const CsvTable& table, int n, int k) {
  Trajectory traj;
  traj.n = n;
  traj.k = k;
  const bool extremal = table.column("pb1") >= 0;
  traj.layout = extremal ? StateLayout::Extremal : StateLayout::Adapted;
  const int width = extremal ? 2 * (n + k) : n + k;
  const int u0 = table.column("u1");
  if (table.column("t") != 0 || static_cast<int>(table.header.size()) < 1 + width) {
    throw std::runtime_error("trajectory CSV does not match the model dimensions");
  }
  for (const auto& row : table.rows) {
    traj.times.push_back(parse_double(row[0]));
    Vec x(width);
    for (int j = 0; j < width; ++j) x(j) = parse_double(row[1 + j]);
    traj.states.push_back(std::move(x));
    if (u0 >= 0) {
      Vec u(k);
      for (int j = 0; j < k; ++j) u(j) = parse_double(row[u0 + j]);
      traj.controls.push_back(std::move(u));
    }
  }
  return traj;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::ordered_json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::ordered_json::parse(in);
}

}  // namespace nhocp::cli
