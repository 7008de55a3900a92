#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "odrop/error.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {
namespace {

using Row = std::vector<std::string>;

// RFC-4180 record splitter: quoted fields may contain separators, doubled
// quotes and line breaks.
std::vector<Row> split_records(std::string_view text) {
  std::vector<Row> records;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;
  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
    current.clear();
  };
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_record();
    } else if (ch == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field at end of input");
  if (!field.empty() || !current.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

int parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "TRUE" || s == "True" || s == "yes" || s == "1") return 1;
  if (s == "false" || s == "FALSE" || s == "False" || s == "no" || s == "0") return 0;
  return -1;
}

bool is_bool_token(std::string_view s) {
  s = trim(s);
  return s == "true" || s == "TRUE" || s == "True" || s == "false" || s == "FALSE" || s == "False" ||
         s == "yes" || s == "no";
}

struct ColumnMeta {
  ColumnKind kind;
  std::vector<std::string> categories;
};

Table build_table(const std::vector<Row>& records, const std::map<std::string, ColumnMeta>& meta,
                  const KindOverrides& overrides) {
  if (records.empty()) throw ParseError("CSV input has no header row");
  const Row& header = records.front();
  const std::size_t width = header.size();
  const std::size_t n = records.size() - 1;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw ParseError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                       " cells, expected " + std::to_string(width));
    }
  }
  std::vector<Column> columns(width);
  Matrix values(n, width);
  std::vector<std::uint8_t> missing(n * width, 0);
  for (std::size_t c = 0; c < width; ++c) {
    Column& col = columns[c];
    col.name = std::string(trim(header[c]));
    if (col.name.empty()) throw ParseError("header cell " + std::to_string(c + 1) + " is empty");
    std::optional<ColumnKind> kind;
    if (auto it = meta.find(col.name); it != meta.end()) {
      kind = it->second.kind;
      col.categories = it->second.categories;
    }
    if (auto it = overrides.find(col.name); it != overrides.end()) {
      if (kind != it->second) col.categories.clear();
      kind = it->second;
    }
    if (!kind) {
      bool all_numeric = true;
      bool all_bool = true;
      for (std::size_t r = 1; r < records.size(); ++r) {
        const auto cell = trim(records[r][c]);
        if (cell.empty()) continue;
        double v;
        if (!parse_number(cell, v)) all_numeric = false;
        if (!is_bool_token(cell)) all_bool = false;
      }
      kind = all_numeric ? ColumnKind::continuous
                         : (all_bool ? ColumnKind::boolean : ColumnKind::categorical);
    }
    col.kind = *kind;
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto cell = trim(records[r][c]);
      const std::size_t row = r - 1;
      if (cell.empty()) {
        missing[row * width + c] = 1;
        values(row, c) = kMissing;
        continue;
      }
      switch (col.kind) {
        case ColumnKind::continuous: {
          double v;
          if (!parse_number(cell, v)) {
            throw ParseError("row " + std::to_string(r) + ", column '" + col.name +
                             "': cannot parse '" + std::string(cell) + "' as a number");
          }
          values(row, c) = v;
          break;
        }
        case ColumnKind::boolean: {
          const int b = parse_bool(cell);
          if (b < 0) {
            throw ParseError("row " + std::to_string(r) + ", column '" + col.name +
                             "': cannot parse '" + std::string(cell) + "' as a boolean");
          }
          values(row, c) = b;
          break;
        }
        case ColumnKind::categorical: {
          auto it = std::find(col.categories.begin(), col.categories.end(), cell);
          if (it == col.categories.end()) {
            col.categories.emplace_back(cell);
            it = col.categories.end() - 1;
          }
          values(row, c) = static_cast<double>(it - col.categories.begin());
          break;
        }
      }
    }
  }
  return Table(std::move(columns), std::move(values), std::move(missing));
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

std::map<std::string, ColumnMeta> read_sidecar(const std::filesystem::path& path) {
  std::map<std::string, ColumnMeta> meta;
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) return meta;
  std::ifstream in(side);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    for (const auto& col : doc.at("columns")) {
      ColumnMeta m{column_kind_from_string(col.at("kind").get<std::string>()), {}};
      if (col.contains("categories")) m.categories = col.at("categories").get<std::vector<std::string>>();
      meta.emplace(col.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(side.string() + ": " + e.what());
  }
  return meta;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Table parse_csv(std::string_view text, const KindOverrides& kind_overrides) {
  return build_table(split_records(text), {}, kind_overrides);
}

Table load_csv(const std::filesystem::path& path, const KindOverrides& kind_overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return build_table(split_records(buf.str()), read_sidecar(path), kind_overrides);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (c) out.push_back(',');
    out += quote_if_needed(table.column(c).name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (c) out.push_back(',');
      out += quote_if_needed(table.cell_text(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

std::string metadata_json(const Table& table) {
  nlohmann::json doc;
  doc["format"] = "odrop.table";
  doc["version"] = 1;
  auto& cols = doc["columns"] = nlohmann::json::array();
  for (const auto& c : table.columns()) {
    nlohmann::json col{{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (c.kind == ColumnKind::categorical) col["categories"] = c.categories;
    cols.push_back(std::move(col));
  }
  return doc.dump(2) + "\n";
}

std::filesystem::path save_csv(const Table& table, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << to_csv(table);
  }
  const auto side = sidecar_path(path);
  std::ofstream out(side, std::ios::binary);
  if (!out) throw IoError("cannot write '" + side.string() + "'");
  out << metadata_json(table);
  return side;
}

}  // namespace odrop::tabular
