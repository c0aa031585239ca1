#include "fairreg/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fairreg/data_model.hpp"

namespace fairreg {

long CsvTable::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<long>(it - header.begin());
}

namespace {

// Splits one record starting at pos; advances pos past the line terminator.
std::vector<std::string> next_record(std::string_view text, std::size_t& pos, std::size_t line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      field.push_back(c);
      ++pos;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
      ++pos;
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
      ++pos;
      continue;
    }
    if (c == '\r' || c == '\n') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      fields.push_back(std::move(field));
      return fields;
    }
    field.push_back(c);
    field_started = true;
    ++pos;
  }
  if (quoted) fail(ErrorKind::parse, "unterminated quoted field on line " + std::to_string(line));
  fields.push_back(std::move(field));
  return fields;
}

bool blank(const std::vector<std::string>& rec) { return rec.size() == 1 && rec[0].empty(); }

}  // namespace

CsvTable parse_csv_table(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line = 1;
  while (pos < text.size()) {
    auto rec = next_record(text, pos, line);
    if (!blank(rec)) {
      table.header = std::move(rec);
      break;
    }
    ++line;
  }
  if (table.header.empty()) fail(ErrorKind::empty_dataset, "CSV has no header row");
  std::set<std::string> names;
  for (const auto& h : table.header) {
    if (!names.insert(h).second) fail(ErrorKind::schema, "duplicate CSV column '" + h + "'");
  }
  while (pos < text.size()) {
    ++line;
    auto rec = next_record(text, pos, line);
    if (blank(rec)) continue;
    if (rec.size() != table.header.size()) {
      fail(ErrorKind::schema, "CSV line " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                                  " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(rec));
  }
  if (table.rows.empty()) fail(ErrorKind::empty_dataset, "CSV has no data rows");
  return table;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

bool parse_number(std::string_view cell, double& out) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

Dataset parse_csv(std::string_view text, const CsvLoadOptions& options) {
  const CsvTable table = parse_csv_table(text);
  auto col = [&](const std::string& name) {
    const long c = table.column(name);
    if (c < 0) fail(ErrorKind::schema, "missing column '" + name + "'");
    return static_cast<std::size_t>(c);
  };
  const std::size_t outcome = col(options.outcome_col);
  std::vector<std::size_t> group_idx;
  for (const auto& g : options.group_cols) group_idx.push_back(col(g));
  std::optional<std::size_t> id_idx;
  if (options.id_col) id_idx = col(*options.id_col);

  std::vector<std::string> feature_cols = options.feature_cols;
  if (feature_cols.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& h = table.header[c];
      const bool is_group = std::find(group_idx.begin(), group_idx.end(), c) != group_idx.end();
      if (c == outcome || is_group || (id_idx && c == *id_idx)) continue;
      feature_cols.push_back(h);
    }
  }
  std::vector<std::size_t> feature_idx;
  for (const auto& f : feature_cols) {
    if (options.add_intercept && f == kInterceptName) {
      fail(ErrorKind::schema, "column 'intercept' collides with the added intercept");
    }
    feature_idx.push_back(col(f));
  }

  const auto n = static_cast<Index>(table.rows.size());
  auto cell_value = [&](std::size_t r, std::size_t c) {
    double v = 0.0;
    if (!parse_number(table.rows[r][c], v) || !std::isfinite(v)) {
      fail(ErrorKind::parse, "row " + std::to_string(r + 1) + ", column '" + table.header[c] +
                                 "': not a finite number ('" + table.rows[r][c] + "')");
    }
    return v;
  };

  Vector y(n);
  Matrix raw(n, static_cast<Index>(feature_idx.size()));
  std::vector<Group> groups;
  for (std::size_t k = 0; k < group_idx.size(); ++k) groups.push_back({options.group_cols[k], Mask(table.rows.size())});
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto i = static_cast<Index>(r);
    y[i] = cell_value(r, outcome);
    for (std::size_t j = 0; j < feature_idx.size(); ++j) raw(i, static_cast<Index>(j)) = cell_value(r, feature_idx[j]);
    for (std::size_t k = 0; k < group_idx.size(); ++k) {
      const double v = cell_value(r, group_idx[k]);
      if (v != 0.0 && v != 1.0) {
        fail(ErrorKind::parse, "row " + std::to_string(r + 1) + ", group column '" + options.group_cols[k] +
                                   "' must be 0 or 1 (got '" + table.rows[r][group_idx[k]] + "')");
      }
      groups[k].mask[r] = v == 1.0 ? 1 : 0;
    }
    if (id_idx) ids.push_back(table.rows[r][*id_idx]);
  }

  std::vector<Index> keep;
  for (Index j = 0; j < raw.cols(); ++j) {
    if (options.min_binary_count > 0) {
      const auto col_j = raw.col(j);
      const bool binary = (col_j.array() == 0.0 || col_j.array() == 1.0).all();
      if (binary && col_j.sum() < static_cast<double>(options.min_binary_count)) continue;
    }
    keep.push_back(j);
  }

  const Index offset = options.add_intercept ? 1 : 0;
  Matrix x(n, static_cast<Index>(keep.size()) + offset);
  std::vector<std::string> names;
  if (options.add_intercept) {
    x.col(0).setOnes();
    names.emplace_back(kInterceptName);
  }
  for (std::size_t j = 0; j < keep.size(); ++j) {
    x.col(static_cast<Index>(j) + offset) = raw.col(keep[j]);
    names.push_back(feature_cols[static_cast<std::size_t>(keep[j])]);
  }
  return Dataset(std::move(y), std::move(x), std::move(names), std::move(groups), std::move(ids));
}

Dataset load_csv(const std::filesystem::path& path, const CsvLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str(), options);
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

std::string to_csv(const Dataset& ds, std::string_view outcome_col, bool with_ids) {
  std::string out;
  const Index first = ds.has_intercept() ? 1 : 0;
  std::vector<std::string> header;
  if (with_ids) header.emplace_back("id");
  header.emplace_back(outcome_col);
  for (Index j = first; j < ds.p(); ++j) header.push_back(ds.feature_names()[static_cast<std::size_t>(j)]);
  for (const auto& g : ds.groups()) header.push_back(g.name);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out.push_back(',');
    out += csv_field(header[c]);
  }
  out.push_back('\n');
  for (Index i = 0; i < ds.n(); ++i) {
    if (with_ids) {
      out += csv_field(ds.ids()[static_cast<std::size_t>(i)]);
      out.push_back(',');
    }
    out += format_double(ds.y()[i]);
    for (Index j = first; j < ds.p(); ++j) {
      out.push_back(',');
      out += format_double(ds.x()(i, j));
    }
    for (const auto& g : ds.groups()) {
      out.push_back(',');
      out.push_back(g.mask[static_cast<std::size_t>(i)] ? '1' : '0');
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, std::string_view outcome_col,
               bool with_ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << to_csv(ds, outcome_col, with_ids);
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace fairreg
