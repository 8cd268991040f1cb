#include <fstream>
#include <sstream>
#include <string>

#include "evofs/data.hpp"
#include "evofs/error.hpp"

namespace evofs::data {

namespace {

bool is_header_repeat(const std::vector<std::string>& row,
                      const std::vector<std::string>& header) {
  if (row.size() != header.size()) return false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (normalize_column_name(row[i]) != header[i]) return false;
  }
  return true;
}

}  // namespace

RawTable parse_csv(std::string_view text, const std::string& source_name) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  RawTable table;
  table.sources.push_back(source_name);

  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool have_header = false;

  auto finish_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    // Blank lines carry no data.
    if (record.size() == 1 && record.front().empty()) {
      record.clear();
      return;
    }
    if (!have_header) {
      for (auto& name : record) table.columns.push_back(normalize_column_name(name));
      have_header = true;
    } else if (record.size() != table.columns.size()) {
      throw Error(ErrorKind::kParse,
                  source_name + ":" + std::to_string(record_line) + ": expected " +
                      std::to_string(table.columns.size()) + " fields, found " +
                      std::to_string(record.size()));
    } else if (is_header_repeat(record, table.columns)) {
      ++table.skipped_header_rows;
    } else {
      table.rows.push_back(std::move(record));
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw Error(ErrorKind::kParse, source_name + ":" + std::to_string(line) +
                                             ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        finish_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorKind::kParse,
                source_name + ":" + std::to_string(record_line) + ": unterminated quote");
  }
  if (field_started || !record.empty()) finish_record();
  if (!have_header) {
    throw Error(ErrorKind::kParse, source_name + ": missing header row");
  }
  return table;
}

RawTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.string());
}

RawTable ingest(std::span<const std::filesystem::path> paths, DatasetKind kind) {
  if (paths.empty()) throw Error(ErrorKind::kUsage, "ingest: no input files");
  RawTable out;
  for (const auto& path : paths) {
    RawTable part = read_csv(path);
    check_header(part.columns, kind);
    if (out.sources.empty()) {
      out.columns = part.columns;
    } else if (part.columns != out.columns) {
      throw Error(ErrorKind::kSchema,
                  path.string() + ": header differs from " + out.sources.front());
    }
    out.sources.push_back(path.string());
    out.skipped_header_rows += part.skipped_header_rows;
    out.rows.insert(out.rows.end(), std::make_move_iterator(part.rows.begin()),
                    std::make_move_iterator(part.rows.end()));
  }
  return out;
}

}  // namespace evofs::data
