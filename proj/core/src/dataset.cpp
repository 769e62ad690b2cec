#include "mbc/dataset.hpp"

#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

#include "mbc/errors.hpp"

namespace mbc {

std::vector<std::vector<std::int32_t>> FieldColumn::id_lists(
    std::size_t n) const {
  std::vector<std::vector<std::int32_t>> out(n);
  switch (kind) {
    case FieldKind::kCategorical:
      for (std::size_t i = 0; i < n; ++i) out[i] = {ids[i]};
      break;
    case FieldKind::kMultiValued:
      for (std::size_t i = 0; i < n; ++i)
        out[i].assign(ids.begin() + offsets[i], ids.begin() + offsets[i + 1]);
      break;
    case FieldKind::kNumerical:
      throw ConfigError("id_lists: numerical field has no ids");
  }
  return out;
}

Batch take_rows(const Dataset& data, const std::vector<std::size_t>& idx) {
  Batch b;
  b.size = idx.size();
  b.fields.resize(data.fields.size());
  for (std::size_t f = 0; f < data.fields.size(); ++f) {
    const FieldColumn& src = data.fields[f];
    FieldColumn& dst = b.fields[f];
    dst.kind = src.kind;
    switch (src.kind) {
      case FieldKind::kCategorical:
        dst.ids.reserve(idx.size());
        for (std::size_t i : idx) dst.ids.push_back(src.ids[i]);
        break;
      case FieldKind::kMultiValued:
        dst.offsets.push_back(0);
        for (std::size_t i : idx) {
          for (std::int32_t k = src.offsets[i]; k < src.offsets[i + 1]; ++k)
            dst.ids.push_back(src.ids[k]);
          dst.offsets.push_back(static_cast<std::int32_t>(dst.ids.size()));
        }
        break;
      case FieldKind::kNumerical:
        dst.values.reserve(idx.size());
        for (std::size_t i : idx) dst.values.push_back(src.values[i]);
        break;
    }
  }
  b.labels.reserve(idx.size());
  for (std::size_t i : idx) b.labels.push_back(data.labels[i]);
  if (data.has_categories()) {
    b.categories.reserve(idx.size());
    for (std::size_t i : idx) b.categories.push_back(data.categories[i]);
  }
  return b;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parse_i32(const std::string& s, std::int32_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

CsvReader::CsvReader(const std::filesystem::path& path,
                     const FeatureSchema& schema)
    : schema_(schema), path_(path.string()) {
  in_ = std::make_unique<std::ifstream>(path);
  if (!*in_) throw DataError("cannot open dataset file: " + path_);
  std::string header;
  if (!std::getline(*in_, header)) {
    throw DataError("empty dataset file: " + path_);
  }
  ++line_no_;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const std::vector<std::string> cols = split(header, ',');
  column_of_field_.assign(schema.num_fields(), -1);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c] == "label") {
      label_col_ = static_cast<int>(c);
    } else if (cols[c] == "category") {
      category_col_ = static_cast<int>(c);
    } else {
      int fi = schema.field_index(cols[c]);
      if (fi >= 0) column_of_field_[fi] = static_cast<int>(c);
    }
  }
  if (label_col_ < 0) throw DataError(path_ + ": missing 'label' column");
  for (std::size_t f = 0; f < schema.num_fields(); ++f) {
    if (column_of_field_[f] < 0) {
      throw DataError(path_ + ": missing column '" + schema.fields[f].name +
                      "'");
    }
  }
}

CsvReader::~CsvReader() = default;

std::optional<Batch> CsvReader::next_batch(std::size_t max_rows) {
  if (done_) return std::nullopt;
  Batch b;
  b.fields.resize(schema_.num_fields());
  for (std::size_t f = 0; f < schema_.num_fields(); ++f) {
    b.fields[f].kind = schema_.fields[f].kind;
    if (b.fields[f].kind == FieldKind::kMultiValued)
      b.fields[f].offsets.push_back(0);
  }
  std::string line;
  while (b.size < max_rows && std::getline(*in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    std::string err;
    // Parse into temporaries so a bad row leaves the batch untouched.
    std::vector<FieldColumn> tmp(schema_.num_fields());
    double label = -1;
    std::int32_t category = -1;
    do {
      double lv;
      if (static_cast<std::size_t>(label_col_) >= cells.size() ||
          !parse_double(cells[label_col_], lv) || (lv != 0.0 && lv != 1.0)) {
        err = "bad label";
        break;
      }
      label = lv;
      if (category_col_ >= 0) {
        if (static_cast<std::size_t>(category_col_) >= cells.size() ||
            !parse_i32(cells[category_col_], category)) {
          err = "bad category";
          break;
        }
      }
      for (std::size_t f = 0; f < schema_.num_fields() && err.empty(); ++f) {
        const FeatureField& field = schema_.fields[f];
        const std::size_t c = static_cast<std::size_t>(column_of_field_[f]);
        if (c >= cells.size()) {
          err = "short row";
          break;
        }
        const std::string& cell = cells[c];
        FieldColumn& col = tmp[f];
        col.kind = field.kind;
        switch (field.kind) {
          case FieldKind::kCategorical: {
            std::int32_t id;
            if (!parse_i32(cell, id) || id < 0 ||
                static_cast<std::size_t>(id) >= field.vocab_size) {
              err = "bad id in field '" + field.name + "'";
            } else {
              col.ids.push_back(id);
            }
            break;
          }
          case FieldKind::kMultiValued: {
            if (!cell.empty()) {
              for (const std::string& tok : split(cell, '|')) {
                std::int32_t id;
                if (!parse_i32(tok, id) || id < 0 ||
                    static_cast<std::size_t>(id) >= field.vocab_size) {
                  err = "bad id in field '" + field.name + "'";
                  break;
                }
                col.ids.push_back(id);
              }
            }
            break;
          }
          case FieldKind::kNumerical: {
            double v;
            if (!parse_double(cell, v)) {
              err = "bad numeric value in field '" + field.name + "'";
            } else {
              col.values.push_back(v);
            }
            break;
          }
        }
      }
    } while (false);

    if (!err.empty()) {
      ++rows_bad_;
      errors_.push_back(path_ + ":" + std::to_string(line_no_) + ": " + err);
      continue;
    }
    for (std::size_t f = 0; f < schema_.num_fields(); ++f) {
      FieldColumn& col = b.fields[f];
      const FieldColumn& t = tmp[f];
      switch (col.kind) {
        case FieldKind::kCategorical:
          col.ids.push_back(t.ids[0]);
          break;
        case FieldKind::kMultiValued:
          col.ids.insert(col.ids.end(), t.ids.begin(), t.ids.end());
          col.offsets.push_back(static_cast<std::int32_t>(col.ids.size()));
          break;
        case FieldKind::kNumerical:
          col.values.push_back(t.values[0]);
          break;
      }
    }
    b.labels.push_back(label);
    if (category_col_ >= 0) b.categories.push_back(category);
    ++b.size;
    ++rows_ok_;
  }
  if (b.size < max_rows) {
    done_ = true;
    finish_checks();
  }
  if (b.size == 0) return std::nullopt;
  return b;
}

void CsvReader::finish_checks() {
  const std::size_t total = rows_ok_ + rows_bad_;
  if (total > 0 && static_cast<double>(rows_bad_) > 0.01 * total) {
    throw DataError(path_ + ": " + std::to_string(rows_bad_) + " of " +
                    std::to_string(total) +
                    " rows malformed (> 1%); first: " +
                    (errors_.empty() ? std::string("?") : errors_.front()));
  }
}

Dataset load_csv(const std::filesystem::path& path,
                 const FeatureSchema& schema) {
  CsvReader reader(path, schema);
  Dataset all;
  all.fields.resize(schema.num_fields());
  for (std::size_t f = 0; f < schema.num_fields(); ++f) {
    all.fields[f].kind = schema.fields[f].kind;
    if (all.fields[f].kind == FieldKind::kMultiValued)
      all.fields[f].offsets.push_back(0);
  }
  while (auto b = reader.next_batch(8192)) {
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      FieldColumn& dst = all.fields[f];
      const FieldColumn& src = b->fields[f];
      switch (dst.kind) {
        case FieldKind::kCategorical:
          dst.ids.insert(dst.ids.end(), src.ids.begin(), src.ids.end());
          break;
        case FieldKind::kMultiValued: {
          const std::int32_t base =
              static_cast<std::int32_t>(dst.ids.size());
          dst.ids.insert(dst.ids.end(), src.ids.begin(), src.ids.end());
          for (std::size_t i = 1; i < src.offsets.size(); ++i)
            dst.offsets.push_back(base + src.offsets[i]);
          break;
        }
        case FieldKind::kNumerical:
          dst.values.insert(dst.values.end(), src.values.begin(),
                            src.values.end());
          break;
      }
    }
    all.labels.insert(all.labels.end(), b->labels.begin(), b->labels.end());
    all.categories.insert(all.categories.end(), b->categories.begin(),
                          b->categories.end());
    all.size += b->size;
  }
  return all;
}

}  // namespace mbc
