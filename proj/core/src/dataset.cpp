#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "attrmetric/data.hpp"
#include "attrmetric/errors.hpp"

namespace attrmetric {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

// Non-empty, non-comment lines paired with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataErrorKind::kMissingFile,
                    "cannot open " + path.string());
  }
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.emplace_back(number, std::string(t));
  }
  return lines;
}

Matrix read_matrix(const fs::path& path) {
  const auto lines = read_lines(path);
  const std::string file = path.filename().string();
  if (lines.empty()) {
    throw DataError(DataErrorKind::kEmpty, file + ": no rows");
  }
  const auto width = split_on(lines.front().second, ',').size();
  Matrix m(static_cast<Eigen::Index>(lines.size()),
           static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto fields = split_on(text, ',');
    const std::string where = file + " row " + std::to_string(r + 1) +
                              " (line " + std::to_string(number) + ")";
    if (fields.size() != width) {
      throw DataError(DataErrorKind::kRaggedRow,
                      where + ": expected " + std::to_string(width) +
                          " values, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double(fields[c], where);
    }
  }
  return m;
}

std::vector<int> parse_int_list(std::string_view text, const std::string& where) {
  std::vector<int> ids;
  if (trim(text).empty()) return ids;
  for (const auto field : split_on(text, ',')) {
    int value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
      throw DataError(DataErrorKind::kParse,
                      where + ": not an integer: '" + std::string(field) + "'");
    }
    ids.push_back(value);
  }
  return ids;
}

std::ofstream open_output(const fs::path& path, const std::string& header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(DataErrorKind::kMissingFile, "cannot write " + path.string());
  }
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  return out;
}

void write_matrix(const Matrix& m, const fs::path& path, const std::string& header_comment) {
  std::ofstream out = open_output(path, header_comment);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw DataError(DataErrorKind::kParse,
                    context + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

void Dataset::validate() const {
  if (features.rows() != attributes.rows()) {
    throw DataError(DataErrorKind::kInconsistent,
                    "features.csv has " + std::to_string(features.rows()) +
                        " rows but attributes.csv has " +
                        std::to_string(attributes.rows()));
  }
  if (has_labels() &&
      static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw DataError(DataErrorKind::kInconsistent,
                    "labels.csv has " + std::to_string(labels.size()) +
                        " rows but features.csv has " +
                        std::to_string(features.rows()));
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    if (!features.row(r).allFinite()) {
      throw DataError(DataErrorKind::kOutOfRange,
                      "features.csv row " + std::to_string(r + 1) +
                          ": non-finite value");
    }
    for (Eigen::Index c = 0; c < attributes.cols(); ++c) {
      const double a = attributes(r, c);
      if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
        throw DataError(DataErrorKind::kOutOfRange,
                        "attributes.csv row " + std::to_string(r + 1) +
                            " column " + std::to_string(c + 1) + ": value " +
                            format_double(a) + " outside [0,1]");
      }
    }
  }

  // Each class id belongs to at most one split.
  std::map<int, std::string> owner;
  for (const auto& [name, ids] : splits) {
    for (int id : ids) {
      auto [it, inserted] = owner.emplace(id, name);
      if (!inserted && it->second != name) {
        throw DataError(DataErrorKind::kSplitOverlap,
                        "splits.txt: class " + std::to_string(id) +
                            " appears in both '" + it->second + "' and '" +
                            name + "'");
      }
    }
  }
  if (has_labels() && !splits.empty()) {
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (!owner.contains(labels[r])) {
        throw DataError(DataErrorKind::kInconsistent,
                        "labels.csv row " + std::to_string(r + 1) +
                            ": class " + std::to_string(labels[r]) +
                            " is not assigned to any split");
      }
    }
  }
}

const std::vector<int>& Dataset::split(const std::string& name) const {
  const auto it = splits.find(name);
  if (it == splits.end()) {
    throw DataError(DataErrorKind::kInconsistent,
                    "dataset has no '" + name + "' split");
  }
  return it->second;
}

std::vector<Eigen::Index> Dataset::rows_of_classes(
    std::span<const int> classes) const {
  if (!has_labels()) {
    throw DataError(DataErrorKind::kInconsistent,
                    "dataset has no class labels");
  }
  const std::set<int> wanted(classes.begin(), classes.end());
  std::vector<Eigen::Index> rows;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (wanted.contains(labels[r])) rows.push_back(static_cast<Eigen::Index>(r));
  }
  return rows;
}

Dataset Dataset::select_rows(std::span<const Eigen::Index> rows) const {
  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.features.resize(n, features.cols());
  out.attributes.resize(n, attributes.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = rows[static_cast<std::size_t>(i)];
    out.features.row(i) = features.row(src);
    out.attributes.row(i) = attributes.row(src);
    if (has_labels()) out.labels.push_back(labels[static_cast<std::size_t>(src)]);
  }
  out.splits = splits;
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(features, other.features) &&
         same(attributes, other.attributes) && labels == other.labels &&
         splits == other.splits;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw DataError(DataErrorKind::kMissingFile,
                    "dataset directory not found: " + dir.string());
  }
  for (const char* required : {"features.csv", "attributes.csv", "splits.txt"}) {
    if (!fs::exists(dir / required)) {
      throw DataError(DataErrorKind::kMissingFile,
                      "missing " + (dir / required).string());
    }
  }
  Dataset ds;
  ds.features = read_matrix(dir / "features.csv");
  ds.attributes = read_matrix(dir / "attributes.csv");

  if (fs::exists(dir / "labels.csv")) {
    std::size_t row = 0;
    for (const auto& [number, text] : read_lines(dir / "labels.csv")) {
      ++row;
      const auto ids = parse_int_list(
          text, "labels.csv row " + std::to_string(row) + " (line " +
                    std::to_string(number) + ")");
      if (ids.size() != 1) {
        throw DataError(DataErrorKind::kRaggedRow,
                        "labels.csv row " + std::to_string(row) +
                            ": expected one class id");
      }
      ds.labels.push_back(ids.front());
    }
  }

  for (const auto& [number, text] : read_lines(dir / "splits.txt")) {
    const std::string where = "splits.txt line " + std::to_string(number);
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
      throw DataError(DataErrorKind::kParse,
                      where + ": expected 'name: id,id,...'");
    }
    const std::string name(trim(std::string_view(text).substr(0, colon)));
    if (name.empty()) {
      throw DataError(DataErrorKind::kParse, where + ": empty split name");
    }
    if (ds.splits.contains(name)) {
      throw DataError(DataErrorKind::kParse,
                      where + ": duplicate split '" + name + "'");
    }
    ds.splits[name] =
        parse_int_list(std::string_view(text).substr(colon + 1), where);
  }

  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& dir,
                  const std::string& header_comment) {
  dataset.validate();
  fs::create_directories(dir);
  write_matrix(dataset.features, dir / "features.csv", header_comment);
  write_matrix(dataset.attributes, dir / "attributes.csv", header_comment);
  if (dataset.has_labels()) {
    std::ofstream out = open_output(dir / "labels.csv", header_comment);
    for (int label : dataset.labels) out << label << '\n';
  } else {
    fs::remove(dir / "labels.csv");
  }
  std::ofstream out = open_output(dir / "splits.txt", header_comment);
  for (const auto& [name, ids] : dataset.splits) {
    out << name << ':';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << (i ? "," : " ") << ids[i];
    }
    out << '\n';
  }
}

}  // namespace attrmetric
