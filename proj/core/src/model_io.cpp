#include <fstream>
#include <sstream>

#include "attrmetric/data.hpp"
#include "attrmetric/errors.hpp"

namespace attrmetric {

namespace {

void write_row(std::ostream& out, const auto& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << format_double(values(i));
  }
  out << '\n';
}

// Sequential reader over the non-comment lines of a model document.
class ModelReader {
 public:
  explicit ModelReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      lines_.push_back(line);
    }
  }

  bool done() const { return next_ >= lines_.size(); }

  std::string line(const std::string& what) {
    if (done()) {
      throw DataError(DataErrorKind::kDimension,
                      "model file truncated: expected " + what);
    }
    return lines_[next_++];
  }

  std::vector<std::string> tokens(const std::string& what) {
    std::istringstream in(line(what));
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }

  long long keyed_int(const std::string& key) {
    const auto t = tokens(key);
    if (t.size() != 2 || t[0] != key) {
      throw DataError(DataErrorKind::kParse, "model file: expected '" + key + " <n>'");
    }
    try {
      std::size_t used = 0;
      const long long v = std::stoll(t[1], &used);
      if (used != t[1].size()) throw std::invalid_argument(t[1]);
      return v;
    } catch (const std::exception&) {
      throw DataError(DataErrorKind::kParse, "model file: bad integer for " + key);
    }
  }

  double keyed_double(const std::string& key) {
    const auto t = tokens(key);
    if (t.size() != 2 || t[0] != key) {
      throw DataError(DataErrorKind::kParse, "model file: expected '" + key + " <x>'");
    }
    return parse_double(t[1], "model file " + key);
  }

  void expect(const std::string& key) {
    const auto l = line(key);
    if (l != key) {
      throw DataError(DataErrorKind::kDimension,
                      "model file: expected '" + key + "', got '" + l + "'");
    }
  }

  Vector row(const std::string& what, Eigen::Index width) {
    const auto t = tokens(what);
    if (static_cast<Eigen::Index>(t.size()) != width) {
      throw DataError(DataErrorKind::kDimension,
                      "model file: " + what + " has " +
                          std::to_string(t.size()) + " values, expected " +
                          std::to_string(width));
    }
    Vector v(width);
    for (Eigen::Index i = 0; i < width; ++i) {
      v(i) = parse_double(t[static_cast<std::size_t>(i)], "model file " + what);
    }
    return v;
  }

  // Reads rows until the next section keyword (or end) and checks the count.
  Matrix block(const std::string& name, Eigen::Index rows, Eigen::Index cols,
               const std::string& terminator) {
    expect(name);
    std::vector<Vector> read;
    while (!done() && lines_[next_] != terminator) {
      read.push_back(row(name + " row", cols));
    }
    if (static_cast<Eigen::Index>(read.size()) != rows) {
      throw DataError(DataErrorKind::kDimension,
                      "model file: " + name + " has " +
                          std::to_string(read.size()) + " rows, expected " +
                          std::to_string(rows));
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      m.row(r) = read[static_cast<std::size_t>(r)].transpose();
    }
    return m;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
};

}  // namespace

std::string serialize_model(const Model& model,
                            const std::string& header_comment) {
  model.validate();
  std::ostringstream out;
  out << kModelFormatName << ' ' << kModelFormatVersion << '\n';
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "d " << model.feature_dim() << '\n';
  out << "p " << model.attribute_dim() << '\n';
  out << "m " << model.metric_dim() << '\n';
  out << "tau " << format_double(model.tau) << '\n';
  out << "standardizer " << (model.standardizer.empty() ? 0 : 1) << '\n';
  if (!model.standardizer.empty()) {
    out << "mean\n";
    write_row(out, model.standardizer.mean);
    out << "scale\n";
    write_row(out, model.standardizer.scale);
  }
  out << "w_x\n";
  for (Eigen::Index r = 0; r < model.w_x.rows(); ++r) write_row(out, model.w_x.row(r));
  out << "b_x\n";
  write_row(out, model.b_x);
  out << "w_a\n";
  for (Eigen::Index r = 0; r < model.w_a.rows(); ++r) write_row(out, model.w_a.row(r));
  return out.str();
}

Model parse_model(const std::string& text) {
  ModelReader reader(text);
  {
    const auto header = reader.tokens("format header");
    if (header.size() != 2 || header[0] != kModelFormatName) {
      throw DataError(DataErrorKind::kVersion,
                      std::string("not an ") + kModelFormatName + " file");
    }
    if (header[1] != std::to_string(kModelFormatVersion)) {
      throw DataError(DataErrorKind::kVersion,
                      "unsupported model format version " + header[1] +
                          " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
  }
  const auto d = reader.keyed_int("d");
  const auto p = reader.keyed_int("p");
  const auto m = reader.keyed_int("m");
  if (d < 1 || p < 1 || m < 1) {
    throw DataError(DataErrorKind::kDimension, "model file: d, p and m must be >= 1");
  }
  Model model;
  model.tau = reader.keyed_double("tau");
  const auto has_standardizer = reader.keyed_int("standardizer");
  if (has_standardizer == 1) {
    reader.expect("mean");
    model.standardizer.mean = reader.row("mean", d);
    reader.expect("scale");
    model.standardizer.scale = reader.row("scale", d);
  } else if (has_standardizer != 0) {
    throw DataError(DataErrorKind::kParse, "model file: standardizer must be 0 or 1");
  }
  model.w_x = reader.block("w_x", d, p, "b_x");
  reader.expect("b_x");
  model.b_x = reader.row("b_x", p);
  model.w_a = reader.block("w_a", p, m, "");
  try {
    model.validate();
  } catch (const DimensionError& e) {
    throw DataError(DataErrorKind::kDimension, std::string("model file: ") + e.what());
  } catch (const Error& e) {
    throw DataError(DataErrorKind::kOutOfRange, std::string("model file: ") + e.what());
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path,
                const std::string& header_comment) {
  const std::string text = serialize_model(model, header_comment);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(DataErrorKind::kMissingFile, "cannot write " + path.string());
  }
  out << text;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(DataErrorKind::kMissingFile, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace attrmetric
