#include "bilevel/io.hpp"

#include "bilevel/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bilevel::io {

namespace {

[[noreturn]] void pnm_fail(const std::string& path, size_t offset, const std::string& what) {
  std::ostringstream msg;
  msg << path << ": byte " << offset << ": " << what;
  throw InvalidInput(msg.str());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// PNM header token scanner: whitespace separates tokens, '#' starts a
// comment running to end of line.
struct HeaderScanner {
  const std::string& text;
  const std::string& path;
  size_t pos = 0;

  void skip_space() {
    while (pos < text.size()) {
      const char c = text[pos];
      if (c == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long next_number(const char* what) {
    skip_space();
    const size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) pnm_fail(path, start, std::string("expected ") + what);
    long v = 0;
    for (size_t i = start; i < pos; ++i) {
      v = v * 10 + (text[i] - '0');
      if (v > 1'000'000'000L) pnm_fail(path, start, std::string(what) + " out of range");
    }
    return v;
  }
};

}  // namespace

ImageU8 read_pnm(const std::string& path) {
  const std::string text = read_file(path);
  if (text.size() < 2 || text[0] != 'P' || (text[1] != '5' && text[1] != '6'))
    pnm_fail(path, 0, "not a binary PGM (P5) or PPM (P6) file");

  ImageU8 img;
  img.channels = text[1] == '5' ? 1 : 3;
  HeaderScanner scan{text, path, 2};
  img.width = scan.next_number("width");
  img.height = scan.next_number("height");
  const long maxval = scan.next_number("maxval");
  if (img.width < 1 || img.height < 1) pnm_fail(path, scan.pos, "degenerate dimensions");
  if (maxval < 1 || maxval > 255) pnm_fail(path, scan.pos, "maxval must lie in 1..255");
  if (scan.pos >= text.size() || !std::isspace(static_cast<unsigned char>(text[scan.pos])))
    pnm_fail(path, scan.pos, "expected single whitespace before pixel data");
  ++scan.pos;

  const size_t need = static_cast<size_t>(img.pixels()) * static_cast<size_t>(img.channels);
  if (text.size() - scan.pos < need) {
    std::ostringstream what;
    what << "expected " << need << " data bytes, found " << text.size() - scan.pos;
    pnm_fail(path, scan.pos, what.str());
  }
  img.data.assign(text.begin() + static_cast<long>(scan.pos),
                  text.begin() + static_cast<long>(scan.pos + need));
  return img;
}

void write_pnm(const std::string& path, const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw InvalidInput("write_pnm: channels must be 1 or 3");
  if (img.width < 1 || img.height < 1) throw InvalidInput("write_pnm: degenerate dimensions");
  const size_t need = static_cast<size_t>(img.pixels()) * static_cast<size_t>(img.channels);
  if (img.data.size() != need) throw InvalidInput("write_pnm: data size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput(path + ": cannot open for writing");
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw InvalidInput(path + ": write failed");
}

Mat features_from_image(const ImageU8& img) {
  Mat f(img.pixels(), img.channels);
  for (Index j = 0; j < img.height; ++j)
    for (Index i = 0; i < img.width; ++i)
      for (int c = 0; c < img.channels; ++c)
        f(i + j * img.width, c) =
            img.data[static_cast<size_t>((j * img.width + i) * img.channels + c)] / 255.0;
  return f;
}

Eigen::VectorXi labels_from_image(const ImageU8& img) {
  if (img.channels != 1)
    throw InvalidInput("labels_from_image: ground truth must be single-channel (P5)");
  Eigen::VectorXi gt(img.pixels());
  for (Index j = 0; j < img.height; ++j)
    for (Index i = 0; i < img.width; ++i)
      gt[i + j * img.width] = img.data[static_cast<size_t>(j * img.width + i)] + 1;
  return gt;
}

ImageU8 labels_to_image(const seg::Grid& grid, const std::vector<int>& labels) {
  grid.validate();
  if (static_cast<Index>(labels.size()) != grid.npix())
    throw InvalidInput("labels_to_image: label count mismatch");
  ImageU8 img;
  img.width = grid.nx;
  img.height = grid.ny;
  img.channels = 1;
  img.data.resize(static_cast<size_t>(grid.npix()));
  for (Index j = 0; j < grid.ny; ++j)
    for (Index i = 0; i < grid.nx; ++i) {
      const int v = labels[static_cast<size_t>(grid.pixel(i, j))] - 1;
      if (v < 0 || v > 255) throw InvalidInput("labels_to_image: label outside 1..256");
      img.data[static_cast<size_t>(j * grid.nx + i)] = static_cast<unsigned char>(v);
    }
  return img;
}

std::vector<std::pair<std::string, std::string>> read_dataset_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = line;
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
    size_t first = 0;
    while (first < t.size() && std::isspace(static_cast<unsigned char>(t[first]))) ++first;
    t = t.substr(first);
    if (t.empty() || t[0] == '#') continue;
    const size_t sep = t.find(';');
    if (sep == std::string::npos || sep == 0 || sep + 1 >= t.size()) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": expected 'features_path;gt_path', got '" << t << "'";
      throw InvalidInput(msg.str());
    }
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path fp(p);
      return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    pairs.emplace_back(resolve(t.substr(0, sep)), resolve(t.substr(sep + 1)));
  }
  return pairs;
}

void save_model(const std::string& path, const seg::LinearUnaryModel& model) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open for writing");
  out << "# linear unary model\n";
  out << "channels = " << model.channels() << "\n";
  out << "labels = " << model.labels() << "\n";
  out << "log_smoothness = " << CsvFile::num(model.log_smoothness) << "\n";
  out << "weights =";
  for (Index k = 0; k < model.weights.cols(); ++k)
    for (Index c = 0; c < model.weights.rows(); ++c)
      out << " " << CsvFile::num(model.weights(c, k));
  out << "\n";
  out << "bias =";
  for (Index k = 0; k < model.bias.size(); ++k) out << " " << CsvFile::num(model.bias[k]);
  out << "\n";
  if (!out) throw InvalidInput(path + ": write failed");
}

seg::LinearUnaryModel load_model(const std::string& path) {
  if (!std::ifstream(path)) throw InvalidInput(path + ": cannot open");
  const Config cfg = Config::parse_file(path);
  const Index channels = parse_int(cfg.get("channels"), path + " channels");
  const Index labels = parse_int(cfg.get("labels"), path + " labels");
  if (channels < 1 || labels < 1)
    throw InvalidInput(path + ": channels and labels must be at least 1");

  auto parse_list = [&](const std::string& text, Index expect, const char* what) {
    std::istringstream in(text);
    Vec v(expect);
    Index n = 0;
    std::string tok;
    while (in >> tok) {
      if (n >= expect) break;
      v[n++] = parse_double(tok, path + std::string(" ") + what);
    }
    if (n != expect || (in >> tok)) {
      std::ostringstream msg;
      msg << path << ": " << what << " must hold exactly " << expect << " values";
      throw InvalidInput(msg.str());
    }
    return v;
  };

  seg::LinearUnaryModel m;
  const Vec w = parse_list(cfg.get("weights"), channels * labels, "weights");
  m.weights = Eigen::Map<const Mat>(w.data(), channels, labels);
  m.bias = parse_list(cfg.get("bias"), labels, "bias");
  m.log_smoothness = parse_double(cfg.get("log_smoothness"), path + " log_smoothness");
  return m;
}

// -------------------------------------------------------------- csv ----------

CsvFile::CsvFile(const std::string& path, const std::string& config_hash,
                 const std::vector<std::string>& columns)
    : out_(path), path_(path), columns_(columns.size()) {
  if (!out_) throw InvalidInput(path + ": cannot open for writing");
  if (columns.empty()) throw InvalidInput("CsvFile: needs at least one column");
  out_ << "# config_hash = " << config_hash << "\n";
  for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvFile::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw InvalidInput(path_ + ": row width mismatch");
  for (size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
  out_ << "\n";
  if (!out_) throw InvalidInput(path_ + ": write failed");
}

std::string CsvFile::num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string CsvFile::num(int v) { return std::to_string(v); }

std::string CsvFile::num(Index v) { return std::to_string(static_cast<long long>(v)); }

}  // namespace bilevel::io
