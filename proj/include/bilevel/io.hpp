#pragma once

// File formats: binary 8-bit PGM (P5) / PPM (P6) images, the plain-text unary
// model container, and CSV emission with a config-hash comment line.

#include "bilevel/segmentation.hpp"
#include "bilevel/types.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace bilevel::io {

struct ImageU8 {
  Index width = 0;
  Index height = 0;
  int channels = 1;  // 1 (PGM) or 3 (PPM)
  std::vector<unsigned char> data;  // row-major, interleaved channels

  Index pixels() const { return width * height; }
};

// Binary P5/P6, maxval <= 255.  Header comments (#) allowed.  Malformed input
// raises InvalidInput naming the path and byte offset.
ImageU8 read_pnm(const std::string& path);
void write_pnm(const std::string& path, const ImageU8& img);

// Channels scaled to [0, 1]; pixel (i, j) of the grid is image column i of
// row j, matching the i + j*nx linearization.
Mat features_from_image(const ImageU8& img);
// Single-channel image; pixel value v encodes label v + 1.
Eigen::VectorXi labels_from_image(const ImageU8& img);
ImageU8 labels_to_image(const seg::Grid& grid, const std::vector<int>& labels);

// Dataset manifest: one "features_path;gt_path" pair per line (comments with
// '#', blank lines skipped); relative paths resolve against the manifest's
// directory.
std::vector<std::pair<std::string, std::string>> read_dataset_manifest(const std::string& path);

// Plain-text model container (key = value lines).
void save_model(const std::string& path, const seg::LinearUnaryModel& model);
seg::LinearUnaryModel load_model(const std::string& path);

// -------------------------------------------------------------- csv ----------

// One CSV file: a "# config_hash = ..." comment line, a header row, then data
// rows.  All fields are plain numerals or [a-z0-9-]+ tags, so a naive comma
// split round-trips.
class CsvFile {
 public:
  CsvFile(const std::string& path, const std::string& config_hash,
          const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& fields);

  static std::string num(double v);  // shortest round-trip decimal
  static std::string num(int v);
  static std::string num(Index v);

 private:
  std::ofstream out_;
  std::string path_;
  size_t columns_ = 0;
};

}  // namespace bilevel::io
