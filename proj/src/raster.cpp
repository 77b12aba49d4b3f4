#include "npmddm/raster.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace npmddm {

namespace fs = std::filesystem;

RasterSeries::RasterSeries(std::vector<Grid> images, PixelSpacing spacing, std::vector<double> timestamps)
    : images_(std::move(images)), spacing_(spacing), timestamps_(std::move(timestamps)) {
  if (images_.empty()) throw RasterError("raster series is empty");
  const auto r = images_.front().rows();
  const auto c = images_.front().cols();
  if (r <= 0 || c <= 0) throw RasterError("raster images must have positive size");
  for (std::size_t m = 1; m < images_.size(); ++m) {
    if (images_[m].rows() != r || images_[m].cols() != c) {
      std::ostringstream msg;
      msg << "inconsistent grid sizes: image 0 is " << r << "x" << c << ", image " << m << " is "
          << images_[m].rows() << "x" << images_[m].cols();
      throw RasterError(msg.str());
    }
  }
  if (!(spacing_.dx > 0.0) || !(spacing_.dy > 0.0)) throw RasterError("pixel spacing must be positive");
  if (!timestamps_.empty()) {
    if (timestamps_.size() != images_.size()) throw RasterError("timestamp count differs from image count");
    if (std::adjacent_find(timestamps_.begin(), timestamps_.end(), std::greater_equal<>()) != timestamps_.end())
      throw RasterError("timestamps must be strictly increasing");
  }
}

RasterSeries RasterSeries::with_images(std::vector<Grid> images) const {
  if (images.size() != images_.size()) throw RasterError("replacement image count differs");
  for (const auto& g : images)
    if (g.rows() != rows() || g.cols() != cols()) throw RasterError("replacement image shape differs");
  return RasterSeries(std::move(images), spacing_, timestamps_);
}

bool operator==(const RasterSeries& a, const RasterSeries& b) {
  if (a.size() != b.size() || a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.spacing_.dx != b.spacing_.dx || a.spacing_.dy != b.spacing_.dy) return false;
  if (a.timestamps_ != b.timestamps_) return false;
  for (std::size_t m = 0; m < a.size(); ++m)
    if (a.images_[m] != b.images_[m]) return false;
  return true;
}

SeriesFormat parse_series_format(std::string_view name) {
  if (name == "rts1") return SeriesFormat::Rts1;
  if (name == "ascii-matrix-dir") return SeriesFormat::AsciiMatrixDir;
  throw RasterError("unknown series format '" + std::string(name) + "'");
}

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'T', 'S', '1'};

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

RasterSeries load_rts1(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RasterError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  constexpr std::size_t kHeader = 16;
  if (bytes.size() < kHeader || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw RasterError("malformed header: missing RTS1 magic in " + path.string());
  const std::uint32_t count = read_u32_le(&bytes[4]);
  const std::uint32_t rows = read_u32_le(&bytes[8]);
  const std::uint32_t cols = read_u32_le(&bytes[12]);
  if (count == 0 || rows == 0 || cols == 0) throw RasterError("malformed header: zero dimension");

  const std::uint64_t values = std::uint64_t{count} * rows * cols;
  const std::uint64_t expected = kHeader + values * 4;
  if (bytes.size() < expected) throw RasterError("truncated payload in " + path.string());
  if (bytes.size() > expected) throw RasterError("trailing bytes after payload in " + path.string());

  std::vector<Grid> images(count, Grid(rows, cols));
  const unsigned char* p = bytes.data() + kHeader;
  for (auto& img : images) {
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j, p += 4) {
        img(i, j) = static_cast<double>(std::bit_cast<float>(read_u32_le(p)));
      }
    }
  }
  return RasterSeries(std::move(images));
}

Grid read_ascii_matrix(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw RasterError("cannot open " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw RasterError("non-numeric token '" + tok + "' in " + file.string());
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw RasterError("empty matrix file " + file.string());
  Grid g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw RasterError("ragged rows in " + file.string());
    for (std::size_t j = 0; j < rows[i].size(); ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return g;
}

RasterSeries load_ascii_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw RasterError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  std::vector<Grid> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_ascii_matrix(f));
  if (images.empty()) throw RasterError("no matrix files in " + dir.string());
  return RasterSeries(std::move(images));
}

}  // namespace

RasterSeries load_series(const fs::path& path, SeriesFormat format) {
  if (!fs::exists(path)) throw RasterError("no such file: " + path.string());
  RasterSeries s = format == SeriesFormat::Rts1 ? load_rts1(path) : load_ascii_dir(path);
  if (s.size() < 2) throw RasterError("series needs at least 2 images, got " + std::to_string(s.size()));
  return s;
}

void save_series(const RasterSeries& series, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RasterError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_u32_le(out, static_cast<std::uint32_t>(series.size()));
  write_u32_le(out, static_cast<std::uint32_t>(series.rows()));
  write_u32_le(out, static_cast<std::uint32_t>(series.cols()));
  for (const auto& img : series.images())
    for (Eigen::Index i = 0; i < img.rows(); ++i)
      for (Eigen::Index j = 0; j < img.cols(); ++j)
        write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(img(i, j))));
  if (!out) throw RasterError("write failed for " + path.string());
}

RasterSeries log_transform(const RasterSeries& series, double offset) {
  if (!(offset >= 0.0)) throw RasterError("log offset must be non-negative");
  std::vector<Grid> out;
  out.reserve(series.size());
  for (std::size_t m = 0; m < series.size(); ++m) {
    const Grid& img = series[m];
    Grid g(img.rows(), img.cols());
    for (Eigen::Index i = 0; i < img.rows(); ++i) {
      for (Eigen::Index j = 0; j < img.cols(); ++j) {
        const double v = img(i, j) + offset;
        if (!(v > 0.0) || !std::isfinite(v)) {
          std::ostringstream msg;
          msg << "log_transform: pixel (m=" << m << ", i=" << i << ", j=" << j << ") plus offset is " << v
              << ", must be positive and finite";
          throw RasterError(msg.str());
        }
        g(i, j) = std::log(v);
      }
    }
    out.push_back(std::move(g));
  }
  return series.with_images(std::move(out));
}

}  // namespace npmddm
