#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace npmddm {

/// One image: rows x cols, row index i is the y direction, column index j the x direction.
using Grid = Eigen::MatrixXd;

struct PixelSpacing {
  double dx = 1.0;
  double dy = 1.0;
};

/// Raised for unreadable or inconsistent raster input.
class RasterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered stack of equally sized images. Immutable once built; images are
/// treated as equally spaced in time, timestamps are labels only.
class RasterSeries {
 public:
  explicit RasterSeries(std::vector<Grid> images, PixelSpacing spacing = {},
                        std::vector<double> timestamps = {});

  Eigen::Index rows() const { return images_.front().rows(); }
  Eigen::Index cols() const { return images_.front().cols(); }
  std::size_t size() const { return images_.size(); }

  const Grid& operator[](std::size_t m) const { return images_[m]; }
  const std::vector<Grid>& images() const { return images_; }
  const PixelSpacing& spacing() const { return spacing_; }
  const std::vector<double>& timestamps() const { return timestamps_; }

  /// Same metadata, new pixel data (shape must match).
  RasterSeries with_images(std::vector<Grid> images) const;

  friend bool operator==(const RasterSeries& a, const RasterSeries& b);

 private:
  std::vector<Grid> images_;
  PixelSpacing spacing_;
  std::vector<double> timestamps_;
};

enum class SeriesFormat { Rts1, AsciiMatrixDir };

SeriesFormat parse_series_format(std::string_view name);

/// Reads a series and checks it is usable for divergence analysis (M >= 2).
RasterSeries load_series(const std::filesystem::path& path, SeriesFormat format);

/// Writes the RTS1 binary stack. Pixels are stored as float32, so a
/// save/load round trip is exact for float-representable values.
void save_series(const RasterSeries& series, const std::filesystem::path& path);

/// Pixelwise ln(v + offset). Fails on the first (m, i, j) where v + offset <= 0.
RasterSeries log_transform(const RasterSeries& series, double offset = 0.0);

}  // namespace npmddm
