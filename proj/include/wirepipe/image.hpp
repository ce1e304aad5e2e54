#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wirepipe {

/// Dense single-channel raster, row-major so (row, col) indexing matches
/// pixel (y, x).
using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskPlane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kMaxChannels = 8;

/// H x W x C floating-point raster stored as a stack of channel planes.
/// Pixel data lives in [0,1]; the same container also carries unbounded
/// model logits, so bounds are checked at construction sites that need
/// them (see validate01).
class ImageBuf {
 public:
  ImageBuf() = default;
  ImageBuf(int height, int width, int channels, float fill = 0.0f) {
    if (height < 1 || width < 1 || channels < 1 || channels > kMaxChannels)
      throw std::invalid_argument("ImageBuf: bad dimensions " + std::to_string(height) + "x" +
                                  std::to_string(width) + "x" + std::to_string(channels));
    planes_.resize(static_cast<std::size_t>(channels));
    for (auto& p : planes_) p = Plane::Constant(height, width, fill);
  }

  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  Plane& plane(int c) { return planes_[static_cast<std::size_t>(c)]; }
  const Plane& plane(int c) const { return planes_[static_cast<std::size_t>(c)]; }

  float at(int y, int x, int c) const { return planes_[static_cast<std::size_t>(c)](y, x); }
  float& at(int y, int x, int c) { return planes_[static_cast<std::size_t>(c)](y, x); }

  /// Appends a plane; dims must match existing planes.
  void push_plane(Plane p) {
    if (!planes_.empty() && (p.rows() != planes_[0].rows() || p.cols() != planes_[0].cols()))
      throw std::invalid_argument("ImageBuf::push_plane: plane dims mismatch");
    if (static_cast<int>(planes_.size()) >= kMaxChannels)
      throw std::invalid_argument("ImageBuf::push_plane: too many channels");
    planes_.push_back(std::move(p));
  }

  bool same_shape(const ImageBuf& o) const {
    return height() == o.height() && width() == o.width() && channels() == o.channels();
  }

 private:
  std::vector<Plane> planes_;
};

/// H x W binary raster; values are exactly 0 or 1.
class MaskBuf {
 public:
  MaskBuf() = default;
  MaskBuf(int height, int width, std::uint8_t fill = 0) {
    if (height < 1 || width < 1) throw std::invalid_argument("MaskBuf: bad dimensions");
    if (fill > 1) throw std::invalid_argument("MaskBuf: fill must be 0 or 1");
    data_ = MaskPlane::Constant(height, width, fill);
  }
  explicit MaskBuf(MaskPlane data) : data_(std::move(data)) {
    if ((data_ > 1).any()) throw std::invalid_argument("MaskBuf: values must be 0 or 1");
  }

  int height() const { return static_cast<int>(data_.rows()); }
  int width() const { return static_cast<int>(data_.cols()); }
  bool empty() const { return data_.size() == 0; }

  std::uint8_t at(int y, int x) const { return data_(y, x); }
  void set(int y, int x, std::uint8_t v) { data_(y, x) = v ? 1 : 0; }

  MaskPlane& data() { return data_; }
  const MaskPlane& data() const { return data_; }

  std::int64_t count_ones() const { return (data_ == 1).count(); }

 private:
  MaskPlane data_;
};

/// H x W x K per-class probability raster. Per pixel the class
/// probabilities sum to 1 (within 1e-5).
class ProbMap {
 public:
  ProbMap() = default;
  ProbMap(int height, int width, int classes) {
    if (height < 1 || width < 1 || classes < 1)
      throw std::invalid_argument("ProbMap: bad dimensions");
    planes_.resize(static_cast<std::size_t>(classes));
    const float uniform = 1.0f / static_cast<float>(classes);
    for (auto& p : planes_) p = Plane::Constant(height, width, uniform);
  }

  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int classes() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  Plane& plane(int k) { return planes_[static_cast<std::size_t>(k)]; }
  const Plane& plane(int k) const { return planes_[static_cast<std::size_t>(k)]; }

  float at(int y, int x, int k) const { return planes_[static_cast<std::size_t>(k)](y, x); }

 private:
  std::vector<Plane> planes_;
};

/// Background and wire class indices of the two-class problem.
constexpr int kBackgroundClass = 0;
constexpr int kWireClass = 1;

/// Throws unless every sample is finite and within [0,1] (+slack for
/// accumulated rounding).
void validate01(const ImageBuf& img, const std::string& what);

/// Throws unless per-pixel class sums are 1 within tol and entries in [0,1].
void validate_probmap(const ProbMap& p, float tol = 1e-5f);

}  // namespace wirepipe
