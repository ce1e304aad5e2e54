#include "wirepipe/model.hpp"

#include "wirepipe/image_ops.hpp"
#include "wirepipe/io.hpp"
#include "wirepipe/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wirepipe {

// ---------------------------------------------------------------------------
// Input assembly
// ---------------------------------------------------------------------------

namespace {

void append_minmax(ImageBuf& out, const ImageBuf& rgb, int k) {
  const ImageBuf lum = luminance(rgb);
  out.push_plane(min_filter(lum, k).plane(0));
  out.push_plane(max_filter(lum, k).plane(0));
}

}  // namespace

ImageBuf assemble_coarse_input(const ImageBuf& img_ds, int minmax_kernel) {
  if (img_ds.channels() != 3)
    throw std::invalid_argument("assemble_coarse_input: expected a 3-channel image");
  ImageBuf out = img_ds;
  out.push_plane(Plane::Zero(img_ds.height(), img_ds.width()));
  append_minmax(out, img_ds, minmax_kernel);
  return out;
}

ImageBuf assemble_fine_input(const ImageBuf& patch, const Plane& cond_wire, int minmax_kernel) {
  if (patch.channels() != 3)
    throw std::invalid_argument("assemble_fine_input: expected a 3-channel patch");
  if (cond_wire.rows() != patch.height() || cond_wire.cols() != patch.width())
    throw std::invalid_argument("assemble_fine_input: condition map dims mismatch");
  ImageBuf out = patch;
  out.push_plane(cond_wire);
  append_minmax(out, patch, minmax_kernel);
  return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

double cross_entropy(const ProbMap& p, const MaskBuf& gt) {
  if (p.height() != gt.height() || p.width() != gt.width())
    throw std::invalid_argument("cross_entropy: shape mismatch");
  if (p.classes() != 2) throw std::invalid_argument("cross_entropy: expected 2 classes");
  const int h = p.height(), w = p.width();
  double sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float prob = p.at(y, x, gt.at(y, x) ? kWireClass : kBackgroundClass);
      sum -= std::log(std::min(1.0, std::max(1e-7, static_cast<double>(prob))));
    }
  return sum / (static_cast<double>(h) * w);
}

LossReport total_loss(const ProbMap& p_glo, const MaskBuf& g_glo, const ProbMap& p_loc,
                      const MaskBuf& g_loc, double lambda) {
  LossReport r;
  r.loss_glo = cross_entropy(p_glo, g_glo);
  r.loss_loc = cross_entropy(p_loc, g_loc);
  r.lambda = lambda;
  r.total = r.loss_glo + lambda * r.loss_loc;
  return r;
}

// ---------------------------------------------------------------------------
// Activation packing
// ---------------------------------------------------------------------------

template <typename Scalar>
ActMat<Scalar> pack_planes(const ImageBuf& img) {
  const int c = img.channels(), h = img.height(), w = img.width();
  ActMat<Scalar> out(c, static_cast<Eigen::Index>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    const Plane& p = img.plane(ci);
    out.row(ci) = Eigen::Map<const Eigen::Matrix<float, 1, Eigen::Dynamic>>(
                      p.data(), static_cast<Eigen::Index>(h) * w)
                      .template cast<Scalar>();
  }
  return out;
}

ImageBuf unpack_logits(const ActMat<float>& m, int h, int w) {
  if (m.cols() != static_cast<Eigen::Index>(h) * w)
    throw std::invalid_argument("unpack_logits: size mismatch");
  ImageBuf out(h, w, static_cast<int>(m.rows()));
  for (int c = 0; c < m.rows(); ++c) {
    Eigen::Matrix<float, 1, Eigen::Dynamic> row = m.row(c);
    out.plane(c) = Eigen::Map<const Plane>(row.data(), h, w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convolution kernels (3x3, same padding, channel-interleaved activations)
// ---------------------------------------------------------------------------

namespace {

// Fills `cols` (9C x n_px) for the pixel span [p0, p0+n_px) of a h x w image,
// gathering 3x3 neighborhoods from A (C x h*w). Out-of-canvas taps are zero.
template <typename Scalar>
void im2col_span(const ActMat<Scalar>& A, int h, int w, Eigen::Index p0, Eigen::Index n_px,
                 ActMat<Scalar>& cols) {
  const Eigen::Index c = A.rows();
  cols.setZero(9 * c, n_px);
  for (int ky = 0; ky < 3; ++ky) {
    const int dy = ky - 1;
    for (int kx = 0; kx < 3; ++kx) {
      const int dx = kx - 1;
      const Eigen::Index row0 = static_cast<Eigen::Index>(3 * ky + kx) * c;
      // Walk the span row by row; within a row the copy is one block.
      Eigen::Index p = p0;
      while (p < p0 + n_px) {
        const int y = static_cast<int>(p / w);
        const int x = static_cast<int>(p % w);
        const Eigen::Index row_end = std::min<Eigen::Index>(p0 + n_px, static_cast<Eigen::Index>(y) * w + w);
        const int ny = y + dy;
        if (ny >= 0 && ny < h) {
          const int x_lo = std::max(x, -dx);
          const int x_hi = std::min(static_cast<int>(row_end - 1 - static_cast<Eigen::Index>(y) * w), w - 1 - dx);
          if (x_hi >= x_lo) {
            const Eigen::Index len = x_hi - x_lo + 1;
            const Eigen::Index dst = static_cast<Eigen::Index>(y) * w + x_lo - p0;
            const Eigen::Index src = static_cast<Eigen::Index>(ny) * w + x_lo + dx;
            cols.block(row0, dst, c, len) = A.block(0, src, c, len);
          }
        }
        p = row_end;
      }
    }
  }
}

// Scatter-add of `cols` gradients back onto dA; exact adjoint of im2col_span.
template <typename Scalar>
void col2im_span(const ActMat<Scalar>& cols, int h, int w, Eigen::Index p0, Eigen::Index n_px,
                 ActMat<Scalar>& dA) {
  const Eigen::Index c = dA.rows();
  for (int ky = 0; ky < 3; ++ky) {
    const int dy = ky - 1;
    for (int kx = 0; kx < 3; ++kx) {
      const int dx = kx - 1;
      const Eigen::Index row0 = static_cast<Eigen::Index>(3 * ky + kx) * c;
      Eigen::Index p = p0;
      while (p < p0 + n_px) {
        const int y = static_cast<int>(p / w);
        const int x = static_cast<int>(p % w);
        const Eigen::Index row_end = std::min<Eigen::Index>(p0 + n_px, static_cast<Eigen::Index>(y) * w + w);
        const int ny = y + dy;
        if (ny >= 0 && ny < h) {
          const int x_lo = std::max(x, -dx);
          const int x_hi = std::min(static_cast<int>(row_end - 1 - static_cast<Eigen::Index>(y) * w), w - 1 - dx);
          if (x_hi >= x_lo) {
            const Eigen::Index len = x_hi - x_lo + 1;
            const Eigen::Index src = static_cast<Eigen::Index>(y) * w + x_lo - p0;
            const Eigen::Index dst = static_cast<Eigen::Index>(ny) * w + x_lo + dx;
            dA.block(0, dst, c, len) += cols.block(row0, src, c, len);
          }
        }
        p = row_end;
      }
    }
  }
}

// Pixel-chunk size for the im2col staging buffers (caps transient memory).
constexpr Eigen::Index kConvChunk = 1 << 16;

template <typename Scalar>
ActMat<Scalar> conv3x3_forward(const Eigen::Map<const ActMat<Scalar>>& W,
                               const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& b,
                               const ActMat<Scalar>& A, int h, int w) {
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  ActMat<Scalar> Z(W.rows(), hw);
  ActMat<Scalar> cols;
  for (Eigen::Index p0 = 0; p0 < hw; p0 += kConvChunk) {
    const Eigen::Index n = std::min(kConvChunk, hw - p0);
    im2col_span(A, h, w, p0, n, cols);
    Z.middleCols(p0, n).noalias() = W * cols.leftCols(n);
  }
  Z.colwise() += b;
  return Z;
}

// Accumulates dW/db and returns dA.
template <typename Scalar>
ActMat<Scalar> conv3x3_backward(const Eigen::Map<const ActMat<Scalar>>& W,
                                const ActMat<Scalar>& A_in, const ActMat<Scalar>& dZ, int h, int w,
                                Eigen::Map<ActMat<Scalar>> dW,
                                Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> db) {
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  ActMat<Scalar> dA = ActMat<Scalar>::Zero(A_in.rows(), hw);
  ActMat<Scalar> cols, dcols;
  for (Eigen::Index p0 = 0; p0 < hw; p0 += kConvChunk) {
    const Eigen::Index n = std::min(kConvChunk, hw - p0);
    im2col_span(A_in, h, w, p0, n, cols);
    dW.noalias() += dZ.middleCols(p0, n) * cols.leftCols(n).transpose();
    dcols.noalias() = W.transpose() * dZ.middleCols(p0, n);
    col2im_span(dcols, h, w, p0, n, dA);
  }
  db.noalias() += dZ.rowwise().sum();
  return dA;
}

}  // namespace

// ---------------------------------------------------------------------------
// TinyConvNet
// ---------------------------------------------------------------------------

template <typename Scalar>
TinyConvNet<Scalar>::TinyConvNet() {
  shapes_ = {{kInChannels, kEncoderWidth},
             {kEncoderWidth, kEncoderWidth},
             {kEncoderWidth, kClasses},
             {kEncoderWidth, kClasses}};
  int offset = 0;
  for (const LayerShape& s : shapes_) {
    weight_offset_.push_back(offset);
    offset += s.out_ch * s.in_ch * 9;
    bias_offset_.push_back(offset);
    offset += s.out_ch;
  }
  params_ = Vec::Zero(offset);
}

template <typename Scalar>
void TinyConvNet<Scalar>::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  params_.setZero();
  for (int l = 0; l < static_cast<int>(shapes_.size()); ++l) {
    if (l == kDecFine) {  // decoders start identical
      const int n = shapes_[l].out_ch * shapes_[l].in_ch * 9;
      params_.segment(weight_offset_[l], n) = params_.segment(weight_offset_[kDecCoarse], n);
      continue;
    }
    const double stddev = std::sqrt(2.0 / (shapes_[l].in_ch * 9));
    auto w = weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = static_cast<Scalar>(stddev * rng.normal());
  }
}

template <typename Scalar>
Eigen::Map<typename TinyConvNet<Scalar>::Mat> TinyConvNet<Scalar>::weight(int layer) {
  const LayerShape& s = shapes_[static_cast<std::size_t>(layer)];
  return {params_.data() + weight_offset_[static_cast<std::size_t>(layer)], s.out_ch, s.in_ch * 9};
}

template <typename Scalar>
Eigen::Map<const typename TinyConvNet<Scalar>::Mat> TinyConvNet<Scalar>::weight(int layer) const {
  const LayerShape& s = shapes_[static_cast<std::size_t>(layer)];
  return {params_.data() + weight_offset_[static_cast<std::size_t>(layer)], s.out_ch, s.in_ch * 9};
}

template <typename Scalar>
Eigen::Map<typename TinyConvNet<Scalar>::Vec> TinyConvNet<Scalar>::bias(int layer) {
  const LayerShape& s = shapes_[static_cast<std::size_t>(layer)];
  return {params_.data() + bias_offset_[static_cast<std::size_t>(layer)], s.out_ch};
}

template <typename Scalar>
Eigen::Map<const typename TinyConvNet<Scalar>::Vec> TinyConvNet<Scalar>::bias(int layer) const {
  const LayerShape& s = shapes_[static_cast<std::size_t>(layer)];
  return {params_.data() + bias_offset_[static_cast<std::size_t>(layer)], s.out_ch};
}

template <typename Scalar>
typename TinyConvNet<Scalar>::Mat TinyConvNet<Scalar>::forward(const Mat& input, int h, int w,
                                                               Branch branch, Cache* cache) const {
  if (input.rows() != kInChannels || input.cols() != static_cast<Eigen::Index>(h) * w)
    throw std::invalid_argument("TinyConvNet::forward: input shape mismatch");
  Mat z1 = conv3x3_forward<Scalar>(weight(kEnc1), bias(kEnc1), input, h, w);
  Mat a1 = z1.cwiseMax(Scalar(0));
  Mat z2 = conv3x3_forward<Scalar>(weight(kEnc2), bias(kEnc2), a1, h, w);
  Mat a2 = z2.cwiseMax(Scalar(0));
  const int dec = branch == Branch::Coarse ? kDecCoarse : kDecFine;
  Mat logits = conv3x3_forward<Scalar>(weight(dec), bias(dec), a2, h, w);
  if (cache) {
    cache->h = h;
    cache->w = w;
    cache->branch = branch;
    cache->cols.clear();
    cache->post.clear();
    cache->post.push_back(input);
    cache->post.push_back(std::move(a1));
    cache->post.push_back(std::move(a2));
  }
  return logits;
}

template <typename Scalar>
void TinyConvNet<Scalar>::backward(const Cache& cache, const Mat& dlogits, Vec& grad) const {
  if (grad.size() != params_.size())
    throw std::invalid_argument("TinyConvNet::backward: gradient buffer size mismatch");
  if (cache.post.size() != 3) throw std::invalid_argument("TinyConvNet::backward: stale cache");
  const int h = cache.h, w = cache.w;
  const int dec = cache.branch == Branch::Coarse ? kDecCoarse : kDecFine;

  auto grad_w = [&](int l) -> Eigen::Map<Mat> {
    const LayerShape& s = shapes_[static_cast<std::size_t>(l)];
    return {grad.data() + weight_offset_[static_cast<std::size_t>(l)], s.out_ch, s.in_ch * 9};
  };
  auto grad_b = [&](int l) -> Eigen::Map<Vec> {
    const LayerShape& s = shapes_[static_cast<std::size_t>(l)];
    return {grad.data() + bias_offset_[static_cast<std::size_t>(l)], s.out_ch};
  };

  Mat da2 = conv3x3_backward<Scalar>(weight(dec), cache.post[2], dlogits, h, w, grad_w(dec), grad_b(dec));
  Mat dz2 = (cache.post[2].array() > Scalar(0)).template cast<Scalar>() * da2.array();
  Mat da1 =
      conv3x3_backward<Scalar>(weight(kEnc2), cache.post[1], dz2, h, w, grad_w(kEnc2), grad_b(kEnc2));
  Mat dz1 = (cache.post[1].array() > Scalar(0)).template cast<Scalar>() * da1.array();
  conv3x3_backward<Scalar>(weight(kEnc1), cache.post[0], dz1, h, w, grad_w(kEnc1), grad_b(kEnc1));
}

// ---------------------------------------------------------------------------
// Softmax cross entropy on logits
// ---------------------------------------------------------------------------

template <typename Scalar>
BranchLoss<Scalar> softmax_cross_entropy_grad(const ActMat<Scalar>& logits, const MaskBuf& gt) {
  if (logits.rows() != 2) throw std::invalid_argument("softmax_cross_entropy_grad: expected 2 classes");
  const Eigen::Index hw = logits.cols();
  if (hw != static_cast<Eigen::Index>(gt.height()) * gt.width())
    throw std::invalid_argument("softmax_cross_entropy_grad: label size mismatch");
  BranchLoss<Scalar> out;
  out.dlogits.setZero(2, hw);
  const std::uint8_t* labels = gt.data().data();
  const double inv_n = 1.0 / static_cast<double>(hw);
  double loss = 0.0;
  for (Eigen::Index p = 0; p < hw; ++p) {
    const Scalar z0 = logits(0, p), z1 = logits(1, p);
    const Scalar m = std::max(z0, z1);
    const double e0 = std::exp(static_cast<double>(z0 - m));
    const double e1 = std::exp(static_cast<double>(z1 - m));
    const double s = e0 + e1;
    const int cls = labels[p] ? kWireClass : kBackgroundClass;
    const double p_gt = (cls == 0 ? e0 : e1) / s;
    loss -= std::log(std::min(1.0, std::max(1e-7, p_gt)));
    if (p_gt >= 1e-7) {  // below the clamp the loss is constant: zero gradient
      out.dlogits(0, p) = static_cast<Scalar>((e0 / s - (cls == 0 ? 1.0 : 0.0)) * inv_n);
      out.dlogits(1, p) = static_cast<Scalar>((e1 / s - (cls == 1 ? 1.0 : 0.0)) * inv_n);
    }
  }
  out.value = loss * inv_n;
  return out;
}

// ---------------------------------------------------------------------------
// Training loss core + SGD
// ---------------------------------------------------------------------------

template <typename Scalar>
double training_loss(const TinyConvNet<Scalar>& net, const ActMat<Scalar>& in_glo, int gh, int gw,
                     const MaskBuf& g_mask, const ActMat<Scalar>& in_loc, int lh, int lw,
                     const MaskBuf& l_mask, double lambda,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* grad, LossReport* report) {
  typename TinyConvNet<Scalar>::Cache cache_glo, cache_loc;
  const ActMat<Scalar> z_glo =
      net.forward(in_glo, gh, gw, Branch::Coarse, grad ? &cache_glo : nullptr);
  BranchLoss<Scalar> glo = softmax_cross_entropy_grad<Scalar>(z_glo, g_mask);
  const ActMat<Scalar> z_loc = net.forward(in_loc, lh, lw, Branch::Fine, grad ? &cache_loc : nullptr);
  BranchLoss<Scalar> loc = softmax_cross_entropy_grad<Scalar>(z_loc, l_mask);
  if (grad) {
    net.backward(cache_glo, glo.dlogits, *grad);
    loc.dlogits *= static_cast<Scalar>(lambda);
    net.backward(cache_loc, loc.dlogits, *grad);
  }
  const double total = glo.value + lambda * loc.value;
  if (report) {
    report->loss_glo = glo.value;
    report->loss_loc = loc.value;
    report->lambda = lambda;
    report->total = total;
  }
  return total;
}

LossReport sgd_step(TinySegmenter& model, std::span<const TrainSample> batch, double lr,
                    double momentum, double lambda, SgdState& state) {
  if (batch.empty()) throw std::invalid_argument("sgd_step: empty batch");
  TinyConvNet<float>& net = model.net();
  Eigen::VectorXf grad = Eigen::VectorXf::Zero(net.parameter_count());
  LossReport mean;
  mean.lambda = lambda;
  for (const TrainSample& s : batch) {
    LossReport r;
    training_loss<float>(net, s.in_glo, s.glo_h, s.glo_w, s.g_mask, s.in_loc, s.loc_h, s.loc_w,
                         s.l_mask, lambda, &grad, &r);
    mean.loss_glo += r.loss_glo;
    mean.loss_loc += r.loss_loc;
    mean.total += r.total;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  mean.loss_glo *= inv_b;
  mean.loss_loc *= inv_b;
  mean.total *= inv_b;
  if (!std::isfinite(mean.total)) {
    std::ostringstream msg;
    msg << "sgd_step: non-finite loss (glo=" << mean.loss_glo << ", loc=" << mean.loss_loc << ")";
    throw std::runtime_error(msg.str());
  }
  grad *= static_cast<float>(inv_b);

  if (state.velocity.size() != grad.size()) state.velocity = Eigen::VectorXf::Zero(grad.size());
  state.velocity = static_cast<float>(momentum) * state.velocity + grad;
  net.parameters() -= static_cast<float>(lr) * state.velocity;
  return mean;
}

// ---------------------------------------------------------------------------
// TinySegmenter
// ---------------------------------------------------------------------------

TinySegmenter::TinySegmenter(std::uint64_t seed) { net_.init_parameters(seed); }

ImageBuf TinySegmenter::coarse_forward(const ImageBuf& input6) const {
  if (input6.channels() != TinyConvNet<float>::kInChannels)
    throw std::invalid_argument("coarse_forward: expected 6 channels");
  const ActMat<float> packed = pack_planes<float>(input6);
  return unpack_logits(net_.forward(packed, input6.height(), input6.width(), Branch::Coarse),
                       input6.height(), input6.width());
}

ImageBuf TinySegmenter::fine_forward(const ImageBuf& input6, const WindowSpec&) const {
  if (input6.channels() != TinyConvNet<float>::kInChannels)
    throw std::invalid_argument("fine_forward: expected 6 channels");
  const ActMat<float> packed = pack_planes<float>(input6);
  return unpack_logits(net_.forward(packed, input6.height(), input6.width(), Branch::Fine),
                       input6.height(), input6.width());
}

// ---------------------------------------------------------------------------
// OracleSegmenter
// ---------------------------------------------------------------------------

namespace {

MaskBuf nearest_resize_mask(const MaskBuf& mask, int out_h, int out_w) {
  MaskBuf out(out_h, out_w);
  const int h = mask.height(), w = mask.width();
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(h - 1, static_cast<int>((y + 0.5) * h / out_h));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(w - 1, static_cast<int>((x + 0.5) * w / out_w));
      out.set(y, x, mask.at(sy, sx));
    }
  }
  return out;
}

}  // namespace

OracleSegmenter::OracleSegmenter(MaskBuf gt_full, float logit_magnitude)
    : gt_(std::move(gt_full)), magnitude_(logit_magnitude) {}

ImageBuf OracleSegmenter::mask_to_logits(const MaskBuf& m) const {
  ImageBuf out(m.height(), m.width(), 2);
  out.plane(kWireClass) =
      m.data().cast<float>() * (2.0f * magnitude_) - magnitude_;  // {0,1} -> {-mag, +mag}
  out.plane(kBackgroundClass) = -out.plane(kWireClass);
  return out;
}

ImageBuf OracleSegmenter::coarse_forward(const ImageBuf& input6) const {
  const int h = input6.height(), w = input6.width();
  const MaskBuf scaled = (h <= gt_.height() && w <= gt_.width())
                             ? maxpool_downsample_mask(gt_, h, w)
                             : nearest_resize_mask(gt_, h, w);
  return mask_to_logits(scaled);
}

ImageBuf OracleSegmenter::fine_forward(const ImageBuf& input6, const WindowSpec& win) const {
  if (win.w != input6.width() || win.h != input6.height())
    throw std::invalid_argument("OracleSegmenter::fine_forward: window/input dims mismatch");
  return mask_to_logits(extract_mask(gt_, win));
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'W', 'P', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::uint32_t crc32_bytes(const std::uint8_t* data, std::size_t n) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

template <typename T>
void append_pod(std::vector<std::uint8_t>& buf, const T& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T read_pod(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TinyConvNet<float>& net) {
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kCheckpointMagic, kCheckpointMagic + sizeof(kCheckpointMagic));
  append_pod(buf, kCheckpointVersion);
  append_pod(buf, static_cast<std::uint32_t>(net.layer_shapes().size()));
  for (const auto& s : net.layer_shapes()) {
    append_pod(buf, static_cast<std::uint32_t>(s.in_ch));
    append_pod(buf, static_cast<std::uint32_t>(s.out_ch));
    append_pod(buf, static_cast<std::uint32_t>(3));
    append_pod(buf, static_cast<std::uint32_t>(3));
  }
  append_pod(buf, static_cast<std::uint64_t>(net.parameter_count()));
  const auto* params = reinterpret_cast<const std::uint8_t*>(net.parameters().data());
  buf.insert(buf.end(), params, params + sizeof(float) * static_cast<std::size_t>(net.parameter_count()));
  append_pod(buf, crc32_bytes(buf.data(), buf.size()));
  atomic_write_bytes(path, buf.data(), buf.size());
}

void load_checkpoint(const std::filesystem::path& path, TinyConvNet<float>& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kCheckpointMagic) + 4)
    throw std::runtime_error("checkpoint: truncated file");
  if (std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");

  const std::uint32_t stored_crc = [&] {
    std::uint32_t v;
    std::memcpy(&v, buf.data() + buf.size() - 4, 4);
    return v;
  }();
  if (crc32_bytes(buf.data(), buf.size() - 4) != stored_crc)
    throw std::runtime_error("checkpoint: checksum mismatch");

  std::size_t pos = sizeof(kCheckpointMagic);
  if (read_pod<std::uint32_t>(buf, pos) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  const std::uint32_t n_layers = read_pod<std::uint32_t>(buf, pos);
  if (n_layers != net.layer_shapes().size())
    throw std::runtime_error("checkpoint: layer count mismatch");
  for (const auto& s : net.layer_shapes()) {
    const std::uint32_t in_ch = read_pod<std::uint32_t>(buf, pos);
    const std::uint32_t out_ch = read_pod<std::uint32_t>(buf, pos);
    const std::uint32_t kh = read_pod<std::uint32_t>(buf, pos);
    const std::uint32_t kw = read_pod<std::uint32_t>(buf, pos);
    if (in_ch != static_cast<std::uint32_t>(s.in_ch) ||
        out_ch != static_cast<std::uint32_t>(s.out_ch) || kh != 3 || kw != 3)
      throw std::runtime_error("checkpoint: layer shape mismatch");
  }
  const std::uint64_t count = read_pod<std::uint64_t>(buf, pos);
  if (count != static_cast<std::uint64_t>(net.parameter_count()))
    throw std::runtime_error("checkpoint: parameter count mismatch");
  if (pos + sizeof(float) * count + 4 != buf.size())
    throw std::runtime_error("checkpoint: size mismatch");
  std::memcpy(net.parameters().data(), buf.data() + pos, sizeof(float) * count);
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

template class TinyConvNet<float>;
template class TinyConvNet<double>;
template ActMat<float> pack_planes<float>(const ImageBuf&);
template ActMat<double> pack_planes<double>(const ImageBuf&);
template BranchLoss<float> softmax_cross_entropy_grad<float>(const ActMat<float>&, const MaskBuf&);
template BranchLoss<double> softmax_cross_entropy_grad<double>(const ActMat<double>&, const MaskBuf&);
template double training_loss<float>(const TinyConvNet<float>&, const ActMat<float>&, int, int,
                                     const MaskBuf&, const ActMat<float>&, int, int, const MaskBuf&,
                                     double, Eigen::Matrix<float, Eigen::Dynamic, 1>*, LossReport*);
template double training_loss<double>(const TinyConvNet<double>&, const ActMat<double>&, int, int,
                                      const MaskBuf&, const ActMat<double>&, int, int,
                                      const MaskBuf&, double,
                                      Eigen::Matrix<double, Eigen::Dynamic, 1>*, LossReport*);

}  // namespace wirepipe
