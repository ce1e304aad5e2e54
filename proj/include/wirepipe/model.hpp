#pragma once

#include "wirepipe/image.hpp"
#include "wirepipe/tiling.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace wirepipe {

/// Six-channel input assembly: [R, G, B, condition, minLum, maxLum].
/// The coarse pass uses a zero condition channel; the fine pass receives the
/// wire-probability crop from the upsampled coarse prediction.
ImageBuf assemble_coarse_input(const ImageBuf& img_ds, int minmax_kernel = 6);
ImageBuf assemble_fine_input(const ImageBuf& patch, const Plane& cond_wire, int minmax_kernel = 6);

/// Mean over pixels of -log p(class = gt); probabilities are clamped to
/// [1e-7, 1] before the log.
double cross_entropy(const ProbMap& p, const MaskBuf& gt);

struct LossReport {
  double loss_glo = 0.0;
  double loss_loc = 0.0;
  double lambda = 1.0;
  double total = 0.0;  ///< loss_glo + lambda * loss_loc
};

LossReport total_loss(const ProbMap& p_glo, const MaskBuf& g_glo, const ProbMap& p_loc,
                      const MaskBuf& g_loc, double lambda = 1.0);

/// Segmenter contract: a coarse pass over the downsampled global image and a
/// fine pass over full-resolution patches. Both return 2-channel logit maps
/// at the input's spatial size. The window locates the patch within the
/// full-resolution image (backends that don't need it ignore it).
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual ImageBuf coarse_forward(const ImageBuf& input6) const = 0;
  virtual ImageBuf fine_forward(const ImageBuf& input6, const WindowSpec& win) const = 0;
};

enum class Branch { Coarse, Fine };

/// Channel-interleaved activation layout: column p = pixel (p / W, p % W),
/// rows are channels. This keeps the conv GEMMs in their fast orientation.
template <typename Scalar>
using ActMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
ActMat<Scalar> pack_planes(const ImageBuf& img);
ImageBuf unpack_logits(const ActMat<float>& m, int h, int w);

/// Small fully-convolutional segmenter: a shared two-layer encoder
/// (6->16->16, 3x3, ReLU) and separate single-conv decoders (16->2) for the
/// coarse and fine branches. Parameters live in one flat vector so the
/// optimizer, checkpoints and finite-difference checks all see the same
/// layout. Templated on scalar; float is the production instantiation,
/// double backs the gradient tests.
template <typename Scalar>
class TinyConvNet {
 public:
  using Mat = ActMat<Scalar>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  static constexpr int kInChannels = 6;
  static constexpr int kEncoderWidth = 16;
  static constexpr int kClasses = 2;

  struct LayerShape {
    int in_ch;
    int out_ch;
  };

  TinyConvNet();

  /// He-normal weights, zero biases; the two decoders start identical.
  void init_parameters(std::uint64_t seed);

  Vec& parameters() { return params_; }
  const Vec& parameters() const { return params_; }
  int parameter_count() const { return static_cast<int>(params_.size()); }
  const std::vector<LayerShape>& layer_shapes() const { return shapes_; }

  struct Cache {
    int h = 0, w = 0;
    std::vector<Mat> cols;  ///< im2col matrices per conv in the branch path
    std::vector<Mat> post;  ///< post-ReLU activations (encoder layers)
    Branch branch = Branch::Coarse;
  };

  /// input: (6 x h*w) interleaved activations. Returns (2 x h*w) logits.
  /// A non-null cache captures what backward() needs.
  Mat forward(const Mat& input, int h, int w, Branch branch, Cache* cache = nullptr) const;

  /// Accumulates parameter gradients for d(loss)/d(logits) into `grad`
  /// (same flat layout as parameters()).
  void backward(const Cache& cache, const Mat& dlogits, Vec& grad) const;

 private:
  enum LayerIndex { kEnc1 = 0, kEnc2 = 1, kDecCoarse = 2, kDecFine = 3 };

  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<Vec> bias(int layer);
  Eigen::Map<const Vec> bias(int layer) const;

  std::vector<LayerShape> shapes_;
  std::vector<int> weight_offset_, bias_offset_;
  Vec params_;
};

/// One assembled training sample: the six-channel global and local inputs
/// with their labels. The conditional channel inside in_loc is data here;
/// gradients flow only through the network.
struct TrainSample {
  ActMat<float> in_glo;
  int glo_h = 0, glo_w = 0;
  MaskBuf g_mask;
  ActMat<float> in_loc;
  int loc_h = 0, loc_w = 0;
  MaskBuf l_mask;
};

/// Loss and d(loss)/d(logits) for one branch, fused with softmax. Pixels
/// whose target probability hits the 1e-7 clamp contribute zero gradient,
/// matching the clamped loss exactly.
template <typename Scalar>
struct BranchLoss {
  double value = 0.0;
  ActMat<Scalar> dlogits;
};
template <typename Scalar>
BranchLoss<Scalar> softmax_cross_entropy_grad(const ActMat<Scalar>& logits, const MaskBuf& gt);

/// Trainable reference segmenter wrapping TinyConvNet<float>.
class TinySegmenter : public Segmenter {
 public:
  explicit TinySegmenter(std::uint64_t seed = 0);

  ImageBuf coarse_forward(const ImageBuf& input6) const override;
  ImageBuf fine_forward(const ImageBuf& input6, const WindowSpec& win) const override;

  TinyConvNet<float>& net() { return net_; }
  const TinyConvNet<float>& net() const { return net_; }

 private:
  TinyConvNet<float> net_;
};

struct SgdState {
  Eigen::VectorXf velocity;
};

/// One momentum-SGD step on the mean combined loss over the batch:
/// v <- momentum*v + g, w <- w - lr*v. Throws on non-finite loss.
LossReport sgd_step(TinySegmenter& model, std::span<const TrainSample> batch, double lr,
                    double momentum, double lambda, SgdState& state);

/// Shared loss/gradient core, exposed for the finite-difference checks.
template <typename Scalar>
double training_loss(const TinyConvNet<Scalar>& net, const ActMat<Scalar>& in_glo, int gh, int gw,
                     const MaskBuf& g_mask, const ActMat<Scalar>& in_loc, int lh, int lw,
                     const MaskBuf& l_mask, double lambda,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* grad, LossReport* report = nullptr);

/// Test double that plays back ground truth: coarse logits argmax to the
/// max-pooled ground truth at the input size, fine logits to the window's
/// ground-truth crop. Logit magnitude +/-10.
class OracleSegmenter : public Segmenter {
 public:
  explicit OracleSegmenter(MaskBuf gt_full, float logit_magnitude = 10.0f);

  ImageBuf coarse_forward(const ImageBuf& input6) const override;
  ImageBuf fine_forward(const ImageBuf& input6, const WindowSpec& win) const override;

 private:
  ImageBuf mask_to_logits(const MaskBuf& m) const;
  MaskBuf gt_;
  float magnitude_;
};

/// Versioned checkpoint: magic, layer-shape table, little-endian float32
/// parameter block, trailing CRC-32.
void save_checkpoint(const std::filesystem::path& path, const TinyConvNet<float>& net);
void load_checkpoint(const std::filesystem::path& path, TinyConvNet<float>& net);

}  // namespace wirepipe
