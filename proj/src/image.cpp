#include "wirepipe/image.hpp"

#include <cmath>

namespace wirepipe {

void validate01(const ImageBuf& img, const std::string& what) {
  for (int c = 0; c < img.channels(); ++c) {
    const Plane& p = img.plane(c);
    if (!p.isFinite().all())
      throw std::runtime_error(what + ": non-finite sample in channel " + std::to_string(c));
    if ((p < -1e-6f).any() || (p > 1.0f + 1e-6f).any())
      throw std::runtime_error(what + ": sample outside [0,1] in channel " + std::to_string(c));
  }
}

void validate_probmap(const ProbMap& p, float tol) {
  if (p.empty()) throw std::runtime_error("ProbMap: empty");
  Plane sum = Plane::Zero(p.height(), p.width());
  for (int k = 0; k < p.classes(); ++k) {
    const Plane& pl = p.plane(k);
    if (!pl.isFinite().all()) throw std::runtime_error("ProbMap: non-finite probability");
    if ((pl < -tol).any() || (pl > 1.0f + tol).any())
      throw std::runtime_error("ProbMap: probability outside [0,1]");
    sum += pl;
  }
  if (((sum - 1.0f).abs() > tol).any())
    throw std::runtime_error("ProbMap: class probabilities do not sum to 1");
}

}  // namespace wirepipe
