#pragma once

#include <vector>

#include "biflow/census.hpp"
#include "biflow/grid.hpp"

namespace biflow {

enum class DataTerm { census, brightness };
enum class SmoothnessOrder { first, second };

// Weights and switches of the bidirectional energy. Defaults reproduce the
// strongest loss configuration: census data term, second-order smoothness,
// occlusion masking with the forward-backward consistency penalty enabled.
struct LossConfig {
  double alpha1 = 0.01;           // relative occlusion threshold
  double alpha2 = 0.5;            // absolute occlusion threshold, px^2
  double gamma = 0.45;            // generalized Charbonnier exponent
  double charbonnier_eps = 1e-3;  // smoothing at zero residual
  double lambda_p = 12.4;         // per-pixel occlusion charge
  double lambda_s = 3.0;          // smoothness weight
  double lambda_c = 0.2;          // consistency weight
  DataTerm data_term = DataTerm::census;
  SmoothnessOrder smoothness_order = SmoothnessOrder::second;
  bool occlusion_masking = true;
  int patch_radius = 3;
  // Per-level settings, coarsest level first.
  std::vector<double> level_weights = {1.1, 3.4, 3.9, 4.35, 12.7};
  std::vector<int> level_patch_radii = {1, 1, 2, 2, 3};
};

void validate(const LossConfig& cfg);

// rho(x) = (x^2 + eps^2)^gamma, even and differentiable everywhere.
double charbonnier(double x, double gamma, double eps);

struct Rho {
  double value = 0.0;
  double deriv = 0.0;
};
Rho charbonnier_vd(double x, double gamma, double eps);

// Vector rule: mean of the componentwise penalties.
double charbonnier_mean2(double a, double b, double gamma, double eps);

struct OcclusionMask {
  ScalarGrid forward;   // o^f, 1 where the forward flow is flagged occluded
  ScalarGrid backward;  // o^b
};

// Forward-backward mismatch test per direction. The reverse flow is read by
// bilinear sampling at the flow-displaced position. With masking disabled
// both grids are all-zero.
OcclusionMask detect_occlusion(const FlowField& wf, const FlowField& wb,
                               const LossConfig& cfg);

// Every term below is normalized by pixel count so weights are resolution
// independent, and sums both flow directions. Gradients treat occlusion
// flags and warp-validity indicators as constants.

struct LossBreakdown {
  double data = 0.0;               // photometric part of the data term
  double smooth = 0.0;             // unweighted smoothness term
  double consistency = 0.0;        // unweighted consistency term
  double occlusion_penalty = 0.0;  // lambda_p charges
  double total = 0.0;  // data + occlusion_penalty + ls*smooth + lc*consistency
};

struct DataLossResult {
  double photometric = 0.0;
  double occlusion_penalty = 0.0;
  double value = 0.0;  // photometric + occlusion_penalty
  // Per-pixel photometric cost, zero at excluded (occluded or out-of-bounds)
  // pixels.
  ScalarGrid per_pixel_forward, per_pixel_backward;
  FlowField grad_forward, grad_backward;  // d value / d flow
};

// Occlusion-aware data loss. Pixels whose warp target leaves the image are
// excluded from the photometric sum and charged lambda_p like occluded ones.
DataLossResult data_loss(const Image& i1, const Image& i2, const FlowField& wf,
                         const FlowField& wb, const OcclusionMask& occ,
                         const LossConfig& cfg);

struct TermResult {
  double value = 0.0;
  ScalarGrid per_pixel_forward, per_pixel_backward;
  FlowField grad_forward, grad_backward;
};

// Second order: rho of w(s) - 2w(x) + w(r) over the horizontal, vertical and
// both diagonal opposite-neighbor pairs; stencils leaving the grid are
// skipped. First order: rho of forward differences towards the right and
// bottom neighbor. Applied to both fields; occlusion plays no role here.
TermResult smoothness_loss(const FlowField& wf, const FlowField& wb,
                           const LossConfig& cfg);

// rho(wf(x) + wb(x + wf(x))) over non-occluded pixels with in-bounds warp
// targets, plus the mirrored backward term.
TermResult consistency_loss(const FlowField& wf, const FlowField& wb,
                            const OcclusionMask& occ, const LossConfig& cfg);

struct TotalLossResult {
  LossBreakdown breakdown;
  OcclusionMask masks;
  FlowField grad_forward, grad_backward;  // d breakdown.total / d flow
};

TotalLossResult total_loss(const Image& i1, const Image& i2,
                           const FlowField& wf, const FlowField& wb,
                           const LossConfig& cfg);
// Same evaluation with caller-provided (frozen) masks; used by the solver
// and by finite-difference checks.
TotalLossResult total_loss_with_masks(const Image& i1, const Image& i2,
                                      const FlowField& wf, const FlowField& wb,
                                      const OcclusionMask& occ,
                                      const LossConfig& cfg);

struct PyramidLevel {
  Image i1, i2;
  FlowField forward, backward;
};

// Weighted per-level combination; levels run coarsest to finest and must
// match cfg.level_weights/level_patch_radii in count.
double multiscale_loss(const std::vector<PyramidLevel>& levels,
                       const LossConfig& cfg);
double combine_level_losses(const std::vector<double>& level_losses,
                            const std::vector<double>& weights);

struct SupervisedLossResult {
  double value = 0.0;
  FlowField grad;
};

// rho(est - gt) over pixels with valid ground truth, vector-mean rule,
// normalized by pixel count.
SupervisedLossResult supervised_loss(const FlowField& est, const FlowField& gt,
                                     const ScalarGrid& valid, double gamma,
                                     double eps);

}  // namespace biflow
