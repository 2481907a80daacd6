#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <torch/torch.h>

#include "pearlgan/networks.hpp"

namespace pearlgan {

struct LossWeights {
  double cyc = 10.0;
  double ssim = 1.0;
  double tv = 5.0;
  double att = 1.0;
  double sga = 0.5;
  // Attentional-diversity tuning coefficients; they keep that loss in [0, 1].
  double alpha = 0.5;
  double beta = 0.25;

  void validate() const;
};

// Gates for the late-starting SSIM and ACCS terms (0 or 1).
struct LossGates {
  double ssim = 1.0;
  double accs = 1.0;
};

// Unweighted loss components of one iteration. T is torch::Tensor while
// training and double in the per-iteration record.
template <class T>
struct LossTerms {
  T adv{};      // generator adversarial loss, both directions
  T cyc_l1{};   // mean |x - x_rec|, summed over both directions
  T ssim{};     // 1 - SSIM(x, x_rec), summed over both directions
  T tv{};       // total variation of both fakes
  T ad{};       // attentional diversity of both real encodings
  T accs{};     // cross-domain conditional similarity, both domains
  T sga{};      // structured gradient alignment, both directions

  template <class Fn>
  void for_each(Fn&& fn) const {
    fn("adv", adv);
    fn("cyc_l1", cyc_l1);
    fn("ssim", ssim);
    fn("tv", tv);
    fn("ad", ad);
    fn("accs", accs);
    fn("sga", sga);
  }
};

// Weighted objective:
//   adv + cyc*cyc_l1 + ssim*gate_ssim*ssim + tv*tv + att*(ad + gate_accs*accs) + sga*sga
template <class T>
T total_objective(const LossTerms<T>& t, const LossWeights& w, const LossGates& g) {
  return t.adv + w.cyc * t.cyc_l1 + (w.ssim * g.ssim) * t.ssim + w.tv * t.tv +
         w.att * (t.ad + g.accs * t.accs) + w.sga * t.sga;
}

LossTerms<double> to_record(const LossTerms<torch::Tensor>& t);

// Throws NonFiniteLoss naming the first NaN/Inf component.
void check_finite(const LossTerms<double>& t, double total, std::int64_t iteration);

// --- adversarial ---------------------------------------------------------

struct AdversarialLosses {
  torch::Tensor generator;
  torch::Tensor discriminator;
};

// Relativistic-average least squares for one view:
//   disc = E[(D_r - E D_f - 1)^2] + E[(D_f - E D_r + 1)^2]
//   gen  = E[(D_f - E D_r - 1)^2] + E[(D_r - E D_f + 1)^2]
AdversarialLosses relativistic_ls(const torch::Tensor& real, const torch::Tensor& fake);

// Mean over the three discriminator views.
AdversarialLosses adversarial_losses(const ScoreGrids& real, const ScoreGrids& fake);

// --- reconstruction and smoothness --------------------------------------

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), valid
// convolution, C1 = 0.01^2, C2 = 0.03^2, data range 1. Inputs [N, C, H, W]
// in [0, 1]; returns the mean SSIM map value.
torch::Tensor ssim(const torch::Tensor& x, const torch::Tensor& y);

struct CycleTerms {
  torch::Tensor l1;    // mean |x - x_rec|
  torch::Tensor ssim;  // 1 - SSIM
};
CycleTerms cycle_terms(const torch::Tensor& x, const torch::Tensor& x_rec);

// cyc * mean|x - x_rec| + ssim * (1 - SSIM).
torch::Tensor cycle_loss(const torch::Tensor& x, const torch::Tensor& x_rec, const LossWeights& w);

// Mean absolute horizontal difference plus mean absolute vertical
// difference. Needs H, W >= 2.
torch::Tensor tv_loss(const torch::Tensor& img);

// --- attentional losses ---------------------------------------------------

// alpha/(hw) * sum_ij [(1 - max_k T_kij) + beta (sum_k T_kij - 1)^2], batch-averaged.
torch::Tensor ad_loss(const torch::Tensor& attention, const LossWeights& w);

// Rows k = GAP(F * T^k) / GAP(T^k), L2-normalised -> [n_a, c]. T is
// average-pooled to F's resolution first when larger. Rows whose attention
// mass GAP(T^k) is below 1e-6 become zero vectors.
torch::Tensor attention_feature(const torch::Tensor& features, const torch::Tensor& attention);

// max(mean off-diagonal of V V^T, 0).
torch::Tensor dis_term(const torch::Tensor& v);

// (W_Q)_k = min(max T_ra^k, max T_rb^k) -> [n_a].
torch::Tensor scale_confidence(const torch::Tensor& t_ra, const torch::Tensor& t_rb);

// One domain's term from its real and fake attention features:
//   W_Q . (rowmax(Q) - diag(Q)) / (sum W_Q + eps) + Dis(V_real) + Dis(V_fake),
// with Q = V_real V_fake^T.
torch::Tensor accs_domain(const torch::Tensor& v_real, const torch::Tensor& v_fake,
                          const torch::Tensor& w_q);

struct AttentionFeatures {
  torch::Tensor rara, rbrb, fbra, farb;
};

// V_rbrb (F_rb, T_rb), V_fbra (F_fb, T_ra), V_rara (F_ra, T_ra), V_farb (F_fa, T_rb).
AttentionFeatures build_attention_features(const torch::Tensor& f_ra, const torch::Tensor& f_rb,
                                           const torch::Tensor& f_fa, const torch::Tensor& f_fb,
                                           const torch::Tensor& t_ra, const torch::Tensor& t_rb);

// L_accs^a + L_accs^b.
torch::Tensor accs_loss(const torch::Tensor& f_ra, const torch::Tensor& f_rb,
                        const torch::Tensor& f_fa, const torch::Tensor& f_fb,
                        const torch::Tensor& t_ra, const torch::Tensor& t_rb);

// --- structured gradient alignment --------------------------------------

// sum max(eta * P_e - P_g, 0) / sum P_e. Both patches [l_p, l_p].
torch::Tensor sga_patch_loss(const torch::Tensor& edge_patch, const torch::Tensor& gradient_patch,
                             double eta);

// Sum over the directions that produced a term (an absent direction, e.g.
// no edge pixel this iteration, contributes 0).
torch::Tensor sga_loss(const std::optional<torch::Tensor>& term_a,
                       const std::optional<torch::Tensor>& term_b);

}  // namespace pearlgan
