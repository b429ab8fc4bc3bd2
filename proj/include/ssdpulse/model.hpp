#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdpulse/dsp.hpp"
#include "ssdpulse/ssd.hpp"
#include "ssdpulse/stem.hpp"
#include "ssdpulse/temporal.hpp"

namespace ssdpulse {

struct PhysMambaConfig {
    std::int64_t d_model = 64;
    std::int64_t d_state = 64;
    std::int64_t d_head = 16;
    std::int64_t n_heads = 4;
    std::int64_t chunk_size = 16;
    std::int64_t clip_len = 160;
    std::int64_t input_h = 128;
    std::int64_t input_w = 128;
    double hr_band_lo_hz = 0.75;
    double hr_band_hi_hz = 2.5;
    // stem channel plan: 3 -> stem_mid_a -> stem_mid_b -> d_model
    std::int64_t stem_mid_a = 8;
    std::int64_t stem_mid_b = 16;
    std::int64_t predictor_kernel = 3;  // odd
    bool mask_sigmoid = true;
    double bn_eps = 1e-5;

    SsdConfig ssd() const;
    HrBand band() const { return {hr_band_lo_hz, hr_band_hi_hz}; }
    void validate() const;
};

struct PhysMambaWeights {
    StemParams stem;
    SsdBlockParams sa_block;
    SsdBlockParams ca_block;
    FdfParams fdf_sa;
    FdfParams fdf_ca;
    Tensor predictor_w;  // [2, 2*d_model, predictor_kernel]
};

// Uniform fan-in init (bound sqrt(6/fan_in)) for every matrix/conv kernel,
// BN stats at mean 0 / var 1, deterministic for a given seed.
PhysMambaWeights init_weights(const PhysMambaConfig& cfg, std::uint64_t seed);

void validate_weights(const PhysMambaWeights& w, const PhysMambaConfig& cfg);

struct ForwardDetail {
    Tensor tokens;  // [T', C] stem output
    Tensor x_sa;    // [T', C] self pathway after FDF
    Tensor x_ca;    // [T', C] cross pathway after FDF
    Tensor fusion;  // [T', 2C], cross channels first
    BvpSignal signal;
    bool dropped_trailing_frame = false;
};

ForwardDetail forward_detail(const VideoClip& clip, const PhysMambaWeights& w,
                             const PhysMambaConfig& cfg);
BvpSignal forward(const VideoClip& clip, const PhysMambaWeights& w,
                  const PhysMambaConfig& cfg);

// Checkpoint directory: manifest.json (config + tensor index with content
// hashes) plus one PTNSR blob per tensor.
void save_checkpoint(const std::string& dir, const PhysMambaWeights& w,
                     const PhysMambaConfig& cfg);

struct LoadedCheckpoint {
    PhysMambaConfig config;
    PhysMambaWeights weights;
};
LoadedCheckpoint load_checkpoint(const std::string& dir);

// Losses (evaluation-side; there is no training loop).
// Negative Pearson correlation, in [-1, 1].
double loss_time(const BvpSignal& pred, const BvpSignal& label);

// Cross entropy of the softmax over band-restricted periodogram power
// against the bin holding label_hr_bpm / 60.
double loss_freq(const BvpSignal& pred, double label_hr_bpm, HrBand band = HrBand{});

// loss_time + loss_freq with the label's own periodogram peak as target HR.
double loss_overall(const BvpSignal& pred, const BvpSignal& label,
                    HrBand band = HrBand{});

// Peak frequency (bpm) of the zero-padded periodogram inside the band, with
// the same binning loss_freq uses.
double periodogram_peak_hr(const BvpSignal& x, HrBand band = HrBand{});

// -log softmax(logits)[target]; exposed for direct-formula checks.
double softmax_cross_entropy(const std::vector<double>& logits, std::size_t target);

}  // namespace ssdpulse
