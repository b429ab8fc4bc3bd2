#pragma once

#include <cstdint>

#include "ssdpulse/dsp.hpp"
#include "ssdpulse/stem.hpp"

namespace ssdpulse {

struct SynthSpec {
    double hr_bpm = 72.0;
    double fps = 30.0;
    double duration_s = 10.0;
    double noise_std = 0.0;       // BVP noise / pixel sensor noise level
    double motion_amp = 0.0;      // rigid jitter amplitude, pixels
    double harmonic_ratio = 0.3;  // first-harmonic amplitude vs fundamental
    double modulation_depth = 0.01;  // green-channel swing per unit BVP
    std::int64_t height = 128;
    std::int64_t width = 128;
    std::uint64_t seed = 1;

    std::int64_t frame_count() const;
    void validate() const;
};

// s(t) = sin(2 pi f t) + harmonic_ratio * sin(4 pi f t + phase) + noise,
// f = hr_bpm / 60, noise ~ N(0, noise_std^2) from the seeded generator.
BvpSignal gen_bvp(const SynthSpec& spec);

struct SynthClip {
    VideoClip clip;
    BvpSignal label;  // clean BVP (no noise term)
};

// Static face-on-background image; the elliptical face region's green
// channel swings with modulation_depth * clean BVP; optional rigid jitter;
// per-pixel gaussian sensor noise of std 0.01 * noise_std; values clamped
// to [0,1].
SynthClip gen_video(const SynthSpec& spec);

// True where (y,x) falls inside the standard face ellipse for an HxW frame.
bool in_face_region(std::int64_t h, std::int64_t w, std::int64_t y, std::int64_t x);

// Spatial mean of the green channel over the face ellipse, per frame.
BvpSignal region_mean_trace(const VideoClip& clip);

}  // namespace ssdpulse
