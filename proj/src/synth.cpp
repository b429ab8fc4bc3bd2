#include "ssdpulse/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ssdpulse/rng.hpp"

namespace ssdpulse {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHarmonicPhase = 0.25 * kPi;

// face/background palette (RGB), chosen away from the clamp edges
constexpr float kFaceR = 0.72f, kFaceG = 0.55f, kFaceB = 0.45f;
constexpr float kBackR = 0.25f, kBackG = 0.22f, kBackB = 0.20f;

// jitter path frequencies (Hz), far below the pulse band
constexpr double kJitterFx = 0.23;
constexpr double kJitterFy = 0.31;

// substream(seed, idx) is the idx-th output of splitmix64 started at
// `seed`; used to give the BVP noise and every frame an independent,
// platform-stable stream. idx 0: BVP noise; idx 1+t: frame t pixels.
std::uint64_t substream(std::uint64_t seed, std::uint64_t idx) {
    std::uint64_t state = seed + idx * 0x9e3779b97f4a7c15ull;
    return splitmix64_next(state);
}

}  // namespace

std::int64_t SynthSpec::frame_count() const {
    return static_cast<std::int64_t>(std::llround(duration_s * fps));
}

void SynthSpec::validate() const {
    if (!(hr_bpm >= 45.0 && hr_bpm <= 150.0)) {
        throw ArgumentError("synth: hr_bpm must lie in [45, 150], got " +
                            std::to_string(hr_bpm));
    }
    if (!(fps > 0.0)) throw ArgumentError("synth: fps must be > 0");
    if (frame_count() < 4) {
        throw ArgumentError("synth: duration too short, need at least 4 frames");
    }
    if (!(noise_std >= 0.0)) throw ArgumentError("synth: noise_std must be >= 0");
    if (!(motion_amp >= 0.0)) throw ArgumentError("synth: motion_amp must be >= 0");
    if (!(harmonic_ratio >= 0.0 && harmonic_ratio <= 1.0)) {
        throw ArgumentError("synth: harmonic_ratio must lie in [0, 1]");
    }
    if (!(modulation_depth >= 0.0)) {
        throw ArgumentError("synth: modulation_depth must be >= 0");
    }
    if (height < 64 || width < 64) {
        throw ArgumentError("synth: frame dims must be >= 64");
    }
}

namespace {

std::vector<double> clean_bvp(const SynthSpec& spec) {
    const std::int64_t n = spec.frame_count();
    const double f = spec.hr_bpm / 60.0;
    std::vector<double> s(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.fps;
        s[static_cast<std::size_t>(i)] =
            std::sin(2.0 * kPi * f * t) +
            spec.harmonic_ratio * std::sin(4.0 * kPi * f * t + kHarmonicPhase);
    }
    return s;
}

}  // namespace

BvpSignal gen_bvp(const SynthSpec& spec) {
    spec.validate();
    BvpSignal out;
    out.fs = spec.fps;
    out.samples = clean_bvp(spec);
    if (spec.noise_std > 0.0) {
        Rng rng(substream(spec.seed, 0));
        for (double& v : out.samples) v += spec.noise_std * rng.gaussian();
    }
    return out;
}

bool in_face_region(std::int64_t h, std::int64_t w, std::int64_t y, std::int64_t x) {
    const double cy = 0.5 * static_cast<double>(h - 1);
    const double cx = 0.5 * static_cast<double>(w - 1);
    const double ry = 0.34 * static_cast<double>(h);
    const double rx = 0.28 * static_cast<double>(w);
    const double dy = (static_cast<double>(y) - cy) / ry;
    const double dx = (static_cast<double>(x) - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
}

SynthClip gen_video(const SynthSpec& spec) {
    spec.validate();
    const std::int64_t t = spec.frame_count(), h = spec.height, w = spec.width;

    SynthClip out;
    out.label.fs = spec.fps;
    out.label.samples = clean_bvp(spec);

    out.clip.fps = spec.fps;
    out.clip.data = Tensor({3, t, h, w});
    Tensor& vid = out.clip.data;
    const double px_noise = 0.01 * spec.noise_std;

#pragma omp parallel for schedule(static)
    for (std::int64_t ti = 0; ti < t; ++ti) {
        // slow rigid drift of the face center
        const double ts = static_cast<double>(ti) / spec.fps;
        const std::int64_t jx = static_cast<std::int64_t>(
            std::llround(spec.motion_amp * std::sin(2.0 * kPi * kJitterFx * ts)));
        const std::int64_t jy = static_cast<std::int64_t>(
            std::llround(spec.motion_amp * std::cos(2.0 * kPi * kJitterFy * ts)));
        const float g_face = static_cast<float>(
            kFaceG +
            spec.modulation_depth * out.label.samples[static_cast<std::size_t>(ti)]);
        Rng rng(substream(spec.seed, 1 + static_cast<std::uint64_t>(ti)));
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                const bool face = in_face_region(h, w, y - jy, x - jx);
                float r = face ? kFaceR : kBackR;
                float g = face ? g_face : kBackG;
                float b = face ? kFaceB : kBackB;
                if (px_noise > 0.0) {
                    r += static_cast<float>(px_noise * rng.gaussian());
                    g += static_cast<float>(px_noise * rng.gaussian());
                    b += static_cast<float>(px_noise * rng.gaussian());
                }
                vid.at(0, ti, y, x) = std::clamp(r, 0.0f, 1.0f);
                vid.at(1, ti, y, x) = std::clamp(g, 0.0f, 1.0f);
                vid.at(2, ti, y, x) = std::clamp(b, 0.0f, 1.0f);
            }
        }
    }
    return out;
}

BvpSignal region_mean_trace(const VideoClip& clip) {
    if (clip.data.rank() != 4 || clip.data.dim(0) != 3) {
        throw ShapeError("region_mean_trace: clip must be [3xTxHxW], got " +
                         clip.data.shape_str());
    }
    const std::int64_t t = clip.data.dim(1), h = clip.data.dim(2), w = clip.data.dim(3);
    BvpSignal trace;
    trace.fs = clip.fps;
    trace.samples.resize(static_cast<std::size_t>(t));
#pragma omp parallel for schedule(static)
    for (std::int64_t ti = 0; ti < t; ++ti) {
        double acc = 0.0;
        std::int64_t count = 0;
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                if (!in_face_region(h, w, y, x)) continue;
                acc += clip.data.at(1, ti, y, x);
                ++count;
            }
        }
        trace.samples[static_cast<std::size_t>(ti)] =
            acc / static_cast<double>(count);
    }
    return trace;
}

}  // namespace ssdpulse
