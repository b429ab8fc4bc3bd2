#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ssdpulse/tensor.hpp"

namespace ssdpulse {

// Thrown when a correlation is requested on zero-variance input.
struct CorrelationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BvpSignal {
    std::vector<double> samples;
    double fs = 0.0;  // Hz
    void validate() const;
};

struct HrBand {
    double lo_hz = 0.75;
    double hi_hz = 2.5;
};

// Noise reference band for SNR (wider than the HR search band).
inline constexpr double kSnrNoiseLoHz = 0.6;
inline constexpr double kSnrNoiseHiHz = 3.3;
inline constexpr double kSnrWindowHz = 0.1;

struct FilterCoeffs {
    std::vector<double> b;  // numerator, same length as a
    std::vector<double> a;  // denominator, a[0] == 1
};

// Butterworth bandpass: analog prototype -> band transform -> bilinear with
// frequency pre-warping. order is the prototype order (2 doubles to 4).
FilterCoeffs butter_bandpass_coeffs(double low_hz, double high_hz, double fs,
                                    int order = 2);

// H(e^{j 2 pi f / fs}) of the single filter pass.
std::complex<double> filter_response(const FilterCoeffs& c, double f_hz, double fs);

// Zero-phase forward-backward filtering with odd-reflection edge padding of
// 3*(max(len(a),len(b))-1) samples and steady-state initial conditions.
BvpSignal filtfilt(const BvpSignal& x, const FilterCoeffs& c);

struct PsdEstimate {
    std::vector<double> freqs;  // Hz, ascending
    std::vector<double> power;  // density, >= 0
};

// Hann-windowed, mean-detrended, overlapping segments zero-padded to at
// least 2048 FFT points; one-sided density averaged over segments.
PsdEstimate welch_psd(const BvpSignal& x, std::int64_t nperseg,
                      double overlap = 0.5);

// 60 * argmax frequency inside [band.lo_hz, band.hi_hz]; ties toward the
// lower frequency.
double estimate_hr_bpm(const PsdEstimate& psd, HrBand band);

// Ratio (dB) of PSD mass within +-0.1 Hz of the ground-truth frequency and
// its first harmonic to the rest of the [0.6, 3.3] Hz noise band. Returns
// +inf when the noise mass is zero.
double snr_db(const BvpSignal& pred, double gt_hr_bpm);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;
    double pearson_r = 0.0;
    double snr_db = 0.0;
};

MetricsReport metrics_report(const std::vector<double>& pred_hrs,
                             const std::vector<double>& gt_hrs,
                             const std::vector<double>& snrs);

// "MAE 2.84 / RMSE 6.41 / MAPE 3.04 / r 0.88 / SNR 5.20"
std::string format_metrics_row(const MetricsReport& r);

// Full evaluation-side pipeline: filtfilt(band) -> Welch -> band peak.
double hr_from_signal(const BvpSignal& x, HrBand band);

struct ClipResult {
    std::string clip_id;
    double gt_hr = 0.0;
    double pred_hr = 0.0;
    double snr_db = 0.0;
};

void write_waveform_csv(const std::string& path, const BvpSignal& x);
BvpSignal read_waveform_csv(const std::string& path);
void write_per_clip_csv(const std::string& path, const std::vector<ClipResult>& rows);
void write_summary_json(const std::string& path, const MetricsReport& r);
void write_bland_altman_csv(const std::string& path,
                            const std::vector<ClipResult>& rows);

}  // namespace ssdpulse
