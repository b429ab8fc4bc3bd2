#include "ssdpulse/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ssdpulse/fft.hpp"

namespace ssdpulse {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void BvpSignal::validate() const {
    if (!(fs > 0.0)) throw ArgumentError("signal fs must be > 0");
    if (samples.size() < 2) throw ArgumentError("signal needs at least 2 samples");
}

FilterCoeffs butter_bandpass_coeffs(double low_hz, double high_hz, double fs,
                                    int order) {
    if (!(fs > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) ||
        !(high_hz < fs / 2.0)) {
        throw ArgumentError("bandpass edges must satisfy 0 < low < high < fs/2, got " +
                            std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                            " at fs " + std::to_string(fs));
    }
    if (order < 1) throw ArgumentError("filter order must be >= 1");
    using cd = std::complex<double>;

    // analog Butterworth prototype: poles on the unit circle's left half
    std::vector<cd> poles;
    for (int k = 0; k < order; ++k) {
        const double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
        poles.push_back({std::cos(theta), std::sin(theta)});
    }
    double gain = 1.0;

    // pre-warped band edges for the bilinear transform
    const double fs2 = 2.0 * fs;
    const double wl = fs2 * std::tan(kPi * low_hz / fs);
    const double wh = fs2 * std::tan(kPi * high_hz / fs);
    const double bw = wh - wl;
    const double wo = std::sqrt(wl * wh);

    // lowpass -> bandpass: each pole splits in two, zeros appear at s = 0
    std::vector<cd> bp_poles;
    for (const cd& p : poles) {
        const cd ps = p * (bw / 2.0);
        const cd delta = std::sqrt(ps * ps - wo * wo);
        bp_poles.push_back(ps + delta);
        bp_poles.push_back(ps - delta);
    }
    std::vector<cd> bp_zeros(static_cast<std::size_t>(order), cd(0.0, 0.0));
    gain *= std::pow(bw, order);

    // bilinear transform z = (fs2 + s) / (fs2 - s)
    std::vector<cd> z_poles, z_zeros;
    cd num(1.0, 0.0), den(1.0, 0.0);
    for (const cd& s : bp_zeros) {
        z_zeros.push_back((fs2 + s) / (fs2 - s));
        num *= (fs2 - s);
    }
    for (const cd& s : bp_poles) {
        z_poles.push_back((fs2 + s) / (fs2 - s));
        den *= (fs2 - s);
    }
    gain *= (num / den).real();
    // degree deficit maps to zeros at z = -1
    while (z_zeros.size() < z_poles.size()) z_zeros.push_back(cd(-1.0, 0.0));

    // expand root products into real polynomials
    auto poly = [](const std::vector<cd>& roots) {
        std::vector<cd> c{cd(1.0, 0.0)};
        for (const cd& r : roots) {
            c.push_back(cd(0.0, 0.0));
            for (std::size_t i = c.size() - 1; i >= 1; --i) c[i] -= r * c[i - 1];
        }
        std::vector<double> out(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
        return out;
    };
    FilterCoeffs coeffs;
    coeffs.b = poly(z_zeros);
    for (double& v : coeffs.b) v *= gain;
    coeffs.a = poly(z_poles);
    return coeffs;
}

std::complex<double> filter_response(const FilterCoeffs& c, double f_hz, double fs) {
    const double w = 2.0 * kPi * f_hz / fs;
    using cd = std::complex<double>;
    cd num(0.0, 0.0), den(0.0, 0.0);
    for (std::size_t k = 0; k < c.b.size(); ++k) {
        num += c.b[k] * std::exp(cd(0.0, -w * static_cast<double>(k)));
    }
    for (std::size_t k = 0; k < c.a.size(); ++k) {
        den += c.a[k] * std::exp(cd(0.0, -w * static_cast<double>(k)));
    }
    return num / den;
}

namespace {

// Direct form II transposed single pass with initial state zi.
std::vector<double> lfilter(const FilterCoeffs& c, const std::vector<double>& x,
                            const std::vector<double>& zi) {
    const std::size_t n = std::max(c.a.size(), c.b.size());
    std::vector<double> b(c.b), a(c.a);
    b.resize(n, 0.0);
    a.resize(n, 0.0);
    std::vector<double> z(zi);
    z.resize(n - 1, 0.0);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yi = b[0] * x[i] + z[0];
        for (std::size_t j = 0; j + 1 < n - 1; ++j) {
            z[j] = b[j + 1] * x[i] + z[j + 1] - a[j + 1] * yi;
        }
        z[n - 2] = b[n - 1] * x[i] - a[n - 1] * yi;
        y[i] = yi;
    }
    return y;
}

// Steady-state state vector for a unit-step input: with these initial
// conditions, filtering a constant produces that constant times the DC gain
// from sample 0, suppressing the startup transient.
std::vector<double> steady_state_zi(const FilterCoeffs& c) {
    const std::size_t n = std::max(c.a.size(), c.b.size());
    std::vector<double> b(c.b), a(c.a);
    b.resize(n, 0.0);
    a.resize(n, 0.0);
    double sb = 0.0, sa = 0.0;
    for (double v : b) sb += v;
    for (double v : a) sa += v;
    const double k = sb / sa;
    std::vector<double> z(n - 1, 0.0);
    z[n - 2] = b[n - 1] - a[n - 1] * k;
    for (std::size_t j = n - 2; j >= 1; --j) {
        z[j - 1] = b[j] - a[j] * k + z[j];
    }
    return z;
}

}  // namespace

BvpSignal filtfilt(const BvpSignal& x, const FilterCoeffs& c) {
    x.validate();
    if (c.a.empty() || c.b.empty() || c.a[0] != 1.0) {
        throw ArgumentError("filtfilt: coefficients must be normalized (a[0] == 1)");
    }
    const std::int64_t pad =
        3 * (static_cast<std::int64_t>(std::max(c.a.size(), c.b.size())) - 1);
    const std::int64_t n = static_cast<std::int64_t>(x.samples.size());
    if (n <= pad) {
        throw ArgumentError("filtfilt: signal length " + std::to_string(n) +
                            " must exceed padding " + std::to_string(pad));
    }
    // odd reflection about both end samples
    std::vector<double> ext(static_cast<std::size_t>(n + 2 * pad));
    for (std::int64_t i = 0; i < pad; ++i) {
        ext[static_cast<std::size_t>(i)] =
            2.0 * x.samples[0] - x.samples[static_cast<std::size_t>(pad - i)];
    }
    for (std::int64_t i = 0; i < n; ++i) {
        ext[static_cast<std::size_t>(pad + i)] = x.samples[static_cast<std::size_t>(i)];
    }
    for (std::int64_t i = 0; i < pad; ++i) {
        ext[static_cast<std::size_t>(pad + n + i)] =
            2.0 * x.samples[static_cast<std::size_t>(n - 1)] -
            x.samples[static_cast<std::size_t>(n - 2 - i)];
    }

    const std::vector<double> zi = steady_state_zi(c);
    auto scaled = [&zi](double v) {
        std::vector<double> z(zi);
        for (double& e : z) e *= v;
        return z;
    };
    std::vector<double> y = lfilter(c, ext, scaled(ext.front()));
    std::reverse(y.begin(), y.end());
    y = lfilter(c, y, scaled(y.front()));
    std::reverse(y.begin(), y.end());

    BvpSignal out;
    out.fs = x.fs;
    out.samples.assign(y.begin() + pad, y.begin() + pad + n);
    return out;
}

PsdEstimate welch_psd(const BvpSignal& x, std::int64_t nperseg, double overlap) {
    x.validate();
    const std::int64_t n = static_cast<std::int64_t>(x.samples.size());
    if (nperseg < 8) throw ArgumentError("welch: nperseg must be >= 8");
    if (nperseg > n) {
        throw ArgumentError("welch: nperseg " + std::to_string(nperseg) +
                            " exceeds signal length " + std::to_string(n));
    }
    if (!(overlap >= 0.0) || !(overlap < 1.0)) {
        throw ArgumentError("welch: overlap must lie in [0, 1)");
    }
    const std::int64_t hop = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(
               static_cast<double>(nperseg) * (1.0 - overlap))));
    const std::int64_t nseg = (n - nperseg) / hop + 1;

    // periodic Hann window
    std::vector<double> win(static_cast<std::size_t>(nperseg));
    double wss = 0.0;  // sum of squared window values
    for (std::int64_t i = 0; i < nperseg; ++i) {
        const double w =
            0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                  static_cast<double>(nperseg)));
        win[static_cast<std::size_t>(i)] = w;
        wss += w * w;
    }
    const std::size_t nfft = std::max<std::size_t>(
        2048, fftcore::next_pow2(static_cast<std::size_t>(nperseg)));
    const std::size_t bins = nfft / 2 + 1;
    const double scale = 1.0 / (x.fs * wss);

    std::vector<double> acc(bins, 0.0);
    std::vector<std::complex<double>> buf(nfft);
    for (std::int64_t s = 0; s < nseg; ++s) {
        const double* seg = x.samples.data() + s * hop;
        double mean = 0.0;
        for (std::int64_t i = 0; i < nperseg; ++i) mean += seg[i];
        mean /= static_cast<double>(nperseg);
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::int64_t i = 0; i < nperseg; ++i) {
            buf[static_cast<std::size_t>(i)] = {
                (seg[i] - mean) * win[static_cast<std::size_t>(i)], 0.0};
        }
        fftcore::transform(buf, false);
        for (std::size_t j = 0; j < bins; ++j) {
            acc[j] += std::norm(buf[j]) * scale;
        }
    }
    PsdEstimate psd;
    psd.freqs.resize(bins);
    psd.power.resize(bins);
    for (std::size_t j = 0; j < bins; ++j) {
        psd.freqs[j] = static_cast<double>(j) * x.fs / static_cast<double>(nfft);
        double p = acc[j] / static_cast<double>(nseg);
        if (j != 0 && j != bins - 1) p *= 2.0;  // fold the negative frequencies
        psd.power[j] = p;
    }
    return psd;
}

double estimate_hr_bpm(const PsdEstimate& psd, HrBand band) {
    if (psd.freqs.size() != psd.power.size() || psd.freqs.empty()) {
        throw ArgumentError("estimate_hr: malformed psd");
    }
    double best_f = -1.0, best_p = -1.0;
    for (std::size_t j = 0; j < psd.freqs.size(); ++j) {
        const double f = psd.freqs[j];
        if (f < band.lo_hz || f > band.hi_hz) continue;
        if (psd.power[j] > best_p) {  // strict: ties keep the lower frequency
            best_p = psd.power[j];
            best_f = f;
        }
    }
    if (best_f < 0.0) {
        throw ArgumentError("estimate_hr: band [" + std::to_string(band.lo_hz) + ", " +
                            std::to_string(band.hi_hz) +
                            "] contains no psd bins");
    }
    return 60.0 * best_f;
}

double snr_db(const BvpSignal& pred, double gt_hr_bpm) {
    const double f0 = gt_hr_bpm / 60.0;
    if (f0 < kSnrNoiseLoHz || f0 > kSnrNoiseHiHz) {
        throw ArgumentError("snr: ground-truth frequency " + std::to_string(f0) +
                            " Hz outside the noise band");
    }
    // single full-length segment: the +-0.1 Hz windows need the finest
    // resolution available, and segment averaging would smear the peak
    const auto nperseg = static_cast<std::int64_t>(pred.samples.size());
    PsdEstimate psd = welch_psd(pred, nperseg);
    double sig = 0.0, noise = 0.0;
    for (std::size_t j = 0; j < psd.freqs.size(); ++j) {
        const double f = psd.freqs[j];
        if (f < kSnrNoiseLoHz || f > kSnrNoiseHiHz) continue;
        const bool in_window = std::abs(f - f0) <= kSnrWindowHz ||
                               std::abs(f - 2.0 * f0) <= kSnrWindowHz;
        if (in_window) {
            sig += psd.power[j];
        } else {
            noise += psd.power[j];
        }
    }
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(sig / noise);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ArgumentError("pearson: need two equal-length vectors of size >= 2");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw CorrelationError("pearson: undefined for zero-variance input");
    }
    // Cauchy-Schwarz equality cases resolve exactly; identical sums mean the
    // vectors are perfectly (anti)correlated.
    if (sxy == sxx && sxy == syy) return 1.0;
    if (sxy == -sxx && sxx == syy) return -1.0;
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

MetricsReport metrics_report(const std::vector<double>& pred_hrs,
                             const std::vector<double>& gt_hrs,
                             const std::vector<double>& snrs) {
    if (pred_hrs.empty() || pred_hrs.size() != gt_hrs.size() ||
        snrs.size() != pred_hrs.size()) {
        throw ArgumentError("metrics: pred/gt/snr lengths must match and be > 0");
    }
    const double n = static_cast<double>(pred_hrs.size());
    double sum_abs = 0.0, sum_sq = 0.0, sum_ape = 0.0, sum_snr = 0.0;
    for (std::size_t i = 0; i < pred_hrs.size(); ++i) {
        if (gt_hrs[i] == 0.0) {
            throw ArgumentError("metrics: zero ground-truth HR makes MAPE undefined");
        }
        const double d = pred_hrs[i] - gt_hrs[i];
        sum_abs += std::abs(d);
        sum_sq += d * d;
        sum_ape += std::abs(d) / std::abs(gt_hrs[i]);
        sum_snr += snrs[i];
    }
    MetricsReport r;
    r.mae = sum_abs / n;
    r.rmse = std::sqrt(sum_sq / n);
    r.mape = sum_ape / n * 100.0;
    // Pearson over a single pair is undefined; report 0 rather than failing
    // the whole report. Zero-variance pairs still raise CorrelationError.
    r.pearson_r = pred_hrs.size() < 2 ? 0.0 : pearson(pred_hrs, gt_hrs);
    r.snr_db = sum_snr / n;
    return r;
}

std::string format_metrics_row(const MetricsReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "MAE %.2f / RMSE %.2f / MAPE %.2f / r %.2f / SNR %.2f", r.mae,
                  r.rmse, r.mape, r.pearson_r, r.snr_db);
    return buf;
}

double hr_from_signal(const BvpSignal& x, HrBand band) {
    FilterCoeffs c = butter_bandpass_coeffs(band.lo_hz, band.hi_hz, x.fs);
    BvpSignal filtered = filtfilt(x, c);
    const std::int64_t nperseg =
        std::min<std::int64_t>(256, static_cast<std::int64_t>(filtered.samples.size()));
    return estimate_hr_bpm(welch_psd(filtered, nperseg), band);
}

void write_waveform_csv(const std::string& path, const BvpSignal& x) {
    std::ostringstream os;
    os << "time,value\n";
    char buf[80];
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.9g\n",
                      static_cast<double>(i) / x.fs, x.samples[i]);
        os << buf;
    }
    atomic_write_file(path, os.str());
}

BvpSignal read_waveform_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (line.rfind("time,", 0) != 0) {
        throw FormatError(path + ": expected 'time,value' header, got '" + line + "'");
    }
    std::vector<double> times, values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected 'time,value'");
        }
        try {
            times.push_back(std::stod(line.substr(0, comma)));
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": non-numeric row");
        }
    }
    if (values.size() < 2) throw FormatError(path + ": fewer than 2 samples");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw FormatError(path + ": non-increasing time column");
    BvpSignal sig;
    sig.samples = std::move(values);
    sig.fs = 1.0 / dt;
    return sig;
}

void write_per_clip_csv(const std::string& path, const std::vector<ClipResult>& rows) {
    std::ostringstream os;
    os << "clip_id,gt_hr,pred_hr,snr_db\n";
    char buf[120];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f\n", r.clip_id.c_str(),
                      r.gt_hr, r.pred_hr, r.snr_db);
        os << buf;
    }
    atomic_write_file(path, os.str());
}

void write_summary_json(const std::string& path, const MetricsReport& r) {
    nlohmann::json j;
    auto put = [&j](const char* key, double v) {
        if (std::isfinite(v)) {
            j[key] = v;
        } else {
            j[key] = v > 0 ? "inf" : "-inf";
        }
    };
    put("mae", r.mae);
    put("rmse", r.rmse);
    put("mape", r.mape);
    put("pearson_r", r.pearson_r);
    put("snr_db", r.snr_db);
    atomic_write_file(path, j.dump(2) + "\n");
}

void write_bland_altman_csv(const std::string& path,
                            const std::vector<ClipResult>& rows) {
    std::ostringstream os;
    os << "mean_hr,diff_hr\n";
    char buf[80];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f\n", 0.5 * (r.gt_hr + r.pred_hr),
                      r.pred_hr - r.gt_hr);
        os << buf;
    }
    atomic_write_file(path, os.str());
}

}  // namespace ssdpulse
