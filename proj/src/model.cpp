#include "ssdpulse/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "ssdpulse/fft.hpp"
#include "ssdpulse/kernels.hpp"
#include "ssdpulse/rng.hpp"

namespace ssdpulse {

SsdConfig PhysMambaConfig::ssd() const {
    SsdConfig c;
    c.d_model = d_model;
    c.d_state = d_state;
    c.d_head = d_head;
    c.n_heads = n_heads;
    c.chunk_size = chunk_size;
    return c;
}

void PhysMambaConfig::validate() const {
    ssd().validate();
    if (clip_len < 4) throw ArgumentError("config: clip_len must be >= 4");
    if (input_h < 64 || input_w < 64 || input_h % 8 != 0 || input_w % 8 != 0) {
        throw ArgumentError("config: input dims must be >= 64 and divisible by 8");
    }
    if (!(hr_band_lo_hz > 0.0) || !(hr_band_lo_hz < hr_band_hi_hz)) {
        throw ArgumentError("config: hr band must satisfy 0 < lo < hi");
    }
    if (stem_mid_a < 1 || stem_mid_b < 1) {
        throw ArgumentError("config: stem widths must be >= 1");
    }
    if (predictor_kernel < 1 || predictor_kernel % 2 == 0) {
        throw ArgumentError("config: predictor kernel must be odd and >= 1");
    }
    if (!(bn_eps > 0.0)) throw ArgumentError("config: bn_eps must be > 0");
}

namespace {

// Fixed name -> tensor table; also the draw order for init and the manifest
// order for checkpoints.
std::vector<std::pair<std::string, Tensor*>> tensor_index(PhysMambaWeights& w) {
    std::vector<std::pair<std::string, Tensor*>> idx;
    auto block = [&idx](const std::string& prefix, StemBlockParams& b) {
        idx.emplace_back(prefix + ".conv_w", &b.conv_w);
        idx.emplace_back(prefix + ".bn_mean", &b.bn_mean);
        idx.emplace_back(prefix + ".bn_var", &b.bn_var);
        idx.emplace_back(prefix + ".bn_gamma", &b.bn_gamma);
        idx.emplace_back(prefix + ".bn_beta", &b.bn_beta);
    };
    block("stem.s1_rgb_a", w.stem.s1_rgb_a);
    block("stem.s1_rgb_b", w.stem.s1_rgb_b);
    block("stem.s1_diff_a", w.stem.s1_diff_a);
    block("stem.s1_diff_b", w.stem.s1_diff_b);
    block("stem.s2", w.stem.s2);
    idx.emplace_back("stem.attn_conv_w", &w.stem.attn_conv_w);
    auto ssd_block = [&idx](const std::string& prefix, SsdBlockParams& b) {
        idx.emplace_back(prefix + ".w_q", &b.w_q);
        idx.emplace_back(prefix + ".w_k", &b.w_k);
        idx.emplace_back(prefix + ".w_v", &b.w_v);
        idx.emplace_back(prefix + ".w_out", &b.w_out);
        idx.emplace_back(prefix + ".w_dt", &b.w_dt);
        idx.emplace_back(prefix + ".a_log", &b.a_log);
        idx.emplace_back(prefix + ".dt_bias", &b.dt_bias);
    };
    ssd_block("sa", w.sa_block);
    ssd_block("ca", w.ca_block);
    idx.emplace_back("fdf_sa.w_re", &w.fdf_sa.w_re);
    idx.emplace_back("fdf_sa.w_im", &w.fdf_sa.w_im);
    idx.emplace_back("fdf_ca.w_re", &w.fdf_ca.w_re);
    idx.emplace_back("fdf_ca.w_im", &w.fdf_ca.w_im);
    idx.emplace_back("predictor.w", &w.predictor_w);
    return idx;
}

// Expected shape per tensor name, derived from the config.
std::vector<std::pair<std::string, std::vector<std::int64_t>>> expected_shapes(
    const PhysMambaConfig& cfg) {
    std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
    auto block = [&out](const std::string& prefix, std::int64_t cin, std::int64_t cout) {
        out.emplace_back(prefix + ".conv_w", std::vector<std::int64_t>{cout, cin, 7, 7});
        for (const char* s : {".bn_mean", ".bn_var", ".bn_gamma", ".bn_beta"}) {
            out.emplace_back(prefix + s, std::vector<std::int64_t>{cout});
        }
    };
    const std::int64_t d = cfg.d_model, h = cfg.n_heads;
    block("stem.s1_rgb_a", 3, cfg.stem_mid_a);
    block("stem.s1_rgb_b", cfg.stem_mid_a, cfg.stem_mid_b);
    block("stem.s1_diff_a", 3, cfg.stem_mid_a);
    block("stem.s1_diff_b", cfg.stem_mid_a, cfg.stem_mid_b);
    block("stem.s2", cfg.stem_mid_b, d);
    out.emplace_back("stem.attn_conv_w", std::vector<std::int64_t>{1, d, 5, 5});
    auto ssd_block = [&out, d, h, &cfg](const std::string& prefix) {
        out.emplace_back(prefix + ".w_q", std::vector<std::int64_t>{d, cfg.d_state});
        out.emplace_back(prefix + ".w_k", std::vector<std::int64_t>{d, cfg.d_state});
        out.emplace_back(prefix + ".w_v", std::vector<std::int64_t>{d, d});
        out.emplace_back(prefix + ".w_out", std::vector<std::int64_t>{d, d});
        out.emplace_back(prefix + ".w_dt", std::vector<std::int64_t>{d, h});
        out.emplace_back(prefix + ".a_log", std::vector<std::int64_t>{h});
        out.emplace_back(prefix + ".dt_bias", std::vector<std::int64_t>{h});
    };
    ssd_block("sa");
    ssd_block("ca");
    for (const char* s : {"fdf_sa.w_re", "fdf_sa.w_im", "fdf_ca.w_re", "fdf_ca.w_im"}) {
        out.emplace_back(s, std::vector<std::int64_t>{d, d});
    }
    out.emplace_back("predictor.w",
                     std::vector<std::int64_t>{2, 2 * d, cfg.predictor_kernel});
    return out;
}

std::int64_t fan_in_of(const Tensor& t) {
    // matrices multiply as x.W, so rows are the fan-in; conv kernels use
    // cin * kh * kw
    if (t.rank() == 2) return t.dim(0);
    std::int64_t f = 1;
    for (std::int64_t i = 1; i < t.rank(); ++i) f *= t.dim(i);
    return f;
}

}  // namespace

PhysMambaWeights init_weights(const PhysMambaConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PhysMambaWeights w;
    auto shapes = expected_shapes(cfg);
    auto idx = tensor_index(w);
    Rng rng(seed);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        Tensor& t = *idx[i].second;
        t = Tensor(shapes[i].second);
        const std::string& name = idx[i].first;
        if (name.find(".bn_var") != std::string::npos ||
            name.find(".bn_gamma") != std::string::npos) {
            for (std::int64_t j = 0; j < t.numel(); ++j) t.data()[j] = 1.0f;
        } else if (name.find(".bn_mean") != std::string::npos ||
                   name.find(".bn_beta") != std::string::npos) {
            // stay zero
        } else if (name.find(".a_log") != std::string::npos) {
            // decay rates exp(a_log) spread over [0.5, 2)
            for (std::int64_t j = 0; j < t.numel(); ++j) {
                t.data()[j] = static_cast<float>(
                    rng.uniform(std::log(0.5), std::log(2.0)));
            }
        } else if (name.find(".dt_bias") != std::string::npos) {
            for (std::int64_t j = 0; j < t.numel(); ++j) {
                t.data()[j] = static_cast<float>(rng.uniform(-1.0, 1.0));
            }
        } else {
            const double bound =
                std::sqrt(6.0 / static_cast<double>(fan_in_of(t)));
            for (std::int64_t j = 0; j < t.numel(); ++j) {
                t.data()[j] = static_cast<float>(rng.uniform(-bound, bound));
            }
        }
    }
    w.stem.s1_rgb_a.bn_eps = cfg.bn_eps;
    w.stem.s1_rgb_b.bn_eps = cfg.bn_eps;
    w.stem.s1_diff_a.bn_eps = cfg.bn_eps;
    w.stem.s1_diff_b.bn_eps = cfg.bn_eps;
    w.stem.s2.bn_eps = cfg.bn_eps;
    w.stem.mask_sigmoid = cfg.mask_sigmoid;
    return w;
}

void validate_weights(const PhysMambaWeights& w, const PhysMambaConfig& cfg) {
    cfg.validate();
    auto& mut = const_cast<PhysMambaWeights&>(w);
    auto idx = tensor_index(mut);
    auto shapes = expected_shapes(cfg);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i].second->shape() != shapes[i].second) {
            throw ShapeError("weights: " + idx[i].first + " has shape " +
                             idx[i].second->shape_str() + ", config expects " +
                             shape_to_string(shapes[i].second));
        }
    }
}

namespace {

Tensor slice_rows(const Tensor& x, std::int64_t start, std::int64_t len) {
    const std::int64_t c = x.dim(1);
    Tensor out({len, c});
    for (std::int64_t i = 0; i < len; ++i) {
        for (std::int64_t j = 0; j < c; ++j) out.at(i, j) = x.at(start + i, j);
    }
    return out;
}

void paste_rows(Tensor& dst, std::int64_t start, const Tensor& src) {
    const std::int64_t c = dst.dim(1);
    for (std::int64_t i = 0; i < src.dim(0); ++i) {
        for (std::int64_t j = 0; j < c; ++j) dst.at(start + i, j) = src.at(i, j);
    }
}

}  // namespace

ForwardDetail forward_detail(const VideoClip& clip, const PhysMambaWeights& w,
                             const PhysMambaConfig& cfg) {
    validate_weights(w, cfg);
    clip.validate();
    if (clip.frames() != cfg.clip_len || clip.height() != cfg.input_h ||
        clip.width() != cfg.input_w) {
        throw ShapeError("forward: clip " + clip.data.shape_str() +
                         " does not match config [3x" + std::to_string(cfg.clip_len) +
                         "x" + std::to_string(cfg.input_h) + "x" +
                         std::to_string(cfg.input_w) + "]");
    }

    ForwardDetail out;
    StemOutput stem_out = frame_stem_forward(clip, w.stem);
    out.dropped_trailing_frame = stem_out.dropped_trailing_frame;
    out.tokens = std::move(stem_out.tokens);

    const SsdConfig scfg = cfg.ssd();
    MultiTemporalViews views = multi_temporal_views(out.tokens);
    const std::int64_t tp = views.views[0].dim(0);

    // self pathway per view/segment, remembering the queries for the cross
    // pathway (scan state resets at every segment boundary)
    MultiTemporalViews sa_proc = views;
    std::array<std::vector<Tensor>, 4> shared_q;
    for (int k = 0; k < 4; ++k) {
        const std::int64_t seg = views.segment_len[k];
        Tensor out_k({tp, cfg.d_model});
        for (std::int64_t s = 0; s < tp; s += seg) {
            PathwayResult pr =
                sa_pathway(slice_rows(views.views[k], s, seg), w.sa_block, scfg);
            paste_rows(out_k, s, pr.y);
            shared_q[k].push_back(std::move(pr.q));
        }
        sa_proc.views[k] = std::move(out_k);
    }
    Tensor sa_seq = recombine_views(sa_proc);
    if (views.padded) sa_seq = slice_rows(sa_seq, 0, views.original_len);
    out.x_sa = fdf_forward(sa_seq, w.fdf_sa);

    // cross pathway: own keys/values/decay, queries injected per segment
    MultiTemporalViews ca_proc = views;
    for (int k = 0; k < 4; ++k) {
        const std::int64_t seg = views.segment_len[k];
        Tensor out_k({tp, cfg.d_model});
        std::size_t si = 0;
        for (std::int64_t s = 0; s < tp; s += seg, ++si) {
            Tensor y = ca_pathway(slice_rows(views.views[k], s, seg),
                                  shared_q[k][si], w.ca_block, scfg);
            paste_rows(out_k, s, y);
        }
        ca_proc.views[k] = std::move(out_k);
    }
    Tensor ca_seq = recombine_views(ca_proc);
    if (views.padded) ca_seq = slice_rows(ca_seq, 0, views.original_len);
    out.x_ca = fdf_forward(ca_seq, w.fdf_ca);

    // channel fusion, cross pathway first
    const std::int64_t tlen = out.x_ca.dim(0), d = cfg.d_model;
    out.fusion = Tensor({tlen, 2 * d});
    for (std::int64_t i = 0; i < tlen; ++i) {
        for (std::int64_t j = 0; j < d; ++j) {
            out.fusion.at(i, j) = out.x_ca.at(i, j);
            out.fusion.at(i, d + j) = out.x_sa.at(i, j);
        }
    }

    // predictor: 1-D conv over time, two output channels interleaved back to
    // the full clip rate
    Tensor pin({2 * d, tlen});
    for (std::int64_t i = 0; i < tlen; ++i) {
        for (std::int64_t j = 0; j < 2 * d; ++j) pin.at(j, i) = out.fusion.at(i, j);
    }
    Tensor pred2 = conv1d(pin, w.predictor_w, (cfg.predictor_kernel - 1) / 2);

    out.signal.fs = clip.fps;
    out.signal.samples.resize(static_cast<std::size_t>(2 * tlen));
    for (std::int64_t i = 0; i < tlen; ++i) {
        out.signal.samples[static_cast<std::size_t>(2 * i)] = pred2.at(0, i);
        out.signal.samples[static_cast<std::size_t>(2 * i + 1)] = pred2.at(1, i);
    }
    return out;
}

BvpSignal forward(const VideoClip& clip, const PhysMambaWeights& w,
                  const PhysMambaConfig& cfg) {
    return forward_detail(clip, w, cfg).signal;
}

// ---- checkpoint I/O ----

namespace {

constexpr const char* kCheckpointFormat = "ssd-pulse-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json config_to_json(const PhysMambaConfig& c) {
    return nlohmann::json{{"d_model", c.d_model},
                          {"d_state", c.d_state},
                          {"d_head", c.d_head},
                          {"n_heads", c.n_heads},
                          {"chunk_size", c.chunk_size},
                          {"clip_len", c.clip_len},
                          {"input_h", c.input_h},
                          {"input_w", c.input_w},
                          {"hr_band_lo_hz", c.hr_band_lo_hz},
                          {"hr_band_hi_hz", c.hr_band_hi_hz},
                          {"stem_mid_a", c.stem_mid_a},
                          {"stem_mid_b", c.stem_mid_b},
                          {"predictor_kernel", c.predictor_kernel},
                          {"mask_sigmoid", c.mask_sigmoid},
                          {"bn_eps", c.bn_eps}};
}

PhysMambaConfig config_from_json(const nlohmann::json& j) {
    PhysMambaConfig c;
    try {
        c.d_model = j.at("d_model").get<std::int64_t>();
        c.d_state = j.at("d_state").get<std::int64_t>();
        c.d_head = j.at("d_head").get<std::int64_t>();
        c.n_heads = j.at("n_heads").get<std::int64_t>();
        c.chunk_size = j.at("chunk_size").get<std::int64_t>();
        c.clip_len = j.at("clip_len").get<std::int64_t>();
        c.input_h = j.at("input_h").get<std::int64_t>();
        c.input_w = j.at("input_w").get<std::int64_t>();
        c.hr_band_lo_hz = j.at("hr_band_lo_hz").get<double>();
        c.hr_band_hi_hz = j.at("hr_band_hi_hz").get<double>();
        c.stem_mid_a = j.at("stem_mid_a").get<std::int64_t>();
        c.stem_mid_b = j.at("stem_mid_b").get<std::int64_t>();
        c.predictor_kernel = j.at("predictor_kernel").get<std::int64_t>();
        c.mask_sigmoid = j.at("mask_sigmoid").get<bool>();
        c.bn_eps = j.at("bn_eps").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest config: ") + e.what());
    }
    return c;
}

std::string blob_filename(const std::string& tensor_name) {
    return tensor_name + ".ptnsr";
}

}  // namespace

void save_checkpoint(const std::string& dir, const PhysMambaWeights& w,
                     const PhysMambaConfig& cfg) {
    validate_weights(w, cfg);
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint dir " + dir + ": " + ec.message());

    auto& mut = const_cast<PhysMambaWeights&>(w);
    auto idx = tensor_index(mut);
    nlohmann::json manifest;
    manifest["format"] = kCheckpointFormat;
    manifest["version"] = kCheckpointVersion;
    manifest["config"] = config_to_json(cfg);
    nlohmann::json tensors = nlohmann::json::array();
    for (auto& [name, tensor] : idx) {
        const std::string bytes = serialize_ptnsr(*tensor);
        const std::string file = blob_filename(name);
        atomic_write_file((fs::path(dir) / file).string(), bytes);
        tensors.push_back({{"name", name},
                           {"shape", tensor->shape()},
                           {"file", file},
                           {"fnv1a64", hash_hex(fnv1a64(bytes.data(), bytes.size()))}});
    }
    manifest["tensors"] = tensors;
    atomic_write_file((fs::path(dir) / "manifest.json").string(),
                      manifest.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(manifest_path + ": " + e.what());
    }
    if (!manifest.is_object() || manifest.value("format", "") != kCheckpointFormat) {
        throw FormatError(manifest_path + ": not a " + std::string(kCheckpointFormat));
    }
    if (manifest.value("version", -1) != kCheckpointVersion) {
        throw FormatError(manifest_path + ": unsupported version " +
                          manifest.value("version", nlohmann::json()).dump());
    }
    LoadedCheckpoint ck;
    ck.config = config_from_json(manifest.at("config"));
    ck.config.validate();

    auto idx = tensor_index(ck.weights);
    auto shapes = expected_shapes(ck.config);
    if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
        throw FormatError(manifest_path + ": missing tensor index");
    }
    const auto& tensors = manifest["tensors"];
    if (tensors.size() != idx.size()) {
        throw FormatError(manifest_path + ": manifest lists " +
                          std::to_string(tensors.size()) + " tensors, config expects " +
                          std::to_string(idx.size()));
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::size_t entry_at = tensors.size();
        for (std::size_t j = 0; j < tensors.size(); ++j) {
            if (tensors[j].value("name", "") == idx[i].first) {
                if (entry_at != tensors.size()) {
                    throw FormatError(manifest_path + ": tensor " + idx[i].first +
                                      " listed twice");
                }
                entry_at = j;
            }
        }
        if (entry_at == tensors.size()) {
            throw FormatError(manifest_path + ": tensor " + idx[i].first +
                              " missing from manifest");
        }
        const auto& entry = tensors[entry_at];
        const std::string file = entry.value("file", "");
        const std::string path = (fs::path(dir) / file).string();
        std::ifstream blob(path, std::ios::binary);
        if (!blob) throw IoError("cannot open " + path);
        std::ostringstream ss;
        ss << blob.rdbuf();
        const std::string bytes = ss.str();
        const std::string want_hash = entry.value("fnv1a64", "");
        const std::string got_hash = hash_hex(fnv1a64(bytes.data(), bytes.size()));
        if (want_hash != got_hash) {
            throw FormatError(path + ": content hash " + got_hash +
                              " does not match manifest " + want_hash);
        }
        Tensor t = parse_ptnsr(bytes, path);
        if (t.shape() != shapes[i].second) {
            throw ShapeError(path + ": tensor shape " + t.shape_str() +
                             " does not match config expectation " +
                             shape_to_string(shapes[i].second));
        }
        *idx[i].second = std::move(t);
    }
    for (StemBlockParams* b :
         {&ck.weights.stem.s1_rgb_a, &ck.weights.stem.s1_rgb_b,
          &ck.weights.stem.s1_diff_a, &ck.weights.stem.s1_diff_b,
          &ck.weights.stem.s2}) {
        b->bn_eps = ck.config.bn_eps;
    }
    ck.weights.stem.mask_sigmoid = ck.config.mask_sigmoid;
    return ck;
}

// ---- losses ----

double loss_time(const BvpSignal& pred, const BvpSignal& label) {
    if (pred.samples.size() != label.samples.size()) {
        throw ShapeError("loss_time: lengths disagree: " +
                         std::to_string(pred.samples.size()) + " vs " +
                         std::to_string(label.samples.size()));
    }
    return -pearson(pred.samples, label.samples);
}

namespace {

// Mean-removed periodogram zero-padded to >= 2048 bins. Mean removal keeps
// the band bins exactly invariant to constant offsets, which zero padding
// would otherwise smear into them.
struct BandPower {
    std::vector<double> power;  // band bins, ascending frequency
    std::int64_t first_bin = 0;
    double df = 0.0;
};

BandPower band_periodogram(const BvpSignal& x, HrBand band) {
    x.validate();
    const std::int64_t n = static_cast<std::int64_t>(x.samples.size());
    if (n < 32) throw ArgumentError("loss_freq: need at least 32 samples");
    const std::size_t nfft =
        std::max<std::size_t>(2048, fftcore::next_pow2(static_cast<std::size_t>(n)));
    double mean = 0.0;
    for (double v : x.samples) mean += v;
    mean /= static_cast<double>(n);
    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    for (std::int64_t i = 0; i < n; ++i) {
        buf[static_cast<std::size_t>(i)] = {x.samples[static_cast<std::size_t>(i)] - mean,
                                            0.0};
    }
    fftcore::transform(buf, false);
    BandPower bp;
    bp.df = x.fs / static_cast<double>(nfft);
    const std::int64_t lo_bin =
        static_cast<std::int64_t>(std::ceil(band.lo_hz / bp.df - 1e-9));
    const std::int64_t hi_bin =
        static_cast<std::int64_t>(std::floor(band.hi_hz / bp.df + 1e-9));
    const std::int64_t max_bin = static_cast<std::int64_t>(nfft / 2);
    if (lo_bin > hi_bin || hi_bin < 0 || lo_bin > max_bin) {
        throw ArgumentError("loss_freq: band contains no periodogram bins");
    }
    bp.first_bin = std::max<std::int64_t>(lo_bin, 0);
    for (std::int64_t j = bp.first_bin; j <= std::min(hi_bin, max_bin); ++j) {
        bp.power.push_back(std::norm(buf[static_cast<std::size_t>(j)]) /
                           static_cast<double>(n));
    }
    return bp;
}

}  // namespace

double softmax_cross_entropy(const std::vector<double>& logits, std::size_t target) {
    if (logits.empty() || target >= logits.size()) {
        throw ArgumentError("softmax ce: target outside logit range");
    }
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    return -(logits[target] - mx - std::log(z));
}

double loss_freq(const BvpSignal& pred, double label_hr_bpm, HrBand band) {
    const double f0 = label_hr_bpm / 60.0;
    if (f0 < band.lo_hz || f0 > band.hi_hz) {
        throw ArgumentError("loss_freq: label " + std::to_string(label_hr_bpm) +
                            " bpm outside the band");
    }
    BandPower bp = band_periodogram(pred, band);
    const std::int64_t target =
        static_cast<std::int64_t>(std::llround(f0 / bp.df)) - bp.first_bin;
    const std::int64_t nb = static_cast<std::int64_t>(bp.power.size());
    const std::size_t clamped =
        static_cast<std::size_t>(std::clamp<std::int64_t>(target, 0, nb - 1));
    return softmax_cross_entropy(bp.power, clamped);
}

double periodogram_peak_hr(const BvpSignal& x, HrBand band) {
    BandPower bp = band_periodogram(x, band);
    std::size_t best = 0;
    for (std::size_t j = 1; j < bp.power.size(); ++j) {
        if (bp.power[j] > bp.power[best]) best = j;
    }
    return 60.0 * static_cast<double>(bp.first_bin + static_cast<std::int64_t>(best)) *
           bp.df;
}

double loss_overall(const BvpSignal& pred, const BvpSignal& label, HrBand band) {
    return loss_time(pred, label) + loss_freq(pred, periodogram_peak_hr(label, band), band);
}

}  // namespace ssdpulse
