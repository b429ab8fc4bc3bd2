#include "ssdpulse/ssd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssdpulse/kernels.hpp"

namespace ssdpulse {

void SsdConfig::validate() const {
    if (d_model < 1 || d_state < 1 || d_head < 1 || n_heads < 1 || chunk_size < 1) {
        throw ArgumentError("ssd config: all dims must be >= 1");
    }
    if (d_head * n_heads != d_model) {
        throw ArgumentError("ssd config: d_head * n_heads must equal d_model (" +
                            std::to_string(d_head) + " * " + std::to_string(n_heads) +
                            " != " + std::to_string(d_model) + ")");
    }
}

void validate_ssd_inputs(const SsdInputs& in) {
    if (in.q.rank() != 3 || in.k.rank() != 3 || in.v.rank() != 3) {
        throw ShapeError("ssd inputs: q/k/v must be rank 3, got " + in.q.shape_str() +
                         ", " + in.k.shape_str() + ", " + in.v.shape_str());
    }
    if (!in.q.same_shape(in.k)) {
        throw ShapeError("ssd inputs: q " + in.q.shape_str() + " and k " +
                         in.k.shape_str() + " disagree");
    }
    if (in.v.dim(0) != in.q.dim(0) || in.v.dim(1) != in.q.dim(1)) {
        throw ShapeError("ssd inputs: v " + in.v.shape_str() +
                         " does not align with q " + in.q.shape_str());
    }
    if (in.decay.a.rank() != 2 || in.decay.a.dim(0) != in.q.dim(0) ||
        in.decay.a.dim(1) != in.q.dim(1)) {
        throw ShapeError("ssd inputs: decay " + in.decay.a.shape_str() +
                         " does not align with q " + in.q.shape_str());
    }
    for (std::int64_t i = 0; i < in.decay.a.numel(); ++i) {
        const float a = in.decay.a.data()[i];
        if (!(a > 0.0f) || a > 1.0f) {
            throw ArgumentError("decay factors must lie in (0, 1], got " +
                                std::to_string(a));
        }
    }
}

Tensor build_mask_L(const DecaySequence& decay, std::int64_t head) {
    if (decay.a.rank() != 2) {
        throw ShapeError("decay must be [H,T], got " + decay.a.shape_str());
    }
    if (head < 0 || head >= decay.a.dim(0)) {
        throw ArgumentError("head " + std::to_string(head) + " out of range for " +
                            decay.a.shape_str());
    }
    const std::int64_t t = decay.a.dim(1);
    Tensor l({t, t});
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < t; ++i) {
        double run = 1.0;
        l.at(i, i) = 1.0f;
        for (std::int64_t j = i - 1; j >= 0; --j) {
            run *= static_cast<double>(decay.a.at(head, j + 1));
            l.at(i, j) = static_cast<float>(run);
        }
    }
    return l;
}

Tensor ssm_recurrence_scan(const SsdInputs& in) {
    validate_ssd_inputs(in);
    const std::int64_t heads = in.q.dim(0), t = in.q.dim(1), n = in.q.dim(2),
                       p = in.v.dim(2);
    Tensor y({heads, t, p});
#pragma omp parallel for schedule(static)
    for (std::int64_t h = 0; h < heads; ++h) {
        std::vector<double> state(static_cast<std::size_t>(n * p), 0.0);
        for (std::int64_t i = 0; i < t; ++i) {
            const double a = in.decay.a.at(h, i);
            for (std::int64_t nn = 0; nn < n; ++nn) {
                const double kv = in.k.at(h, i, nn);
                double* srow = state.data() + nn * p;
                for (std::int64_t pp = 0; pp < p; ++pp) {
                    srow[pp] = a * srow[pp] +
                               kv * static_cast<double>(in.v.at(h, i, pp));
                }
            }
            for (std::int64_t pp = 0; pp < p; ++pp) {
                double acc = 0.0;
                for (std::int64_t nn = 0; nn < n; ++nn) {
                    acc += static_cast<double>(in.q.at(h, i, nn)) * state[nn * p + pp];
                }
                y.at(h, i, pp) = static_cast<float>(acc);
            }
        }
    }
    return y;
}

Tensor ssd_quadratic(const SsdInputs& in) {
    validate_ssd_inputs(in);
    const std::int64_t heads = in.q.dim(0), t = in.q.dim(1), n = in.q.dim(2),
                       p = in.v.dim(2);
    Tensor y({heads, t, p});
    for (std::int64_t h = 0; h < heads; ++h) {
        // One output row at a time: build the decay row right-to-left, take
        // masked scores against all earlier keys, then reduce over time.
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < t; ++i) {
            std::vector<double> g(static_cast<std::size_t>(i + 1));
            double run = 1.0;
            for (std::int64_t j = i; j >= 0; --j) {
                if (j < i) run *= static_cast<double>(in.decay.a.at(h, j + 1));
                double score = 0.0;
                for (std::int64_t nn = 0; nn < n; ++nn) {
                    score += static_cast<double>(in.q.at(h, i, nn)) *
                             static_cast<double>(in.k.at(h, j, nn));
                }
                g[static_cast<std::size_t>(j)] = run * score;
            }
            for (std::int64_t pp = 0; pp < p; ++pp) {
                double acc = 0.0;
                for (std::int64_t j = 0; j <= i; ++j) {
                    acc += g[static_cast<std::size_t>(j)] *
                           static_cast<double>(in.v.at(h, j, pp));
                }
                y.at(h, i, pp) = static_cast<float>(acc);
            }
        }
    }
    return y;
}

Tensor ssd_chunked(const SsdInputs& in, std::int64_t chunk_size) {
    validate_ssd_inputs(in);
    if (chunk_size < 1) throw ArgumentError("chunk_size must be >= 1");
    const std::int64_t heads = in.q.dim(0), t = in.q.dim(1), n = in.q.dim(2),
                       p = in.v.dim(2);
    Tensor y({heads, t, p});
#pragma omp parallel for schedule(static)
    for (std::int64_t h = 0; h < heads; ++h) {
        std::vector<double> state(static_cast<std::size_t>(n * p), 0.0);
        std::vector<double> prefix(static_cast<std::size_t>(chunk_size));
        std::vector<double> suffix(static_cast<std::size_t>(chunk_size));
        std::vector<double> g(static_cast<std::size_t>(chunk_size));
        for (std::int64_t s = 0; s < t; s += chunk_size) {
            const std::int64_t e = std::min(s + chunk_size, t);
            const std::int64_t len = e - s;
            // prefix[i] = prod_{m=s..s+i} a_m ; suffix[j] = prod_{m=s+j+1..e-1} a_m
            for (std::int64_t i = 0; i < len; ++i) {
                const double a = in.decay.a.at(h, s + i);
                prefix[static_cast<std::size_t>(i)] =
                    (i == 0 ? a : prefix[static_cast<std::size_t>(i - 1)] * a);
            }
            suffix[static_cast<std::size_t>(len - 1)] = 1.0;
            for (std::int64_t j = len - 2; j >= 0; --j) {
                suffix[static_cast<std::size_t>(j)] =
                    suffix[static_cast<std::size_t>(j + 1)] *
                    static_cast<double>(in.decay.a.at(h, s + j + 1));
            }
            for (std::int64_t i = 0; i < len; ++i) {
                const std::int64_t ti = s + i;
                // carried state contribution, scaled by the decay from the
                // chunk border up to and including step ti
                const double carry = prefix[static_cast<std::size_t>(i)];
                // local masked scores, decay row built right-to-left
                double run = 1.0;
                for (std::int64_t j = i; j >= 0; --j) {
                    if (j < i) run *= static_cast<double>(in.decay.a.at(h, s + j + 1));
                    double score = 0.0;
                    for (std::int64_t nn = 0; nn < n; ++nn) {
                        score += static_cast<double>(in.q.at(h, ti, nn)) *
                                 static_cast<double>(in.k.at(h, s + j, nn));
                    }
                    g[static_cast<std::size_t>(j)] = run * score;
                }
                for (std::int64_t pp = 0; pp < p; ++pp) {
                    double acc = 0.0;
                    for (std::int64_t nn = 0; nn < n; ++nn) {
                        acc += static_cast<double>(in.q.at(h, ti, nn)) *
                               state[static_cast<std::size_t>(nn * p + pp)];
                    }
                    acc *= carry;
                    for (std::int64_t j = 0; j <= i; ++j) {
                        acc += g[static_cast<std::size_t>(j)] *
                               static_cast<double>(in.v.at(h, s + j, pp));
                    }
                    y.at(h, ti, pp) = static_cast<float>(acc);
                }
            }
            // state <- prod(chunk decays) * state + sum_j suffix_j * k_j v_j^T
            const double whole = prefix[static_cast<std::size_t>(len - 1)];
            for (auto& sv : state) sv *= whole;
            for (std::int64_t j = 0; j < len; ++j) {
                const double r = suffix[static_cast<std::size_t>(j)];
                for (std::int64_t nn = 0; nn < n; ++nn) {
                    const double kr = r * static_cast<double>(in.k.at(h, s + j, nn));
                    double* srow = state.data() + nn * p;
                    for (std::int64_t pp = 0; pp < p; ++pp) {
                        srow[pp] += kr * static_cast<double>(in.v.at(h, s + j, pp));
                    }
                }
            }
        }
    }
    return y;
}

Tensor softmax_attention_reference(const Tensor& q, const Tensor& k,
                                   const Tensor& v, bool causal) {
    if (q.rank() != 2 || !q.same_shape(k) || v.rank() != 2 ||
        v.dim(0) != q.dim(0)) {
        throw ShapeError("attention: incompatible q " + q.shape_str() + ", k " +
                         k.shape_str() + ", v " + v.shape_str());
    }
    const std::int64_t t = q.dim(0), n = q.dim(1), p = v.dim(1);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(n));
    Tensor y({t, p});
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < t; ++i) {
        const std::int64_t jmax = causal ? i : t - 1;
        std::vector<double> w(static_cast<std::size_t>(jmax + 1));
        double mx = -1e300;
        for (std::int64_t j = 0; j <= jmax; ++j) {
            double score = 0.0;
            for (std::int64_t nn = 0; nn < n; ++nn) {
                score += static_cast<double>(q.at(i, nn)) *
                         static_cast<double>(k.at(j, nn));
            }
            score *= inv_sqrt;
            w[static_cast<std::size_t>(j)] = score;
            if (score > mx) mx = score;
        }
        double z = 0.0;
        for (auto& wv : w) {
            wv = std::exp(wv - mx);
            z += wv;
        }
        for (std::int64_t pp = 0; pp < p; ++pp) {
            double acc = 0.0;
            for (std::int64_t j = 0; j <= jmax; ++j) {
                acc += w[static_cast<std::size_t>(j)] *
                       static_cast<double>(v.at(j, pp));
            }
            y.at(i, pp) = static_cast<float>(acc / z);
        }
    }
    return y;
}

namespace {

void check_weight(const Tensor& w, std::int64_t r0, std::int64_t r1, const char* name) {
    if (w.rank() != 2 || w.dim(0) != r0 || w.dim(1) != r1) {
        throw ShapeError(std::string(name) + ": expected [" + std::to_string(r0) +
                         "x" + std::to_string(r1) + "], got " + w.shape_str());
    }
}

void check_vec(const Tensor& w, std::int64_t r0, const char* name) {
    if (w.rank() != 1 || w.dim(0) != r0) {
        throw ShapeError(std::string(name) + ": expected [" + std::to_string(r0) +
                         "], got " + w.shape_str());
    }
}

}  // namespace

Tensor replicate_heads(const Tensor& x, std::int64_t heads) {
    if (x.rank() != 2 || heads < 1) {
        throw ShapeError("replicate_heads: need a [T,N] tensor and heads >= 1, got " +
                         x.shape_str());
    }
    const std::int64_t t = x.dim(0), n = x.dim(1);
    Tensor out({heads, t, n});
    for (std::int64_t h = 0; h < heads; ++h) {
        for (std::int64_t i = 0; i < t * n; ++i) {
            out.data()[h * t * n + i] = x.data()[i];
        }
    }
    return out;
}

Tensor split_heads(const Tensor& x, std::int64_t heads) {
    if (x.rank() != 2 || heads < 1 || x.dim(1) % heads != 0) {
        throw ShapeError("split_heads: " + x.shape_str() + " not divisible into " +
                         std::to_string(heads) + " heads");
    }
    const std::int64_t t = x.dim(0), d_head = x.dim(1) / heads;
    Tensor out({heads, t, d_head});
    for (std::int64_t h = 0; h < heads; ++h) {
        for (std::int64_t i = 0; i < t; ++i) {
            for (std::int64_t pp = 0; pp < d_head; ++pp) {
                out.at(h, i, pp) = x.at(i, h * d_head + pp);
            }
        }
    }
    return out;
}

Tensor merge_heads(const Tensor& y) {
    if (y.rank() != 3) {
        throw ShapeError("merge_heads: need [H,T,P], got " + y.shape_str());
    }
    const std::int64_t heads = y.dim(0), t = y.dim(1), p = y.dim(2);
    Tensor out({t, heads * p});
    for (std::int64_t h = 0; h < heads; ++h) {
        for (std::int64_t i = 0; i < t; ++i) {
            for (std::int64_t pp = 0; pp < p; ++pp) {
                out.at(i, h * p + pp) = y.at(h, i, pp);
            }
        }
    }
    return out;
}

void validate_block_params(const SsdBlockParams& p, const SsdConfig& cfg) {
    cfg.validate();
    check_weight(p.w_q, cfg.d_model, cfg.d_state, "w_q");
    check_weight(p.w_k, cfg.d_model, cfg.d_state, "w_k");
    check_weight(p.w_v, cfg.d_model, cfg.d_model, "w_v");
    check_weight(p.w_out, cfg.d_model, cfg.d_model, "w_out");
    check_weight(p.w_dt, cfg.d_model, cfg.n_heads, "w_dt");
    check_vec(p.a_log, cfg.n_heads, "a_log");
    check_vec(p.dt_bias, cfg.n_heads, "dt_bias");
}

DecaySequence decay_from_tokens(const Tensor& x, const SsdBlockParams& p,
                                const SsdConfig& cfg) {
    validate_block_params(p, cfg);
    if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
        throw ShapeError("decay_from_tokens: tokens " + x.shape_str() +
                         " do not match d_model " + std::to_string(cfg.d_model));
    }
    const std::int64_t t = x.dim(0);
    Tensor dt = matmul(x, p.w_dt);  // [T, H]
    DecaySequence d;
    d.a = Tensor({cfg.n_heads, t});
    for (std::int64_t h = 0; h < cfg.n_heads; ++h) {
        const double rate = std::exp(static_cast<double>(p.a_log.at(h)));
        const double bias = p.dt_bias.at(h);
        for (std::int64_t i = 0; i < t; ++i) {
            const double z = bias + static_cast<double>(dt.at(i, h));
            // softplus with the usual overflow guard
            const double sp = z > 30.0 ? z : std::log1p(std::exp(z));
            double a = std::exp(-sp * rate);
            // softplus > 0 guarantees a < 1; clamp the denormal tail so the
            // (0, 1] contract survives the f32 round-trip.
            if (a < 1e-30) a = 1e-30;
            d.a.at(h, i) = static_cast<float>(a);
        }
    }
    return d;
}

PathwayResult sa_pathway(const Tensor& x, const SsdBlockParams& p,
                         const SsdConfig& cfg) {
    validate_block_params(p, cfg);
    if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
        throw ShapeError("sa_pathway: tokens " + x.shape_str() +
                         " do not match d_model " + std::to_string(cfg.d_model));
    }
    SsdInputs in;
    in.q = replicate_heads(matmul(x, p.w_q), cfg.n_heads);
    in.k = replicate_heads(matmul(x, p.w_k), cfg.n_heads);
    in.v = split_heads(matmul(x, p.w_v), cfg.n_heads);
    in.decay = decay_from_tokens(x, p, cfg);
    Tensor heads_out = ssd_chunked(in, cfg.chunk_size);
    PathwayResult res;
    res.y = matmul(merge_heads(heads_out), p.w_out);
    res.q = std::move(in.q);
    return res;
}

Tensor ca_pathway(const Tensor& x, const Tensor& q_shared,
                  const SsdBlockParams& p, const SsdConfig& cfg) {
    validate_block_params(p, cfg);
    if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
        throw ShapeError("ca_pathway: tokens " + x.shape_str() +
                         " do not match d_model " + std::to_string(cfg.d_model));
    }
    if (q_shared.rank() != 3 || q_shared.dim(0) != cfg.n_heads ||
        q_shared.dim(1) != x.dim(0) || q_shared.dim(2) != cfg.d_state) {
        throw ShapeError("ca_pathway: shared queries " + q_shared.shape_str() +
                         " do not match tokens " + x.shape_str());
    }
    SsdInputs in;
    in.q = q_shared;
    in.k = replicate_heads(matmul(x, p.w_k), cfg.n_heads);
    in.v = split_heads(matmul(x, p.w_v), cfg.n_heads);
    in.decay = decay_from_tokens(x, p, cfg);
    Tensor heads_out = ssd_chunked(in, cfg.chunk_size);
    return matmul(merge_heads(heads_out), p.w_out);
}

}  // namespace ssdpulse
