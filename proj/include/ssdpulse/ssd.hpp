#pragma once

#include "ssdpulse/tensor.hpp"

namespace ssdpulse {

struct SsdConfig {
    std::int64_t d_model = 64;
    std::int64_t d_state = 64;
    std::int64_t d_head = 16;
    std::int64_t n_heads = 4;
    std::int64_t chunk_size = 16;
    void validate() const;
};

// Per-head, per-step decay factors a[h,t], each in (0, 1].
struct DecaySequence {
    Tensor a;  // [H, T]
};

// One pathway's projected sequences. Queries/keys live in state space (width
// N), values carry the head channels (width P).
struct SsdInputs {
    Tensor q;  // [H, T, N]
    Tensor k;  // [H, T, N]
    Tensor v;  // [H, T, P]
    DecaySequence decay;
};

void validate_ssd_inputs(const SsdInputs& in);

// Lower-triangular decay mask for one head: L[i][j] = prod_{m=j+1..i} a[m]
// for j <= i (empty product on the diagonal), zero above. Rows are filled
// right-to-left by multiplication, so tiny decays never divide by ~0.
Tensor build_mask_L(const DecaySequence& decay, std::int64_t head);

// O(T) recurrence: h_t = a_t h_{t-1} + k_t v_t^T, y_t = q_t^T h_t.
// State accumulates in f64.
Tensor ssm_recurrence_scan(const SsdInputs& in);

// O(T^2) masked-attention form: Y = (L o (Q K^T)) V per head.
Tensor ssd_quadratic(const SsdInputs& in);

// Chunked scan: the quadratic form inside fixed-size chunks plus a recurrent
// state carried between chunks. chunk_size == 1 degenerates to the
// recurrence, chunk_size >= T to the quadratic form.
Tensor ssd_chunked(const SsdInputs& in, std::int64_t chunk_size);

// Plain softmax(Q K^T / sqrt(N)) V baseline, optionally causal. Kept for
// contrasting the linear-attention mask against ordinary attention.
Tensor softmax_attention_reference(const Tensor& q, const Tensor& k,
                                   const Tensor& v, bool causal);

struct SsdBlockParams {
    Tensor w_q;      // [D, N]
    Tensor w_k;      // [D, N]
    Tensor w_v;      // [D, D], split across heads in d_head slices
    Tensor w_out;    // [D, D]
    Tensor w_dt;     // [D, H], token -> per-head step size
    Tensor a_log;    // [H]
    Tensor dt_bias;  // [H]
};

void validate_block_params(const SsdBlockParams& p, const SsdConfig& cfg);

// Input-dependent decay: a[h,t] = exp(-softplus(dt_bias[h] + x_t . w_dt[:,h])
// * exp(a_log[h])). Always lands in (0, 1).
DecaySequence decay_from_tokens(const Tensor& x, const SsdBlockParams& p,
                                const SsdConfig& cfg);

// Head plumbing. Q/K projections are shared across heads (replicated);
// V is sliced channel-wise into d_head-wide heads.
Tensor replicate_heads(const Tensor& x, std::int64_t heads);  // [T,N] -> [H,T,N]
Tensor split_heads(const Tensor& x, std::int64_t heads);      // [T,H*P] -> [H,T,P]
Tensor merge_heads(const Tensor& y);                          // [H,T,P] -> [T,H*P]

struct PathwayResult {
    Tensor y;  // [T, D]
    Tensor q;  // [H, T, N]; the cross pathway reuses these queries
};

// Self pathway: projects q/k/v from x, runs the chunked scan, merges heads
// through w_out. Also returns the queries for reuse.
PathwayResult sa_pathway(const Tensor& x, const SsdBlockParams& p,
                         const SsdConfig& cfg);

// Cross pathway: keys/values/decay come from x, queries are injected from
// the self pathway.
Tensor ca_pathway(const Tensor& x, const Tensor& q_shared,
                  const SsdBlockParams& p, const SsdConfig& cfg);

}  // namespace ssdpulse
