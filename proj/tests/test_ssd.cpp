#include <cmath>
#include <cstring>

#include "doctest.h"
#include "ssdpulse/bench.hpp"
#include "ssdpulse/kernels.hpp"
#include "ssdpulse/ref.hpp"
#include "ssdpulse/rng.hpp"
#include "ssdpulse/ssd.hpp"

using namespace ssdpulse;

namespace {

Tensor random_tensor(std::vector<std::int64_t> dims, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(std::move(dims));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        t.data()[i] = static_cast<float>(rng.uniform(lo, hi));
    }
    return t;
}

SsdInputs small_inputs(std::int64_t heads, std::int64_t t, std::int64_t n,
                       std::int64_t p, Rng& rng, double decay_lo = 0.05,
                       double decay_hi = 1.0) {
    SsdInputs in;
    in.q = random_tensor({heads, t, n}, rng);
    in.k = random_tensor({heads, t, n}, rng);
    in.v = random_tensor({heads, t, p}, rng);
    in.decay.a = random_tensor({heads, t}, rng, decay_lo, decay_hi);
    return in;
}

}  // namespace

TEST_SUITE("ssd") {

TEST_CASE("mask: unit decay gives causal all-ones") {
    DecaySequence d;
    d.a = Tensor::full({1, 4}, 1.0f);
    Tensor l = build_mask_L(d, 0);
    for (std::int64_t i = 0; i < 4; ++i) {
        for (std::int64_t j = 0; j < 4; ++j) {
            CHECK(l.at(i, j) == (j <= i ? 1.0f : 0.0f));
        }
    }
}

TEST_CASE("mask: vanishing decay tends to identity") {
    DecaySequence d;
    d.a = Tensor::full({1, 4}, 1e-9f);
    Tensor l = build_mask_L(d, 0);
    for (std::int64_t i = 0; i < 4; ++i) {
        for (std::int64_t j = 0; j < 4; ++j) {
            if (i == j) {
                CHECK(l.at(i, j) == 1.0f);
            } else {
                CHECK(std::abs(l.at(i, j)) < 1e-8);
            }
        }
    }
}

TEST_CASE("mask: direct product oracle") {
    DecaySequence d;
    d.a = Tensor({1, 4}, {0.9f, 0.5f, 0.5f, 0.5f});  // a[0] never enters L
    Tensor l = build_mask_L(d, 0);
    CHECK(l.at(3, 0) == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(l.at(2, 1) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(l.at(1, 1) == 1.0f);
    CHECK(l.at(0, 3) == 0.0f);
}

TEST_CASE("mask: head index validated") {
    DecaySequence d;
    d.a = Tensor::full({2, 3}, 0.5f);
    CHECK_THROWS_AS(build_mask_L(d, 2), ArgumentError);
    CHECK_THROWS_AS(build_mask_L(d, -1), ArgumentError);
}

TEST_CASE("mask: decreasing one decay never increases any |L[i,j]|") {
    Rng rng(31);
    DecaySequence d;
    d.a = random_tensor({1, 8}, rng, 0.1, 1.0);
    Tensor before = build_mask_L(d, 0);
    const std::int64_t k = 4;
    d.a.at(0, k) *= 0.3f;
    Tensor after = build_mask_L(d, 0);
    for (std::int64_t i = 0; i < 8; ++i) {
        for (std::int64_t j = 0; j < 8; ++j) {
            CHECK(std::abs(after.at(i, j)) <= std::abs(before.at(i, j)) + 1e-12);
        }
    }
}

TEST_CASE("recurrence: T=1 ignores decay") {
    Rng rng(32);
    SsdInputs in = small_inputs(1, 1, 4, 2, rng);
    in.decay.a.at(0, 0) = 0.123f;
    Tensor y = ssm_recurrence_scan(in);
    double dot = 0.0;
    for (std::int64_t j = 0; j < 4; ++j) {
        dot += static_cast<double>(in.q.at(0, 0, j)) * in.k.at(0, 0, j);
    }
    for (std::int64_t p = 0; p < 2; ++p) {
        CHECK(y.at(0, 0, p) ==
              doctest::Approx(dot * in.v.at(0, 0, p)).epsilon(1e-6));
    }
}

TEST_CASE("recurrence: near-zero decay is memoryless") {
    Rng rng(33);
    SsdInputs in = small_inputs(2, 6, 4, 3, rng);
    for (std::int64_t h = 0; h < 2; ++h) {
        for (std::int64_t t = 0; t < 6; ++t) in.decay.a.at(h, t) = 1e-20f;
    }
    Tensor y = ssm_recurrence_scan(in);
    for (std::int64_t h = 0; h < 2; ++h) {
        for (std::int64_t t = 0; t < 6; ++t) {
            double dot = 0.0;
            for (std::int64_t j = 0; j < 4; ++j) {
                dot += static_cast<double>(in.q.at(h, t, j)) * in.k.at(h, t, j);
            }
            for (std::int64_t p = 0; p < 3; ++p) {
                CHECK(y.at(h, t, p) ==
                      doctest::Approx(dot * in.v.at(h, t, p)).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("recurrence matches unrolled-summation oracle") {
    Rng rng(34);
    SsdInputs in = small_inputs(1, 12, 4, 2, rng);
    Tensor got = ssm_recurrence_scan(in);
    Tensor want = ref::ssd_unrolled_naive(in);
    for (std::int64_t i = 0; i < got.numel(); ++i) {
        const double denom = std::max(1e-6, std::abs(static_cast<double>(want.data()[i])));
        CHECK(std::abs(got.data()[i] - want.data()[i]) / denom < 1e-5);
    }
}

TEST_CASE("decay outside (0,1] rejected") {
    Rng rng(35);
    SsdInputs in = small_inputs(1, 4, 4, 2, rng);
    SUBCASE("zero") { in.decay.a.at(0, 2) = 0.0f; }
    SUBCASE("negative") { in.decay.a.at(0, 1) = -0.25f; }
    SUBCASE("above one") { in.decay.a.at(0, 3) = 1.5f; }
    CHECK_THROWS_AS(ssm_recurrence_scan(in), ArgumentError);
}

TEST_CASE("quadratic: hand expansion at T=2, unit decay") {
    Rng rng(36);
    SsdInputs in = small_inputs(1, 2, 3, 2, rng);
    in.decay.a = Tensor::full({1, 2}, 1.0f);
    Tensor y = ssd_quadratic(in);
    auto dot = [&](std::int64_t a, std::int64_t b) {
        double s = 0.0;
        for (std::int64_t j = 0; j < 3; ++j) {
            s += static_cast<double>(in.q.at(0, a, j)) * in.k.at(0, b, j);
        }
        return s;
    };
    for (std::int64_t p = 0; p < 2; ++p) {
        const double want = dot(1, 0) * in.v.at(0, 0, p) + dot(1, 1) * in.v.at(0, 1, p);
        CHECK(y.at(0, 1, p) == doctest::Approx(want).epsilon(1e-5));
    }
}

TEST_CASE("quadratic equals recurrence across random seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed + 100);
        const auto t = static_cast<std::int64_t>(1 + rng.next_u64() % 64);
        SsdInputs in = small_inputs(2, t, 8, 4, rng);
        Tensor a = ssm_recurrence_scan(in);
        Tensor b = ssd_quadratic(in);
        CHECK(max_rel_err(a, b) < 1e-4);
    }
}

TEST_CASE("quadratic: strictly-upper score entries are dead") {
    // causality via input perturbation: changing q/k/v at steps > t must not
    // change outputs at <= t
    Rng rng(37);
    SsdInputs in = small_inputs(1, 10, 4, 2, rng);
    Tensor base = ssd_quadratic(in);
    SsdInputs mod = in;
    for (std::int64_t t = 7; t < 10; ++t) {
        for (std::int64_t j = 0; j < 4; ++j) {
            mod.q.at(0, t, j) = 100.0f;
            mod.k.at(0, t, j) = -50.0f;
        }
        for (std::int64_t p = 0; p < 2; ++p) mod.v.at(0, t, p) = 9.0f;
    }
    Tensor perturbed = ssd_quadratic(mod);
    for (std::int64_t t = 0; t < 7; ++t) {
        for (std::int64_t p = 0; p < 2; ++p) {
            CHECK(perturbed.at(0, t, p) == base.at(0, t, p));
        }
    }
}

TEST_CASE("chunked: single chunk equals quadratic") {
    Rng rng(38);
    SsdInputs in = small_inputs(2, 24, 8, 4, rng);
    Tensor a = ssd_quadratic(in);
    Tensor b = ssd_chunked(in, 24);
    Tensor c = ssd_chunked(in, 100);
    CHECK(max_rel_err(a, b) < 1e-6);
    CHECK(max_rel_err(a, c) < 1e-6);
}

TEST_CASE("chunked: chunk_size 1 equals recurrence") {
    Rng rng(39);
    SsdInputs in = small_inputs(2, 17, 8, 4, rng);
    Tensor a = ssm_recurrence_scan(in);
    Tensor b = ssd_chunked(in, 1);
    CHECK(max_rel_err(a, b) < 1e-5);
}

TEST_CASE("chunked: T=96 chunk 16 vs quadratic, ragged tail too") {
    Rng rng(40);
    for (std::int64_t t : {96, 90}) {  // 90 leaves a short trailing chunk
        SsdInputs in = small_inputs(4, t, 16, 8, rng);
        Tensor a = ssd_quadratic(in);
        Tensor b = ssd_chunked(in, 16);
        CHECK(max_rel_err(a, b) < 1e-4);
    }
}

TEST_CASE("triple equivalence at the full working size") {
    Rng rng(41);
    SsdInputs in = small_inputs(4, 128, 64, 16, rng);
    Tensor a = ssm_recurrence_scan(in);
    Tensor b = ssd_quadratic(in);
    Tensor c = ssd_chunked(in, 16);
    CHECK(max_rel_err(a, b) < 1e-4);
    CHECK(max_rel_err(a, c) < 1e-4);
    CHECK(max_rel_err(b, c) < 1e-4);
}

TEST_CASE("chunked matches the literal unrolled definition") {
    Rng rng(42);
    SsdInputs in = small_inputs(2, 40, 6, 3, rng);
    Tensor got = ssd_chunked(in, 8);
    Tensor want = ref::ssd_unrolled_naive(in);
    CHECK(max_rel_err(got, want) < 1e-4);
}

TEST_CASE("softmax attention reference") {
    Rng rng(43);
    SUBCASE("T=1 returns v") {
        Tensor q = random_tensor({1, 3}, rng);
        Tensor k = random_tensor({1, 3}, rng);
        Tensor v = random_tensor({1, 3}, rng);
        Tensor y = softmax_attention_reference(q, k, v, false);
        for (std::int64_t j = 0; j < 3; ++j) CHECK(y.at(0, j) == v.at(0, j));
    }
    SUBCASE("identical query rows give identical outputs") {
        Tensor q({2, 3}, {0.5f, -1.0f, 2.0f, 0.5f, -1.0f, 2.0f});
        Tensor k = random_tensor({2, 3}, rng);
        Tensor v = random_tensor({2, 3}, rng);
        Tensor y = softmax_attention_reference(q, k, v, false);
        for (std::int64_t j = 0; j < 3; ++j) CHECK(y.at(0, j) == y.at(1, j));
    }
    SUBCASE("matches the direct formula") {
        Tensor q = random_tensor({5, 3}, rng);
        Tensor k = random_tensor({5, 3}, rng);
        Tensor v = random_tensor({5, 3}, rng);
        for (bool causal : {false, true}) {
            Tensor got = softmax_attention_reference(q, k, v, causal);
            Tensor want = ref::softmax_attention_naive(q, k, v, causal);
            for (std::int64_t i = 0; i < got.numel(); ++i) {
                CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-6);
            }
        }
    }
}

TEST_CASE("decay_from_tokens stays in (0,1) and responds to dt_bias") {
    Rng rng(44);
    SsdConfig cfg;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.d_head = 4;
    cfg.n_heads = 2;
    SsdBlockParams p;
    p.w_q = random_tensor({8, 4}, rng);
    p.w_k = random_tensor({8, 4}, rng);
    p.w_v = random_tensor({8, 8}, rng);
    p.w_out = random_tensor({8, 8}, rng);
    p.w_dt = random_tensor({8, 2}, rng);
    p.a_log = random_tensor({2}, rng, -0.7, 0.7);
    p.dt_bias = random_tensor({2}, rng, -1.0, 1.0);
    Tensor x = random_tensor({6, 8}, rng);
    DecaySequence d = decay_from_tokens(x, p, cfg);
    REQUIRE(d.a.shape() == std::vector<std::int64_t>{2, 6});
    for (std::int64_t i = 0; i < d.a.numel(); ++i) {
        CHECK(d.a.data()[i] > 0.0f);
        CHECK(d.a.data()[i] <= 1.0f);
    }
    // a larger step size decays faster
    SsdBlockParams faster = p;
    faster.dt_bias.at(0) += 5.0f;
    DecaySequence d2 = decay_from_tokens(x, faster, cfg);
    for (std::int64_t t = 0; t < 6; ++t) {
        CHECK(d2.a.at(0, t) < d.a.at(0, t));
        CHECK(d2.a.at(1, t) == d.a.at(1, t));  // other head untouched
    }
}

TEST_CASE("pathways: zero input, zero output") {
    Rng rng(45);
    SsdConfig cfg;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.d_head = 4;
    cfg.n_heads = 2;
    cfg.chunk_size = 4;
    SsdBlockParams p;
    p.w_q = random_tensor({8, 4}, rng);
    p.w_k = random_tensor({8, 4}, rng);
    p.w_v = random_tensor({8, 8}, rng);
    p.w_out = random_tensor({8, 8}, rng);
    p.w_dt = random_tensor({8, 2}, rng);
    p.a_log = random_tensor({2}, rng, -0.7, 0.7);
    p.dt_bias = random_tensor({2}, rng, -1.0, 1.0);
    Tensor x = Tensor::full({5, 8}, 0.0f);
    PathwayResult r = sa_pathway(x, p, cfg);
    for (std::int64_t i = 0; i < r.y.numel(); ++i) CHECK(r.y.data()[i] == 0.0f);
}

TEST_CASE("pathways: composition oracle and V-linearity") {
    Rng rng(46);
    SsdConfig cfg;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.d_head = 4;
    cfg.n_heads = 2;
    cfg.chunk_size = 4;
    SsdBlockParams p;
    p.w_q = random_tensor({8, 4}, rng);
    p.w_k = random_tensor({8, 4}, rng);
    p.w_v = random_tensor({8, 8}, rng);
    p.w_out = random_tensor({8, 8}, rng);
    p.w_dt = random_tensor({8, 2}, rng);
    p.a_log = random_tensor({2}, rng, -0.7, 0.7);
    p.dt_bias = random_tensor({2}, rng, -1.0, 1.0);
    const std::int64_t t = 11;
    Tensor x = random_tensor({t, 8}, rng);

    PathwayResult r = sa_pathway(x, p, cfg);
    REQUIRE(r.y.shape() == std::vector<std::int64_t>{t, 8});
    REQUIRE(r.q.shape() == std::vector<std::int64_t>{2, t, 4});

    // manual composition: project -> quadratic SSD -> merge -> out-project
    SsdInputs in;
    in.q = replicate_heads(matmul(x, p.w_q), 2);
    in.k = replicate_heads(matmul(x, p.w_k), 2);
    in.v = split_heads(matmul(x, p.w_v), 2);
    in.decay = decay_from_tokens(x, p, cfg);
    Tensor y_heads = ssd_quadratic(in);
    Tensor want = matmul(merge_heads(y_heads), p.w_out);
    for (std::int64_t i = 0; i < want.numel(); ++i) {
        CHECK(std::abs(r.y.data()[i] - want.data()[i]) < 1e-5);
    }

    // doubling w_v doubles the output (decay does not depend on w_v)
    SsdBlockParams doubled = p;
    for (std::int64_t i = 0; i < doubled.w_v.numel(); ++i) doubled.w_v.data()[i] *= 2.0f;
    PathwayResult r2 = sa_pathway(x, doubled, cfg);
    for (std::int64_t i = 0; i < r2.y.numel(); ++i) {
        CHECK(std::abs(r2.y.data()[i] - 2.0f * r.y.data()[i]) < 2e-5);
    }
}

TEST_CASE("cassd: cloned params degenerate to self-attention bitwise") {
    Rng rng(47);
    SsdConfig cfg;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.d_head = 4;
    cfg.n_heads = 2;
    cfg.chunk_size = 4;
    SsdBlockParams p;
    p.w_q = random_tensor({8, 4}, rng);
    p.w_k = random_tensor({8, 4}, rng);
    p.w_v = random_tensor({8, 8}, rng);
    p.w_out = random_tensor({8, 8}, rng);
    p.w_dt = random_tensor({8, 2}, rng);
    p.a_log = random_tensor({2}, rng, -0.7, 0.7);
    p.dt_bias = random_tensor({2}, rng, -1.0, 1.0);
    Tensor x = random_tensor({9, 8}, rng);
    PathwayResult sa = sa_pathway(x, p, cfg);
    Tensor ca = ca_pathway(x, sa.q, p, cfg);
    REQUIRE(ca.same_shape(sa.y));
    CHECK(std::memcmp(ca.data(), sa.y.data(), sizeof(float) * ca.numel()) == 0);
}

TEST_CASE("cassd: equals quadratic with swapped queries, scales with V") {
    Rng rng(48);
    SsdConfig cfg;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.d_head = 4;
    cfg.n_heads = 2;
    cfg.chunk_size = 4;
    auto make_params = [&rng] {
        SsdBlockParams p;
        p.w_q = random_tensor({8, 4}, rng);
        p.w_k = random_tensor({8, 4}, rng);
        p.w_v = random_tensor({8, 8}, rng);
        p.w_out = random_tensor({8, 8}, rng);
        p.w_dt = random_tensor({8, 2}, rng);
        p.a_log = random_tensor({2}, rng, -0.7, 0.7);
        p.dt_bias = random_tensor({2}, rng, -1.0, 1.0);
        return p;
    };
    SsdBlockParams sa_p = make_params();
    SsdBlockParams ca_p = make_params();
    const std::int64_t t = 10;
    Tensor xs = random_tensor({t, 8}, rng);
    Tensor xc = random_tensor({t, 8}, rng);
    PathwayResult sa = sa_pathway(xs, sa_p, cfg);
    Tensor ca = ca_pathway(xc, sa.q, ca_p, cfg);

    SsdInputs mixed;
    mixed.q = sa.q;  // Q from the self pathway
    mixed.k = replicate_heads(matmul(xc, ca_p.w_k), 2);
    mixed.v = split_heads(matmul(xc, ca_p.w_v), 2);
    mixed.decay = decay_from_tokens(xc, ca_p, cfg);
    Tensor want = matmul(merge_heads(ssd_quadratic(mixed)), ca_p.w_out);
    for (std::int64_t i = 0; i < want.numel(); ++i) {
        CHECK(std::abs(ca.data()[i] - want.data()[i]) < 1e-5);
    }

    SsdBlockParams scaled = ca_p;
    for (std::int64_t i = 0; i < scaled.w_v.numel(); ++i) scaled.w_v.data()[i] *= 3.0f;
    Tensor ca3 = ca_pathway(xc, sa.q, scaled, cfg);
    for (std::int64_t i = 0; i < ca3.numel(); ++i) {
        CHECK(std::abs(ca3.data()[i] - 3.0f * ca.data()[i]) < 3e-5);
    }
}

TEST_CASE("cassd: token-count mismatch rejected") {
    Rng rng(49);
    SsdConfig cfg;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.d_head = 4;
    cfg.n_heads = 2;
    SsdBlockParams p;
    p.w_q = random_tensor({8, 4}, rng);
    p.w_k = random_tensor({8, 4}, rng);
    p.w_v = random_tensor({8, 8}, rng);
    p.w_out = random_tensor({8, 8}, rng);
    p.w_dt = random_tensor({8, 2}, rng);
    p.a_log = random_tensor({2}, rng, -0.7, 0.7);
    p.dt_bias = random_tensor({2}, rng, -1.0, 1.0);
    Tensor x8 = random_tensor({8, 8}, rng);
    Tensor x6 = random_tensor({6, 8}, rng);
    PathwayResult sa = sa_pathway(x8, p, cfg);
    CHECK_THROWS_AS(ca_pathway(x6, sa.q, p, cfg), ShapeError);
}

TEST_CASE("head plumbing roundtrips") {
    Rng rng(50);
    Tensor x = random_tensor({5, 8}, rng);
    Tensor rep = replicate_heads(x, 3);
    REQUIRE(rep.shape() == std::vector<std::int64_t>{3, 5, 8});
    for (std::int64_t h = 0; h < 3; ++h) {
        for (std::int64_t t = 0; t < 5; ++t) {
            for (std::int64_t j = 0; j < 8; ++j) {
                CHECK(rep.at(h, t, j) == x.at(t, j));
            }
        }
    }
    Tensor split = split_heads(x, 2);
    REQUIRE(split.shape() == std::vector<std::int64_t>{2, 5, 4});
    CHECK(split.at(1, 2, 0) == x.at(2, 4));
    Tensor merged = merge_heads(split);
    REQUIRE(merged.same_shape(x));
    CHECK(std::memcmp(merged.data(), x.data(), sizeof(float) * x.numel()) == 0);
}

TEST_CASE("causality fuzz on all three formulations") {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        Rng rng(600 + trial);
        const std::int64_t t = 12 + static_cast<std::int64_t>(rng.next_u64() % 20);
        SsdInputs in = small_inputs(2, t, 6, 3, rng);
        const auto cut = static_cast<std::int64_t>(rng.next_u64() % (t - 1));
        SsdInputs mod = in;
        for (std::int64_t h = 0; h < 2; ++h) {
            for (std::int64_t s = cut + 1; s < t; ++s) {
                for (std::int64_t j = 0; j < 6; ++j) {
                    mod.q.at(h, s, j) = static_cast<float>(rng.uniform(-9, 9));
                    mod.k.at(h, s, j) = static_cast<float>(rng.uniform(-9, 9));
                }
                for (std::int64_t pp = 0; pp < 3; ++pp) {
                    mod.v.at(h, s, pp) = static_cast<float>(rng.uniform(-9, 9));
                }
                mod.decay.a.at(h, s) = static_cast<float>(rng.uniform(0.01, 1.0));
            }
        }
        auto check_prefix = [&](const Tensor& a, const Tensor& b) {
            for (std::int64_t h = 0; h < 2; ++h) {
                for (std::int64_t s = 0; s <= cut; ++s) {
                    for (std::int64_t pp = 0; pp < 3; ++pp) {
                        CHECK(std::abs(a.at(h, s, pp) - b.at(h, s, pp)) <= 1e-6);
                    }
                }
            }
        };
        check_prefix(ssm_recurrence_scan(in), ssm_recurrence_scan(mod));
        check_prefix(ssd_quadratic(in), ssd_quadratic(mod));
        check_prefix(ssd_chunked(in, 5), ssd_chunked(mod, 5));
    }
}

TEST_CASE("bench cross-check machinery") {
    SsdConfig cfg;
    SsdBenchResult r = run_ssd_bench(cfg, {32, 64}, 1, 5);
    REQUIRE(r.rows.size() == 6);
    CHECK(r.rows[0].formulation == "recurrence");
    CHECK(r.rows[2].formulation == "quadratic");
    CHECK(r.rows[4].formulation == "chunked");
    CHECK(r.max_rel_err < 1e-4);
    for (const auto& row : r.rows) CHECK(row.wall_ns > 0);
    const std::string csv = bench_csv(r);
    CHECK(csv.rfind("formulation,seq_len,wall_ns\n", 0) == 0);
}

}  // TEST_SUITE
