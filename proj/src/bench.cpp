#include "ssdpulse/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "ssdpulse/rng.hpp"

namespace ssdpulse {

SsdInputs random_ssd_inputs(const SsdConfig& cfg, std::int64_t seq_len,
                            std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    SsdInputs in;
    in.q = Tensor({cfg.n_heads, seq_len, cfg.d_state});
    in.k = Tensor({cfg.n_heads, seq_len, cfg.d_state});
    in.v = Tensor({cfg.n_heads, seq_len, cfg.d_head});
    in.decay.a = Tensor({cfg.n_heads, seq_len});
    for (Tensor* t : {&in.q, &in.k, &in.v}) {
        for (std::int64_t i = 0; i < t->numel(); ++i) {
            t->data()[i] = static_cast<float>(rng.uniform(-0.5, 0.5));
        }
    }
    for (std::int64_t i = 0; i < in.decay.a.numel(); ++i) {
        in.decay.a.data()[i] = static_cast<float>(rng.uniform(0.85, 0.999));
    }
    return in;
}

double max_rel_err(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_rel_err: shapes disagree: " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    double worst = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double x = a.data()[i], y = b.data()[i];
        const double denom = std::max({std::abs(x), std::abs(y), 1e-6});
        worst = std::max(worst, std::abs(x - y) / denom);
    }
    return worst;
}

namespace {

std::int64_t time_best_ns(const std::function<Tensor()>& fn, int reps, Tensor* out) {
    std::int64_t best = -1;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        Tensor y = fn();
        const auto t1 = std::chrono::steady_clock::now();
        const std::int64_t ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        if (best < 0 || ns < best) best = ns;
        if (r == 0 && out) *out = std::move(y);
    }
    return best;
}

}  // namespace

SsdBenchResult run_ssd_bench(const SsdConfig& cfg,
                             const std::vector<std::int64_t>& lengths, int reps,
                             std::uint64_t seed) {
    if (lengths.empty()) throw ArgumentError("bench: need at least one length");
    if (reps < 1) throw ArgumentError("bench: reps must be >= 1");
    SsdBenchResult res;

    struct Form {
        const char* name;
        std::function<Tensor(const SsdInputs&)> run;
    };
    const SsdConfig c = cfg;
    const std::vector<Form> forms = {
        {"recurrence", [](const SsdInputs& in) { return ssm_recurrence_scan(in); }},
        {"quadratic", [](const SsdInputs& in) { return ssd_quadratic(in); }},
        {"chunked",
         [c](const SsdInputs& in) { return ssd_chunked(in, c.chunk_size); }},
    };

    const std::int64_t t_min = *std::min_element(lengths.begin(), lengths.end());
    const std::int64_t t_max = *std::max_element(lengths.begin(), lengths.end());
    std::vector<std::vector<std::int64_t>> wall(
        forms.size(), std::vector<std::int64_t>(lengths.size(), 0));

    for (std::size_t li = 0; li < lengths.size(); ++li) {
        const std::int64_t t = lengths[li];
        SsdInputs in = random_ssd_inputs(cfg, t, seed + li);
        std::vector<Tensor> outs(forms.size());
        for (std::size_t fi = 0; fi < forms.size(); ++fi) {
            wall[fi][li] =
                time_best_ns([&] { return forms[fi].run(in); }, reps, &outs[fi]);
        }
        // agreement check on the outputs produced above
        for (std::size_t fi = 1; fi < forms.size(); ++fi) {
            res.max_rel_err =
                std::max(res.max_rel_err, max_rel_err(outs[0], outs[fi]));
        }
    }

    for (std::size_t fi = 0; fi < forms.size(); ++fi) {
        for (std::size_t li = 0; li < lengths.size(); ++li) {
            res.rows.push_back({forms[fi].name, lengths[li], wall[fi][li]});
        }
        double lo = 0.0, hi = 0.0;
        for (std::size_t li = 0; li < lengths.size(); ++li) {
            if (lengths[li] == t_min) lo = static_cast<double>(wall[fi][li]);
            if (lengths[li] == t_max) hi = static_cast<double>(wall[fi][li]);
        }
        const double ratio = lo > 0.0 ? hi / lo : 0.0;
        if (fi == 0) res.recurrence_ratio = ratio;
        if (fi == 1) res.quadratic_ratio = ratio;
        if (fi == 2) res.chunked_ratio = ratio;
    }
    return res;
}

std::string bench_csv(const SsdBenchResult& r) {
    std::ostringstream os;
    os << "formulation,seq_len,wall_ns\n";
    for (const auto& row : r.rows) {
        os << row.formulation << "," << row.seq_len << "," << row.wall_ns << "\n";
    }
    return os.str();
}

}  // namespace ssdpulse
