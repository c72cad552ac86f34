#include "gia/moae.hpp"

#include <algorithm>

namespace gia {

void RouterProbe::record(std::size_t layer_index, const Tensor& weights) {
    const std::size_t tokens = weights.rows();
    const std::size_t n = weights.cols();
    auto& sum = sums_[layer_index];
    if (sum.empty()) sum.assign(n, 0.0);
    for (std::size_t t = 0; t < tokens; ++t) {
        for (std::size_t i = 0; i < n; ++i) sum[i] += weights.at(t, i);
    }
    counts_[layer_index] += tokens;
}

std::vector<double> RouterProbe::mean_weights(std::size_t layer_index) const {
    auto it = sums_.find(layer_index);
    if (it == sums_.end()) return {};
    std::vector<double> mean = it->second;
    const double n = static_cast<double>(counts_.at(layer_index));
    for (double& v : mean) v /= n;
    return mean;
}

MoAELayer::MoAELayer(std::size_t width, std::size_t hidden, std::size_t n_experts)
    : shared(width, hidden) {
    if (n_experts == 0) {
        throw ConfigError("MoAELayer: needs at least one adaptive expert");
    }
    adaptive.reserve(n_experts);
    for (std::size_t i = 0; i < n_experts; ++i) {
        adaptive.emplace_back(width, hidden);
    }
    router_w.value = Tensor::zeros({n_experts, width});
    sigma.value = Tensor::scalar(0.0); // exact identity at construction
}

void MoAELayer::set_name(const std::string& prefix) {
    // The shared expert sits in the block's FFN slot, so it keeps the plain
    // FFN's name; a MoAE model and a plain model are position-compatible.
    shared.set_name(prefix + ".ffn", "shared-experts");
    for (std::size_t i = 0; i < adaptive.size(); ++i) {
        adaptive[i].set_name(prefix + ".adaptive" + std::to_string(i),
                             "adaptive-experts");
    }
    router_w.name = prefix + ".router.weight";
    router_w.group = "router";
    sigma.name = prefix + ".sigma";
    sigma.group = "sigma";
}

void MoAELayer::init(std::uint64_t master_seed) {
    shared.init(master_seed);
    init_gaussian(router_w, master_seed);
    sigma.value.data()[0] = 0.0;
    init_adaptive_from_shared();
}

void MoAELayer::collect(ParamRefs& out) {
    shared.collect(out);
    for (auto& e : adaptive) e.collect(out);
    out.push_back(&router_w);
    out.push_back(&sigma);
}

void MoAELayer::init_adaptive_from_shared() {
    for (auto& e : adaptive) e.copy_data_from(shared);
}

RouterOutput MoAELayer::route(Tape& t, const Tensor& x) const {
    if (x.cols() != width()) {
        throw DimensionError("route: input width " + shape_str(x.shape()) +
                             " does not match layer width " +
                             std::to_string(width()));
    }
    const std::size_t n = n_experts();
    if (forced_ >= 0) {
        // One-hot override, constant with respect to the tape.
        Tensor w = Tensor::zeros({x.rows(), n});
        for (std::size_t r = 0; r < x.rows(); ++r) {
            w.data()[r * n + static_cast<std::size_t>(forced_)] = 1.0;
        }
        return {w};
    }
    Tensor in = x;
    if (routing == Routing::Pooled) {
        in = t.reshape(t.mean_axis(x, 0), {1, width()});
    }
    Tensor logits = t.matmul_nt(in, router_w.value);
    Tensor w = t.softmax(logits, 1);
    if (routing == Routing::Pooled && x.rows() > 1) {
        std::vector<Tensor> rows(x.rows(), w);
        w = t.concat_rows(rows);
    }
    return {w};
}

Tensor MoAELayer::forward(Tape& t, const Tensor& x, RouterProbe* probe,
                          std::size_t layer_index) const {
    Tensor y_shared = shared.forward(t, x);
    RouterOutput g = route(t, x);
    if (probe) probe->record(layer_index, g.weights);

    Tensor y_adaptive;
    for (std::size_t i = 0; i < n_experts(); ++i) {
        Tensor yi = adaptive[i].forward(t, x);
        Tensor weighted = t.scale_rows(yi, t.slice_col(g.weights, i));
        y_adaptive = y_adaptive.defined() ? t.add(y_adaptive, weighted) : weighted;
    }
    return t.add(y_shared, t.mul_scalar(y_adaptive, sigma.value));
}

ForcedExpertGuard::ForcedExpertGuard(MoAELayer& layer, std::size_t index)
    : layer_(layer), prev_(layer.forced_) {
    if (index >= layer.n_experts()) {
        throw ConfigError("force_single_expert: index " + std::to_string(index) +
                          " out of range for " + std::to_string(layer.n_experts()) +
                          " experts");
    }
    layer_.forced_ = static_cast<int>(index);
}

ForcedExpertGuard::~ForcedExpertGuard() { layer_.forced_ = prev_; }

} // namespace gia
