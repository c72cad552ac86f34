#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gia/nn.hpp"
#include "gia/tensor.hpp"

namespace gia {

// Per-token mixture weights over the adaptive experts; every row is a
// probability vector.
struct RouterOutput {
    Tensor weights; // tokens x n
};

// Collects router weights during a forward pass, keyed by encoder layer
// index. Used for the per-dataset activation profiles.
class RouterProbe {
public:
    void record(std::size_t layer_index, const Tensor& weights);

    // Mean weight vector over all recorded tokens for one layer.
    std::vector<double> mean_weights(std::size_t layer_index) const;
    const std::map<std::size_t, std::vector<double>>& sums() const { return sums_; }
    const std::map<std::size_t, std::size_t>& token_counts() const { return counts_; }

private:
    std::map<std::size_t, std::vector<double>> sums_;
    std::map<std::size_t, std::size_t> counts_;
};

// Mixture of assessment experts: one frozen shared FFN carrying the common
// behavior, n tunable copies of it specializing per input, a linear softmax
// router weighting the copies, and a zero-initialized scalar that merges the
// adaptive mixture back onto the shared output. With sigma at its initial
// zero the layer is exactly the shared FFN.
class MoAELayer {
public:
    enum class Routing { Token, Pooled };

    MoAELayer() = default;
    MoAELayer(std::size_t width, std::size_t hidden, std::size_t n_experts);

    void set_name(const std::string& prefix);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    // Copies the shared expert's weights into every adaptive expert (fresh
    // storage; training diverges them independently afterwards).
    void init_adaptive_from_shared();

    RouterOutput route(Tape& t, const Tensor& x) const;
    Tensor forward(Tape& t, const Tensor& x, RouterProbe* probe = nullptr,
                   std::size_t layer_index = 0) const;

    std::size_t n_experts() const { return adaptive.size(); }
    std::size_t width() const { return shared.fc1.input_dim(); }
    int forced_expert() const { return forced_; }

    FeedForward shared;
    std::vector<FeedForward> adaptive;
    Parameter router_w; // n x d
    Parameter sigma;    // scalar, zero at construction
    Routing routing = Routing::Token;

private:
    friend class ForcedExpertGuard;
    int forced_ = -1;
};

// Scoped router override: while alive, the layer routes everything to one
// expert (one-hot weights); destruction restores the learned routing. Keep
// the model otherwise read-only while a guard is active.
class ForcedExpertGuard {
public:
    ForcedExpertGuard(MoAELayer& layer, std::size_t index);
    ~ForcedExpertGuard();
    ForcedExpertGuard(const ForcedExpertGuard&) = delete;
    ForcedExpertGuard& operator=(const ForcedExpertGuard&) = delete;

private:
    MoAELayer& layer_;
    int prev_;
};

} // namespace gia
