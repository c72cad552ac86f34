#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gia/tensor.hpp"

namespace gia {

// A named, group-tagged leaf tensor. Trainability lives on the tensor's
// requires_grad flag: frozen parameters never receive gradients and the
// optimizer never touches them.
struct Parameter {
    Tensor value;
    std::string name;
    std::string group;

    bool trainable() const { return value.requires_grad(); }
};

using ParamRefs = std::vector<Parameter*>;

// Fills with Gaussian(0, stddev) draws seeded by (master, parameter name), so
// a parameter's init depends only on its position in the model, not on what
// else was built around it.
void init_gaussian(Parameter& p, std::uint64_t master_seed, double stddev = 0.02);

class Affine {
public:
    Affine() = default;
    Affine(std::size_t d_in, std::size_t d_out);

    void set_name(const std::string& prefix, const std::string& group);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);
    void copy_data_from(const Affine& other);

    // x: tokens x d_in -> tokens x d_out, computed as x W^T + b per token.
    Tensor forward(Tape& t, const Tensor& x) const;

    std::size_t input_dim() const { return weight.value.cols(); }
    std::size_t output_dim() const { return weight.value.rows(); }

    Parameter weight; // d_out x d_in
    Parameter bias;   // d_out
};

class LayerNorm {
public:
    LayerNorm() = default;
    explicit LayerNorm(std::size_t width);

    void set_name(const std::string& prefix, const std::string& group);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    Tensor forward(Tape& t, const Tensor& x) const;

    Parameter gain;  // ones at init
    Parameter shift; // zeros at init
    double eps = 1e-5;
};

// Two affine layers with a rectifier in between (d -> hidden -> d). Used both
// as the encoder FFN (hidden = 4d) and as the expert bodies.
class FeedForward {
public:
    FeedForward() = default;
    FeedForward(std::size_t width, std::size_t hidden);

    void set_name(const std::string& prefix, const std::string& group);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);
    void copy_data_from(const FeedForward& other);

    Tensor forward(Tape& t, const Tensor& x) const;

    Affine fc1, fc2;
};

class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(std::size_t width, std::size_t heads);

    void set_name(const std::string& prefix, const std::string& group);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    Tensor forward(Tape& t, const Tensor& x) const;

    struct HeadProj {
        Affine q, k, v;
    };
    std::vector<HeadProj> heads;
    Affine out;
    double score_scale = 1.0; // 1/sqrt(head width)
};

class MoAELayer;
class RouterProbe;

// Pre-norm residual block: x + attn(norm1(x)), then + ffn(norm2(.)). The FFN
// slot is either a plain FeedForward or a MoAE layer; the residual path is
// identical in both cases.
class TransformerBlock {
public:
    TransformerBlock();
    TransformerBlock(TransformerBlock&&) noexcept;
    TransformerBlock& operator=(TransformerBlock&&) noexcept;
    ~TransformerBlock();

    static TransformerBlock plain(std::size_t width, std::size_t heads,
                                  std::size_t ffn_hidden);
    static TransformerBlock with_moae(std::size_t width, std::size_t heads,
                                      std::size_t ffn_hidden, std::size_t n_experts);

    void set_name(const std::string& prefix);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    Tensor forward(Tape& t, const Tensor& x, RouterProbe* probe = nullptr,
                   std::size_t layer_index = 0) const;

    bool has_moae() const { return static_cast<bool>(moae_); }
    MoAELayer* moae() { return moae_.get(); }
    const MoAELayer* moae() const { return moae_.get(); }

    LayerNorm norm1, norm2;
    MultiHeadAttention attn;
    std::unique_ptr<FeedForward> ffn_;
    std::unique_ptr<MoAELayer> moae_;
};

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t vocab, std::size_t width);

    void set_name(const std::string& prefix, const std::string& group);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    Tensor forward(Tape& t, const std::vector<std::size_t>& ids) const;

    std::size_t vocab() const { return table.value.rows(); }

    Parameter table; // vocab x width
};

// Which parameter groups are trainable. A default-constructed policy (no
// explicit list) resolves to the standard setup: tune the MoAE pieces plus
// the adapter, level weights and temperature; freeze everything else.
struct FreezePolicy {
    std::optional<std::vector<std::string>> trainable_groups;

    static FreezePolicy defaults() { return {}; }
    static FreezePolicy freeze_all() { return {std::vector<std::string>{}}; }
    static FreezePolicy trainable_only(std::vector<std::string> groups) {
        return {std::move(groups)};
    }
};

extern const std::vector<std::string> kDefaultTrainableGroups;

std::vector<std::string> groups_present(const ParamRefs& params);

// Applies the policy. An explicit list may only name groups that exist in
// `params`; unknown names raise ConfigError.
void set_trainable(const ParamRefs& params, const FreezePolicy& policy);

std::size_t total_parameter_count(const ParamRefs& params);

} // namespace gia
