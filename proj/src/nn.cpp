#include "gia/nn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gia/moae.hpp"
#include "gia/rng.hpp"

namespace gia {

void init_gaussian(Parameter& p, std::uint64_t master_seed, double stddev) {
    auto rng = make_rng(master_seed, p.name);
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : p.value.data()) v = dist(rng);
}

// --- Affine -----------------------------------------------------------------

Affine::Affine(std::size_t d_in, std::size_t d_out) {
    weight.value = Tensor::zeros({d_out, d_in});
    bias.value = Tensor::zeros({d_out});
}

void Affine::set_name(const std::string& prefix, const std::string& group) {
    weight.name = prefix + ".weight";
    weight.group = group;
    bias.name = prefix + ".bias";
    bias.group = group;
}

void Affine::init(std::uint64_t master_seed) {
    init_gaussian(weight, master_seed);
    std::fill(bias.value.data().begin(), bias.value.data().end(), 0.0);
}

void Affine::collect(ParamRefs& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

void Affine::copy_data_from(const Affine& other) {
    weight.value.data() = other.weight.value.data();
    bias.value.data() = other.bias.value.data();
}

Tensor Affine::forward(Tape& t, const Tensor& x) const {
    return t.add_rowvec(t.matmul_nt(x, weight.value), bias.value);
}

// --- LayerNorm ---------------------------------------------------------------

LayerNorm::LayerNorm(std::size_t width) {
    gain.value = Tensor::full({width}, 1.0);
    shift.value = Tensor::zeros({width});
}

void LayerNorm::set_name(const std::string& prefix, const std::string& group) {
    gain.name = prefix + ".gain";
    gain.group = group;
    shift.name = prefix + ".shift";
    shift.group = group;
}

void LayerNorm::init(std::uint64_t) {
    std::fill(gain.value.data().begin(), gain.value.data().end(), 1.0);
    std::fill(shift.value.data().begin(), shift.value.data().end(), 0.0);
}

void LayerNorm::collect(ParamRefs& out) {
    out.push_back(&gain);
    out.push_back(&shift);
}

Tensor LayerNorm::forward(Tape& t, const Tensor& x) const {
    return t.layer_norm(x, gain.value, shift.value, eps);
}

// --- FeedForward -------------------------------------------------------------

FeedForward::FeedForward(std::size_t width, std::size_t hidden)
    : fc1(width, hidden), fc2(hidden, width) {}

void FeedForward::set_name(const std::string& prefix, const std::string& group) {
    fc1.set_name(prefix + ".fc1", group);
    fc2.set_name(prefix + ".fc2", group);
}

void FeedForward::init(std::uint64_t master_seed) {
    fc1.init(master_seed);
    fc2.init(master_seed);
}

void FeedForward::collect(ParamRefs& out) {
    fc1.collect(out);
    fc2.collect(out);
}

void FeedForward::copy_data_from(const FeedForward& other) {
    fc1.copy_data_from(other.fc1);
    fc2.copy_data_from(other.fc2);
}

Tensor FeedForward::forward(Tape& t, const Tensor& x) const {
    return fc2.forward(t, t.relu(fc1.forward(t, x)));
}

// --- MultiHeadAttention --------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(std::size_t width, std::size_t n_heads) {
    if (n_heads == 0 || width % n_heads != 0) {
        throw ConfigError("attention: width " + std::to_string(width) +
                          " not divisible by " + std::to_string(n_heads) + " heads");
    }
    const std::size_t dh = width / n_heads;
    heads.resize(n_heads);
    for (auto& h : heads) {
        h.q = Affine(width, dh);
        h.k = Affine(width, dh);
        h.v = Affine(width, dh);
    }
    out = Affine(width, width);
    score_scale = 1.0 / std::sqrt(static_cast<double>(dh));
}

void MultiHeadAttention::set_name(const std::string& prefix, const std::string& group) {
    for (std::size_t i = 0; i < heads.size(); ++i) {
        const std::string hp = prefix + ".h" + std::to_string(i);
        heads[i].q.set_name(hp + ".q", group);
        heads[i].k.set_name(hp + ".k", group);
        heads[i].v.set_name(hp + ".v", group);
    }
    out.set_name(prefix + ".out", group);
}

void MultiHeadAttention::init(std::uint64_t master_seed) {
    for (auto& h : heads) {
        h.q.init(master_seed);
        h.k.init(master_seed);
        h.v.init(master_seed);
    }
    out.init(master_seed);
}

void MultiHeadAttention::collect(ParamRefs& o) {
    for (auto& h : heads) {
        h.q.collect(o);
        h.k.collect(o);
        h.v.collect(o);
    }
    out.collect(o);
}

Tensor MultiHeadAttention::forward(Tape& t, const Tensor& x) const {
    std::vector<Tensor> ctx;
    ctx.reserve(heads.size());
    for (const auto& h : heads) {
        Tensor q = h.q.forward(t, x);
        Tensor k = h.k.forward(t, x);
        Tensor v = h.v.forward(t, x);
        Tensor scores = t.scale(t.matmul_nt(q, k), score_scale);
        Tensor attn = t.softmax(scores, 1);
        ctx.push_back(t.matmul(attn, v));
    }
    return out.forward(t, t.concat_cols(ctx));
}

// --- TransformerBlock -----------------------------------------------------------

TransformerBlock::TransformerBlock() = default;
TransformerBlock::TransformerBlock(TransformerBlock&&) noexcept = default;
TransformerBlock& TransformerBlock::operator=(TransformerBlock&&) noexcept = default;
TransformerBlock::~TransformerBlock() = default;

TransformerBlock TransformerBlock::plain(std::size_t width, std::size_t heads,
                                         std::size_t ffn_hidden) {
    TransformerBlock b;
    b.norm1 = LayerNorm(width);
    b.norm2 = LayerNorm(width);
    b.attn = MultiHeadAttention(width, heads);
    b.ffn_ = std::make_unique<FeedForward>(width, ffn_hidden);
    return b;
}

TransformerBlock TransformerBlock::with_moae(std::size_t width, std::size_t heads,
                                             std::size_t ffn_hidden,
                                             std::size_t n_experts) {
    TransformerBlock b;
    b.norm1 = LayerNorm(width);
    b.norm2 = LayerNorm(width);
    b.attn = MultiHeadAttention(width, heads);
    b.moae_ = std::make_unique<MoAELayer>(width, ffn_hidden, n_experts);
    return b;
}

void TransformerBlock::set_name(const std::string& prefix) {
    norm1.set_name(prefix + ".norm1", "backbone");
    norm2.set_name(prefix + ".norm2", "backbone");
    attn.set_name(prefix + ".attn", "backbone");
    if (ffn_) ffn_->set_name(prefix + ".ffn", "backbone");
    if (moae_) moae_->set_name(prefix);
}

void TransformerBlock::init(std::uint64_t master_seed) {
    norm1.init(master_seed);
    norm2.init(master_seed);
    attn.init(master_seed);
    if (ffn_) ffn_->init(master_seed);
    if (moae_) moae_->init(master_seed);
}

void TransformerBlock::collect(ParamRefs& out) {
    norm1.collect(out);
    attn.collect(out);
    norm2.collect(out);
    if (ffn_) ffn_->collect(out);
    if (moae_) moae_->collect(out);
}

Tensor TransformerBlock::forward(Tape& t, const Tensor& x, RouterProbe* probe,
                                 std::size_t layer_index) const {
    Tensor h = t.add(x, attn.forward(t, norm1.forward(t, x)));
    Tensor normed = norm2.forward(t, h);
    Tensor f = moae_ ? moae_->forward(t, normed, probe, layer_index)
                     : ffn_->forward(t, normed);
    return t.add(h, f);
}

// --- EmbeddingTable --------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::size_t vocab, std::size_t width) {
    table.value = Tensor::zeros({vocab, width});
}

void EmbeddingTable::set_name(const std::string& prefix, const std::string& group) {
    table.name = prefix;
    table.group = group;
}

void EmbeddingTable::init(std::uint64_t master_seed) {
    init_gaussian(table, master_seed);
}

void EmbeddingTable::collect(ParamRefs& out) {
    out.push_back(&table);
}

Tensor EmbeddingTable::forward(Tape& t, const std::vector<std::size_t>& ids) const {
    return t.embed(table.value, ids);
}

// --- freeze policy ------------------------------------------------------------------

const std::vector<std::string> kDefaultTrainableGroups = {
    "adaptive-experts", "router", "sigma", "adapter", "C", "tau",
};

std::vector<std::string> groups_present(const ParamRefs& params) {
    std::set<std::string> seen;
    for (const Parameter* p : params) seen.insert(p->group);
    return {seen.begin(), seen.end()};
}

void set_trainable(const ParamRefs& params, const FreezePolicy& policy) {
    std::set<std::string> present;
    for (const Parameter* p : params) present.insert(p->group);

    std::set<std::string> trainable;
    if (policy.trainable_groups.has_value()) {
        for (const std::string& g : *policy.trainable_groups) {
            if (!present.count(g)) {
                throw ConfigError("set_trainable: unknown parameter group '" + g + "'");
            }
            trainable.insert(g);
        }
    } else {
        // Default: tune the MoAE pieces and the score head, keep the rest
        // frozen. Groups absent from this model are simply skipped.
        for (const std::string& g : kDefaultTrainableGroups) {
            if (present.count(g)) trainable.insert(g);
        }
    }
    for (Parameter* p : params) {
        p->value.set_requires_grad(trainable.count(p->group) > 0);
        if (!p->value.requires_grad()) p->value.zero_grad();
    }
}

std::size_t total_parameter_count(const ParamRefs& params) {
    std::size_t n = 0;
    for (const Parameter* p : params) n += p->value.numel();
    return n;
}

} // namespace gia
