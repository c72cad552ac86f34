#include "gia/model.hpp"

#include <numeric>

#include "gia/rng.hpp"

namespace gia {

void EncoderConfig::validate() const {
    if (layers == 0) throw ConfigError("config: need at least one encoder layer");
    if (moae_layers > layers) {
        throw ConfigError("config: moae_layers " + std::to_string(moae_layers) +
                          " exceeds layers " + std::to_string(layers));
    }
    if (width == 0 || heads == 0 || width % heads != 0) {
        throw ConfigError("config: width " + std::to_string(width) +
                          " must be a positive multiple of heads " +
                          std::to_string(heads));
    }
    if (tau <= 0.0) throw ConfigError("config: tau must be positive");
    if (patch_grid == 0 || channels == 0) {
        throw ConfigError("config: patch grid and channels must be positive");
    }
    if (vocab < 2) throw ConfigError("config: vocab must cover pad/unknown");
    if (max_tokens == 0) throw ConfigError("config: max_tokens must be positive");
}

// --- Encoder -----------------------------------------------------------------

Encoder::Encoder(Kind k, const EncoderConfig& cfg) : kind(k) {
    width_ = cfg.width;
    pooling = cfg.pooling;
    const std::size_t n_positions =
        kind == Kind::Visual ? cfg.patch_count() : cfg.max_tokens;
    if (kind == Kind::Visual) {
        patch_embed = Affine(cfg.channels, cfg.width);
    } else {
        token_embed = EmbeddingTable(cfg.vocab, cfg.width);
    }
    positions.value = Tensor::zeros({n_positions, cfg.width});

    const std::size_t k_moae = cfg.effective_moae_layers();
    blocks.reserve(cfg.layers);
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        const bool moae = i >= cfg.layers - k_moae;
        blocks.push_back(moae ? TransformerBlock::with_moae(cfg.width, cfg.heads,
                                                            cfg.ffn_hidden(),
                                                            cfg.n_experts)
                              : TransformerBlock::plain(cfg.width, cfg.heads,
                                                        cfg.ffn_hidden()));
        if (moae) blocks.back().moae()->routing = cfg.routing;
    }
    final_norm = LayerNorm(cfg.width);
}

void Encoder::set_name(const std::string& prefix) {
    if (kind == Kind::Visual) {
        patch_embed.set_name(prefix + ".patch_embed", "backbone");
    } else {
        token_embed.set_name(prefix + ".token_embed", "backbone");
    }
    positions.name = prefix + ".positions";
    positions.group = "backbone";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].set_name(prefix + ".block" + std::to_string(i));
    }
    final_norm.set_name(prefix + ".final_norm", "backbone");
}

void Encoder::init(std::uint64_t master_seed) {
    if (kind == Kind::Visual) {
        patch_embed.init(master_seed);
    } else {
        token_embed.init(master_seed);
    }
    init_gaussian(positions, master_seed);
    for (auto& b : blocks) b.init(master_seed);
    final_norm.init(master_seed);
}

void Encoder::collect(ParamRefs& out) {
    if (kind == Kind::Visual) {
        patch_embed.collect(out);
    } else {
        token_embed.collect(out);
    }
    out.push_back(&positions);
    for (auto& b : blocks) b.collect(out);
    final_norm.collect(out);
}

Tensor Encoder::run(Tape& t, Tensor x, RouterProbe* probe) const {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        x = blocks[i].forward(t, x, probe, i);
    }
    x = final_norm.forward(t, x);
    if (pooling == EncoderConfig::Pooling::FirstToken) {
        return t.reshape(t.take_row(x, 0), {1, width_});
    }
    return t.reshape(t.mean_axis(x, 0), {1, width_});
}

Tensor Encoder::encode_patches(Tape& t, const Tensor& patches,
                               RouterProbe* probe) const {
    if (kind != Kind::Visual) throw ContractError("encode_patches on text encoder");
    if (patches.rank() != 2 || patches.rows() != positions.value.rows() ||
        patches.cols() != patch_embed.input_dim()) {
        throw DimensionError("encode_patches: image " + shape_str(patches.shape()) +
                             " does not match expected [" +
                             std::to_string(positions.value.rows()) + "x" +
                             std::to_string(patch_embed.input_dim()) + "]");
    }
    std::vector<std::size_t> all(patches.rows());
    std::iota(all.begin(), all.end(), 0);
    Tensor x = t.add(patch_embed.forward(t, patches),
                     t.embed(positions.value, all));
    return run(t, x, probe);
}

Tensor Encoder::encode_patch_subset(Tape& t, const Tensor& patches,
                                    const std::vector<std::size_t>& patch_indices,
                                    RouterProbe* probe) const {
    if (kind != Kind::Visual) throw ContractError("encode_patch_subset on text encoder");
    if (patch_indices.empty()) throw DomainError("encode_patch_subset: empty view");
    const std::size_t c = patch_embed.input_dim();
    Tensor sub = Tensor::zeros({patch_indices.size(), c});
    for (std::size_t i = 0; i < patch_indices.size(); ++i) {
        if (patch_indices[i] >= patches.rows()) {
            throw InputError("encode_patch_subset: patch index out of range");
        }
        std::copy_n(patches.data().data() + patch_indices[i] * c, c,
                    sub.data().data() + i * c);
    }
    Tensor x = t.add(patch_embed.forward(t, sub),
                     t.embed(positions.value, patch_indices));
    return run(t, x, probe);
}

Tensor Encoder::encode_tokens(Tape& t, const std::vector<std::size_t>& ids,
                              RouterProbe* probe) const {
    if (kind != Kind::Text) throw ContractError("encode_tokens on visual encoder");
    if (ids.empty()) throw InputError("encode_tokens: empty prompt");
    if (ids.size() > positions.value.rows()) {
        throw InputError("encode_tokens: prompt length " + std::to_string(ids.size()) +
                         " exceeds maximum " + std::to_string(positions.value.rows()));
    }
    for (std::size_t id : ids) {
        if (id >= token_embed.vocab()) {
            throw InputError("encode_tokens: token id " + std::to_string(id) +
                             " outside vocabulary of " +
                             std::to_string(token_embed.vocab()));
        }
    }
    std::vector<std::size_t> pos_ids(ids.size());
    std::iota(pos_ids.begin(), pos_ids.end(), 0);
    Tensor x = t.add(token_embed.forward(t, ids), t.embed(positions.value, pos_ids));
    return run(t, x, probe);
}

std::vector<MoAELayer*> Encoder::moae_layers() {
    std::vector<MoAELayer*> out;
    for (auto& b : blocks) {
        if (b.has_moae()) out.push_back(b.moae());
    }
    return out;
}

std::vector<const MoAELayer*> Encoder::moae_layers() const {
    std::vector<const MoAELayer*> out;
    for (const auto& b : blocks) {
        if (b.has_moae()) out.push_back(b.moae());
    }
    return out;
}

bool Encoder::any_trainable() const {
    ParamRefs params;
    const_cast<Encoder*>(this)->collect(params);
    for (const Parameter* p : params) {
        if (p->trainable()) return true;
    }
    return false;
}

// --- ScoreHead ----------------------------------------------------------------

ScoreHead::ScoreHead(const EncoderConfig& cfg)
    : fc1(cfg.width, cfg.width), fc2(cfg.width, cfg.width) {
    levels.value = Tensor::from_data({5}, {0.2, 0.4, 0.6, 0.8, 1.0});
    temperature.value = Tensor::scalar(cfg.tau);
}

void ScoreHead::set_name(const std::string& prefix) {
    fc1.set_name(prefix + ".adapter.fc1", "adapter");
    fc2.set_name(prefix + ".adapter.fc2", "adapter");
    levels.name = prefix + ".levels";
    levels.group = "C";
    temperature.name = prefix + ".temperature";
    temperature.group = "tau";
}

void ScoreHead::init(std::uint64_t master_seed) {
    fc1.init(master_seed);
    fc2.init(master_seed);
    levels.value.data() = {0.2, 0.4, 0.6, 0.8, 1.0};
    // temperature keeps its configured value
}

void ScoreHead::collect(ParamRefs& out) {
    fc1.collect(out);
    fc2.collect(out);
    out.push_back(&levels);
    out.push_back(&temperature);
}

Tensor ScoreHead::adapter_forward(Tape& t, const Tensor& feature) const {
    return fc2.forward(t, t.relu(fc1.forward(t, feature)));
}

Tensor ScoreHead::combine_similarities(Tape& t, const Tensor& sims) const {
    if (sims.numel() != 5) {
        throw ConfigError("combine_similarities: expected 5 similarities, got " +
                          std::to_string(sims.numel()));
    }
    Tensor scaled = t.div_scalar(sims, temperature.value);
    Tensor probs = t.softmax(scaled, sims.rank() == 2 ? 1 : 0);
    return t.dot(probs, levels.value);
}

Tensor ScoreHead::score(Tape& t, const Tensor& image_feature,
                        const std::vector<Tensor>& prompt_features) const {
    if (prompt_features.size() != 5) {
        throw ConfigError("score: prompt set must have exactly 5 levels, got " +
                          std::to_string(prompt_features.size()));
    }
    Tensor adapted = adapter_forward(t, image_feature);
    Tensor anchors = t.concat_rows(prompt_features); // 5 x d
    Tensor sims = t.matmul_nt(adapted, anchors);     // 1 x 5
    return combine_similarities(t, sims);
}

// --- GammaModel ------------------------------------------------------------------

GammaModel::GammaModel(const EncoderConfig& cfg)
    : config(cfg),
      visual(Encoder::Kind::Visual, cfg),
      text(Encoder::Kind::Text, cfg),
      head(cfg) {
    visual.set_name("visual");
    text.set_name("text");
    head.set_name("head");
}

GammaModel GammaModel::build(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    GammaModel m(cfg);
    m.visual.init(seed);
    m.text.init(seed);
    m.head.init(seed);
    m.apply_freeze_policy(FreezePolicy::defaults());
    return m;
}

Tensor GammaModel::encode_image(Tape& t, const Tensor& image,
                                RouterProbe* probe) const {
    return visual.encode_patches(t, image, probe);
}

Tensor GammaModel::encode_image_view(Tape& t, const Tensor& image,
                                     const std::vector<std::size_t>& idx) const {
    return visual.encode_patch_subset(t, image, idx);
}

Tensor GammaModel::encode_text(Tape& t, const std::vector<std::size_t>& ids) const {
    return text.encode_tokens(t, ids);
}

std::vector<Tensor> GammaModel::encode_prompt_set(Tape& t, const PromptSet& set) const {
    const Vocabulary& vocab = Vocabulary::prompt_lexicon();
    std::vector<Tensor> feats;
    feats.reserve(5);
    for (const std::string& prompt : set.levels) {
        feats.push_back(encode_text(t, vocab.tokenize(prompt)));
    }
    return feats;
}

Tensor GammaModel::predict_score(Tape& t, const Tensor& image,
                                 const std::vector<Tensor>& prompt_features,
                                 RouterProbe* probe) const {
    Tensor feature = encode_image(t, image, probe);
    return head.score(t, feature, prompt_features);
}

Tensor GammaModel::predict_score(Tape& t, const Tensor& image,
                                 const PromptSet& set) const {
    return head.score(t, encode_image(t, image), encode_prompt_set(t, set));
}

ParamRefs GammaModel::parameters() {
    ParamRefs out;
    visual.collect(out);
    text.collect(out);
    head.collect(out);
    return out;
}

void GammaModel::apply_freeze_policy(const FreezePolicy& policy) {
    ParamRefs params = parameters();
    set_trainable(params, policy);
    if (!config.levels_trainable) {
        for (Parameter* p : params) {
            if (p->group == "C") {
                p->value.set_requires_grad(false);
                p->value.zero_grad();
            }
        }
    }
}

} // namespace gia
