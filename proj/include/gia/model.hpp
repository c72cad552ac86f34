#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gia/moae.hpp"
#include "gia/nn.hpp"
#include "gia/prompts.hpp"

namespace gia {

struct EncoderConfig {
    std::size_t layers = 6;      // L: blocks per encoder
    std::size_t moae_layers = 6; // K: trailing blocks carrying MoAE
    std::size_t width = 32;      // d
    std::size_t heads = 4;
    std::size_t n_experts = 3;   // 0 = baseline without MoAE
    double tau = 0.07;
    std::size_t patch_grid = 4;  // image = patch_grid^2 patches
    std::size_t channels = 8;
    std::size_t vocab = 16;      // prompt lexicon incl. pad/unknown
    std::size_t max_tokens = 16; // prompt length cap / position table size

    enum class Pooling { Mean, FirstToken };
    Pooling pooling = Pooling::Mean;
    MoAELayer::Routing routing = MoAELayer::Routing::Token;
    bool levels_trainable = true; // freeze C for ablations

    std::size_t ffn_hidden() const { return width * 4; }
    std::size_t patch_count() const { return patch_grid * patch_grid; }
    // With zero experts there is nothing to mix; such configs degrade to the
    // plain encoder regardless of K.
    std::size_t effective_moae_layers() const {
        return n_experts == 0 ? 0 : moae_layers;
    }

    void validate() const;
};

// One encoder branch: an input embedding (patch projection for images, token
// table for prompts), learned positions, L pre-norm blocks with MoAE in the
// last K, a final layer norm, and pooling down to a single feature row.
class Encoder {
public:
    enum class Kind { Visual, Text };

    Encoder() = default;
    Encoder(Kind kind, const EncoderConfig& cfg);

    void set_name(const std::string& prefix);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    Tensor encode_patches(Tape& t, const Tensor& patches,
                          RouterProbe* probe = nullptr) const;
    // View evaluation: run on a subset of patches, keeping each patch's
    // original position embedding.
    Tensor encode_patch_subset(Tape& t, const Tensor& patches,
                               const std::vector<std::size_t>& patch_indices,
                               RouterProbe* probe = nullptr) const;
    Tensor encode_tokens(Tape& t, const std::vector<std::size_t>& ids,
                         RouterProbe* probe = nullptr) const;

    std::vector<MoAELayer*> moae_layers();
    std::vector<const MoAELayer*> moae_layers() const;
    bool any_trainable() const;

    Kind kind = Kind::Visual;
    Affine patch_embed;         // visual
    EmbeddingTable token_embed; // text
    Parameter positions;        // max positions x d
    std::vector<TransformerBlock> blocks;
    LayerNorm final_norm;
    EncoderConfig::Pooling pooling = EncoderConfig::Pooling::Mean;

private:
    Tensor run(Tape& t, Tensor x, RouterProbe* probe) const;
    std::size_t width_ = 0;
};

// Adapter (two affine layers with a rectifier) on the image feature, learned
// level weights C over the five prompts, and the softmax temperature.
class ScoreHead {
public:
    ScoreHead() = default;
    explicit ScoreHead(const EncoderConfig& cfg);

    void set_name(const std::string& prefix);
    void init(std::uint64_t master_seed);
    void collect(ParamRefs& out);

    Tensor adapter_forward(Tape& t, const Tensor& feature) const; // 1 x d
    // q = sum_k C_k softmax(s / tau)_k for a row of five similarities.
    Tensor combine_similarities(Tape& t, const Tensor& sims) const;
    Tensor score(Tape& t, const Tensor& image_feature,
                 const std::vector<Tensor>& prompt_features) const;

    Affine fc1, fc2;
    Parameter levels;      // C, length 5, init [0.2 0.4 0.6 0.8 1.0]
    Parameter temperature; // tau
};

class GammaModel {
public:
    GammaModel() = default;
    explicit GammaModel(const EncoderConfig& cfg);

    // Deterministic construction: parameter init depends only on (seed,
    // parameter name), adaptive experts start as copies of the shared ones,
    // and the default freeze policy is applied.
    static GammaModel build(const EncoderConfig& cfg, std::uint64_t seed);

    Tensor encode_image(Tape& t, const Tensor& image,
                        RouterProbe* probe = nullptr) const;
    Tensor encode_image_view(Tape& t, const Tensor& image,
                             const std::vector<std::size_t>& patch_indices) const;
    Tensor encode_text(Tape& t, const std::vector<std::size_t>& token_ids) const;

    std::vector<Tensor> encode_prompt_set(Tape& t, const PromptSet& set) const;
    Tensor predict_score(Tape& t, const Tensor& image,
                         const std::vector<Tensor>& prompt_features,
                         RouterProbe* probe = nullptr) const;
    Tensor predict_score(Tape& t, const Tensor& image, const PromptSet& set) const;

    // Fresh walk in checkpoint order: visual, text, head.
    ParamRefs parameters();

    void apply_freeze_policy(const FreezePolicy& policy);
    bool text_encoder_trainable() const { return text.any_trainable(); }

    std::vector<MoAELayer*> visual_moae_layers() { return visual.moae_layers(); }
    std::vector<MoAELayer*> text_moae_layers() { return text.moae_layers(); }

    EncoderConfig config;
    Encoder visual;
    Encoder text;
    ScoreHead head;
};

} // namespace gia
