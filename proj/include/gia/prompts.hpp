#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace gia {

// Scene groups for the scene-based differential prompts. Every dataset maps
// to exactly one scene; "general" carries the naive prompt set used as the
// ablation baseline.
enum class Scene {
    NaturalQuality,
    AiGeneratedQuality,
    UnderwaterQuality,
    FaceQuality,
    NaturalAesthetics,
    General,
};

constexpr std::size_t kSceneCount = 6;

std::string scene_to_string(Scene s);
Scene scene_from_string(const std::string& key);
std::vector<Scene> all_scenes();

// Five level prompts, ordered bad -> poor -> fair -> good -> perfect.
struct PromptSet {
    std::array<std::string, 5> levels;

    bool operator==(const PromptSet&) const = default;
};

PromptSet prompts_for_scene(Scene scene);

enum class PromptStrategy { Sdp, Naive, General, Quality };

std::string prompt_strategy_to_string(PromptStrategy s);
PromptStrategy prompt_strategy_from_string(const std::string& key);

// SDP picks the scene's set; the other strategies use one fixed set for every
// sample regardless of scene.
PromptSet prompts_for(PromptStrategy strategy, Scene scene);

// Closed vocabulary over the prompt lexicon. Tokenization lowercases and
// splits on whitespace and hyphens; unknown words map to the unknown id.
class Vocabulary {
public:
    static const Vocabulary& prompt_lexicon();

    std::vector<std::size_t> tokenize(const std::string& prompt) const;

    std::size_t size() const { return words_.size() + 2; }
    static constexpr std::size_t pad_id() { return 0; }
    static constexpr std::size_t unknown_id() { return 1; }

private:
    explicit Vocabulary(std::vector<std::string> words);
    std::vector<std::string> words_;
    std::map<std::string, std::size_t> ids_;
};

} // namespace gia
