#include "gia/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "gia/errors.hpp"

namespace gia {

namespace {

const std::array<std::string, 5> kLevels = {"bad", "poor", "fair", "good", "perfect"};

PromptSet templated(const std::string& scene_word, const std::string& axis) {
    PromptSet set;
    for (std::size_t i = 0; i < 5; ++i) {
        set.levels[i] = scene_word + " " + kLevels[i] + "-" + axis + " image";
    }
    return set;
}

} // namespace

std::string scene_to_string(Scene s) {
    switch (s) {
    case Scene::NaturalQuality: return "natural-quality";
    case Scene::AiGeneratedQuality: return "ai-generated-quality";
    case Scene::UnderwaterQuality: return "underwater-quality";
    case Scene::FaceQuality: return "face-quality";
    case Scene::NaturalAesthetics: return "natural-aesthetics";
    case Scene::General: return "general";
    }
    throw ConfigError("scene_to_string: invalid scene");
}

Scene scene_from_string(const std::string& key) {
    for (Scene s : all_scenes()) {
        if (scene_to_string(s) == key) return s;
    }
    throw InputError("unknown scene '" + key + "'");
}

std::vector<Scene> all_scenes() {
    return {Scene::NaturalQuality,   Scene::AiGeneratedQuality,
            Scene::UnderwaterQuality, Scene::FaceQuality,
            Scene::NaturalAesthetics, Scene::General};
}

PromptSet prompts_for_scene(Scene scene) {
    switch (scene) {
    case Scene::NaturalQuality: return templated("natural", "quality");
    case Scene::AiGeneratedQuality: return templated("AI-generated", "quality");
    case Scene::UnderwaterQuality: return templated("underwater", "quality");
    case Scene::FaceQuality: return templated("face", "quality");
    case Scene::NaturalAesthetics: return templated("natural", "aesthetics");
    case Scene::General: {
        PromptSet set;
        for (std::size_t i = 0; i < 5; ++i) set.levels[i] = kLevels[i] + " image";
        return set;
    }
    }
    throw ConfigError("prompts_for_scene: invalid scene");
}

std::string prompt_strategy_to_string(PromptStrategy s) {
    switch (s) {
    case PromptStrategy::Sdp: return "sdp";
    case PromptStrategy::Naive: return "naive";
    case PromptStrategy::General: return "general";
    case PromptStrategy::Quality: return "quality";
    }
    throw ConfigError("prompt_strategy_to_string: invalid strategy");
}

PromptStrategy prompt_strategy_from_string(const std::string& key) {
    if (key == "sdp") return PromptStrategy::Sdp;
    if (key == "naive") return PromptStrategy::Naive;
    if (key == "general") return PromptStrategy::General;
    if (key == "quality") return PromptStrategy::Quality;
    throw InputError("unknown prompt strategy '" + key + "'");
}

PromptSet prompts_for(PromptStrategy strategy, Scene scene) {
    switch (strategy) {
    case PromptStrategy::Sdp: return prompts_for_scene(scene);
    case PromptStrategy::Naive: return prompts_for_scene(Scene::General);
    case PromptStrategy::General: return templated("general", "quality");
    case PromptStrategy::Quality: {
        PromptSet set;
        for (std::size_t i = 0; i < 5; ++i) {
            set.levels[i] = kLevels[i] + "-quality image";
        }
        return set;
    }
    }
    throw ConfigError("prompts_for: invalid strategy");
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        ids_[words_[i]] = i + 2; // 0 = pad, 1 = unknown
    }
}

const Vocabulary& Vocabulary::prompt_lexicon() {
    static const Vocabulary vocab({
        "bad", "poor", "fair", "good", "perfect",
        "image", "quality", "aesthetics",
        "natural", "ai", "generated", "underwater", "face", "general",
    });
    return vocab;
}

std::vector<std::size_t> Vocabulary::tokenize(const std::string& prompt) const {
    std::vector<std::size_t> ids;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        auto it = ids_.find(word);
        ids.push_back(it == ids_.end() ? unknown_id() : it->second);
        word.clear();
    };
    for (char ch : prompt) {
        if (ch == ' ' || ch == '\t' || ch == '-') {
            flush();
        } else {
            word.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    flush();
    return ids;
}

} // namespace gia
