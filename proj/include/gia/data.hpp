#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gia/prompts.hpp"
#include "gia/tensor.hpp"

namespace gia {

enum class Polarity { HigherBetter, HigherWorse };

std::string polarity_to_string(Polarity p); // "mos" / "dmos"
Polarity polarity_from_string(const std::string& key);

struct DatasetSpec {
    std::string name;
    Scene scene = Scene::General;
    double mos_low = 0.0;
    double mos_high = 1.0;
    Polarity polarity = Polarity::HigherBetter;
    std::size_t size = 0;
};

// Min-max scale into [0,1]; DMOS-style scores are flipped so that higher
// always means better downstream.
double normalize_mos(const DatasetSpec& spec, double raw);

struct Sample {
    Tensor image; // patch_count x channels
    double raw_mos = 0.0;
    double norm_mos = 0.0;
    std::string dataset;
    Scene scene = Scene::General;
    // Ground-truth latent quality for synthetic data; NaN when unknown.
    double latent = std::numeric_limits<double>::quiet_NaN();
    std::size_t id = 0;
};

struct SyntheticDataset {
    DatasetSpec spec;
    std::vector<Sample> samples;
};

struct SplitPlan {
    std::uint64_t seed = 0;
    std::size_t repeat_index = 0;
    struct Partition {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
    };
    std::map<std::string, Partition> by_dataset;
};

// `repeats` independent 80/20 partitions per dataset, deterministic from
// (seed, repeat index, dataset name).
std::vector<SplitPlan> make_splits(const std::vector<DatasetSpec>& specs,
                                   std::uint64_t seed, std::size_t repeats);

// Monotone label map from latent quality to the normalized label: an affine
// gain/offset around a smooth nonlinearity, plus Gaussian label noise.
struct BiasProfile {
    enum class Kind { Identity, Square, Sqrt, AffineCompress, SmoothStep };
    Kind kind = Kind::Identity;
    double gain = 1.0;
    double offset = 0.0;
    double noise_level = 0.0;

    double apply(double z) const; // deterministic part, before noise
    void validate() const;        // gain > 0 and image inside [0,1]
};

std::string profile_kind_to_string(BiasProfile::Kind k);
BiasProfile::Kind profile_kind_from_string(const std::string& key);

struct SuiteConfig {
    struct Entry {
        std::string name;
        Scene scene = Scene::General;
        double mos_low = 0.0;
        double mos_high = 1.0;
        Polarity polarity = Polarity::HigherBetter;
        BiasProfile profile;
        std::size_t size = 500;
    };
    std::vector<Entry> datasets;
    std::size_t patch_grid = 4;
    std::size_t channels = 8;

    // Five datasets across the five scene groups with distinct monotone
    // profiles, mirroring the cross-dataset label bias the suite exists to
    // exhibit.
    static SuiteConfig default_suite(std::size_t per_dataset = 500,
                                     double noise = 0.05);
};

// Fixed smooth pattern whose amplitude carries the latent quality; kept
// public so oracle fits can project onto it.
double toy_signal(std::size_t patch, std::size_t channel);

// Patch statistics encode z (signal amplitude vs noise amplitude) and the
// scene (a marked channel). Fully determined by its arguments.
Tensor render_toy_image(Scene scene, double z, std::uint64_t image_seed,
                        std::size_t patch_grid, std::size_t channels);

std::vector<SyntheticDataset> synthesize_biased_suite(const SuiteConfig& config,
                                                      std::uint64_t seed);

// Concatenated train partitions of all datasets; each epoch gets its own
// seed-derived shuffle.
class TrainingStream {
public:
    TrainingStream() = default;
    TrainingStream(std::vector<const Sample*> samples, std::uint64_t seed);

    std::size_t size() const { return samples_.size(); }
    const std::vector<const Sample*>& samples() const { return samples_; }
    std::vector<std::vector<const Sample*>> epoch_batches(std::size_t epoch,
                                                          std::size_t batch_size) const;

private:
    std::vector<const Sample*> samples_;
    std::uint64_t seed_ = 0;
};

TrainingStream mix_training_sets(const std::vector<SyntheticDataset>& suite,
                                 const SplitPlan& plan, std::uint64_t seed);

// Score CSV: a leading directive line "#range,<low>,<high>,<polarity>",
// a header "sample_id,dataset,scene,mos", then one row per sample. Images for
// loaded rows are rendered deterministically from (dataset, sample_id) with
// the normalized score as the stand-in latent.
SyntheticDataset load_scores_csv(const std::string& path,
                                 std::size_t patch_grid = 4,
                                 std::size_t channels = 8);
void write_scores_csv(const std::string& path, const SyntheticDataset& ds);

// Suite manifest: JSON with the specs, profiles and seed; enough to
// regenerate the suite exactly.
void write_suite_manifest(const std::string& path, const SuiteConfig& config,
                          std::uint64_t seed);
std::pair<SuiteConfig, std::uint64_t> read_suite_manifest(const std::string& path);

} // namespace gia
