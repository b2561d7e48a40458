#ifndef WAKECOUGH_DATASET_HPP
#define WAKECOUGH_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wakecough/audio.hpp"

namespace wakecough {

struct ManifestEntry {
    std::string id;
    std::string path;
    std::string label;
    std::string subject; // empty when not applicable
    double duration_sec = 0.0;
    std::optional<double> snr_db;
    std::string split; // empty when not applicable
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::vector<std::string> labels() const;   // distinct, sorted
    std::vector<std::string> subjects() const; // distinct, sorted
};

// JSON-lines, one entry per line, stable key order.
void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

// One entry per WAV under root/<label>/; sorted by path.
DatasetManifest scan_corpus(const std::string& root);

enum class ScVariant { SC11, SC36 };

struct ScBuildResult {
    DatasetManifest manifest;
    std::string out_dir;
};

// Assemble a spotting corpus: commands of the variant's class count minus
// one, plus coughs normalized to 1 sec as an extra "cough" class, every
// event mixed with noise at an SNR uniform in [34, 73] dB. At most 3795
// coughs are kept (seeded random selection).
ScBuildResult build_sc_dataset(const DatasetManifest& commands, const DatasetManifest& coughs,
                               const DatasetManifest& noises, ScVariant variant, uint64_t seed,
                               const std::string& out_dir, bool mix_coughs_only = false);

// Same assembly with an arbitrary number of command classes (the SC
// variants delegate here with 10 / 35).
ScBuildResult build_spotting_dataset(const DatasetManifest& commands,
                                     const DatasetManifest& coughs,
                                     const DatasetManifest& noises, int n_command_classes,
                                     uint64_t seed, const std::string& out_dir,
                                     bool mix_coughs_only = false);

struct CougherTask {
    int num_subjects;   // N
    double cough_sec;   // t, seconds of cough per subject
    std::vector<std::string> subjects; // explicit list; empty = sorted-id prefix
    uint64_t seed = 0;
};

struct CougherClip {
    std::string subject;
    AudioClip clip; // exactly t seconds
};

// Per-subject concatenation of coughs in manifest order, truncated to
// exactly t seconds.
std::vector<CougherClip> build_cougher_task(const DatasetManifest& coughs,
                                            const CougherTask& task);

struct CougherSignature {
    double center_hz;
    double bandwidth_hz;
};

struct FixtureSpec {
    int num_coughers = 5;
    int bursts_per_cougher = 30;
    double burst_sec = 0.8;
    std::vector<CougherSignature> signatures; // one per cougher, all distinct
    std::vector<std::string> tone_words;      // spotting classes besides "cough"
    int events_per_word = 200;
    int num_noise_files = 4;
    int sample_rate = 16000;
};

// Evenly spaced default signatures and four tone words.
FixtureSpec default_fixture_spec(int num_coughers = 5, int bursts_per_cougher = 30);

struct FixtureResult {
    DatasetManifest coughs;
    DatasetManifest words;
    DatasetManifest noises;
};

// Deterministic synthetic corpus: per-cougher resonant noise bursts with
// exponential decay, tone-word events, and noise files for mixing.
FixtureResult generate_synthetic_fixtures(const FixtureSpec& spec, uint64_t seed,
                                          const std::string& out_dir);

} // namespace wakecough

#endif
