#include "wakecough/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "wakecough/rng.hpp"
#include "wakecough/wav.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace wakecough {

std::vector<std::string> DatasetManifest::labels() const {
    std::set<std::string> s;
    for (const auto& e : entries) s.insert(e.label);
    return {s.begin(), s.end()};
}

std::vector<std::string> DatasetManifest::subjects() const {
    std::set<std::string> s;
    for (const auto& e : entries)
        if (!e.subject.empty()) s.insert(e.subject);
    return {s.begin(), s.end()};
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    for (const auto& e : manifest.entries) {
        ordered_json j;
        j["id"] = e.id;
        j["path"] = e.path;
        j["label"] = e.label;
        j["subject"] = e.subject;
        j["duration_sec"] = e.duration_sec;
        if (e.snr_db) j["snr_db"] = *e.snr_db;
        j["split"] = e.split;
        out << j.dump() << '\n';
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open manifest: " + path);
    DatasetManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line);
        ManifestEntry e;
        e.id = j.at("id").get<std::string>();
        e.path = j.at("path").get<std::string>();
        e.label = j.at("label").get<std::string>();
        e.subject = j.value("subject", "");
        e.duration_sec = j.at("duration_sec").get<double>();
        if (j.contains("snr_db")) e.snr_db = j["snr_db"].get<double>();
        e.split = j.value("split", "");
        m.entries.push_back(std::move(e));
    }
    return m;
}

DatasetManifest scan_corpus(const std::string& root) {
    if (!fs::is_directory(root)) throw std::invalid_argument("not a directory: " + root);
    DatasetManifest m;
    std::vector<fs::path> dirs;
    for (const auto& d : fs::directory_iterator(root))
        if (d.is_directory()) dirs.push_back(d.path());
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
        const std::string label = dir.filename().string();
        std::vector<fs::path> files;
        for (const auto& f : fs::recursive_directory_iterator(dir))
            if (f.is_regular_file() && f.path().extension() == ".wav") files.push_back(f.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            ManifestEntry e;
            e.path = f.string();
            e.label = label;
            e.id = label + "/" + f.stem().string();
            try {
                WavInfo info = wav_info(e.path);
                e.duration_sec = info.duration_sec();
            } catch (const std::exception&) {
                continue; // unreadable file skipped
            }
            m.entries.push_back(std::move(e));
        }
    }
    if (m.entries.empty()) throw std::invalid_argument("no WAV files under: " + root);
    return m;
}

namespace {

AudioClip load_16k(const std::string& path) {
    AudioClip c = read_wav(path);
    if (c.sample_rate != 16000) c = resample(c, 16000);
    return c;
}

} // namespace

ScBuildResult build_spotting_dataset(const DatasetManifest& commands,
                                     const DatasetManifest& coughs,
                                     const DatasetManifest& noises, int n_command_classes,
                                     uint64_t seed, const std::string& out_dir,
                                     bool mix_coughs_only) {
    const auto labels = commands.labels();
    if (static_cast<int>(labels.size()) < n_command_classes)
        throw std::invalid_argument("build_sc_dataset: need at least " +
                                    std::to_string(n_command_classes) + " command classes");
    if (coughs.entries.empty()) throw std::invalid_argument("build_sc_dataset: empty cough pool");
    if (noises.entries.empty()) throw std::invalid_argument("build_sc_dataset: empty noise pool");

    std::set<std::string> kept(labels.begin(), labels.begin() + n_command_classes);

    std::vector<AudioClip> noise_clips;
    for (const auto& e : noises.entries) {
        AudioClip c = load_16k(e.path);
        if (mean_power(c.samples) <= 1e-12)
            throw std::invalid_argument("build_sc_dataset: silent noise file " + e.path);
        noise_clips.push_back(std::move(c));
    }

    // up to 3795 coughs, seeded random selection, output in manifest order
    std::vector<size_t> cough_idx(coughs.entries.size());
    for (size_t i = 0; i < cough_idx.size(); ++i) cough_idx[i] = i;
    Rng sel_rng(Rng::derive(seed, 0));
    sel_rng.shuffle(cough_idx);
    const size_t n_coughs = std::min<size_t>(3795, cough_idx.size());
    cough_idx.resize(n_coughs);
    std::sort(cough_idx.begin(), cough_idx.end());

    struct Event {
        const ManifestEntry* src;
        std::string label;
    };
    std::vector<Event> events;
    for (const auto& e : commands.entries)
        if (kept.count(e.label)) events.push_back({&e, e.label});
    for (size_t i : cough_idx) events.push_back({&coughs.entries[i], "cough"});

    fs::create_directories(out_dir);
    ScBuildResult result;
    result.out_dir = out_dir;
    for (size_t i = 0; i < events.size(); ++i) {
        const Event& ev = events[i];
        Rng ev_rng(Rng::derive(seed, i + 1));

        AudioClip clip = normalize_duration(load_16k(ev.src->path), 1.0);
        ManifestEntry out;
        const bool mix = !mix_coughs_only || ev.label == "cough";
        if (mix) {
            const double snr = ev_rng.uniform(34.0, 73.0);
            const size_t nidx = ev_rng.index(noise_clips.size());
            clip = mix_at_snr(clip, noise_clips[nidx], snr, ev_rng.next_u64());
            out.snr_db = snr;
        }

        const std::string stem =
            ev.label + "_" + std::to_string(i);
        fs::create_directories(fs::path(out_dir) / ev.label);
        const std::string path = (fs::path(out_dir) / ev.label / (stem + ".wav")).string();
        write_wav(path, clip);

        out.id = stem;
        out.path = path;
        out.label = ev.label;
        out.subject = ev.src->subject;
        out.duration_sec = 1.0;
        result.manifest.entries.push_back(std::move(out));
    }
    return result;
}

ScBuildResult build_sc_dataset(const DatasetManifest& commands, const DatasetManifest& coughs,
                               const DatasetManifest& noises, ScVariant variant, uint64_t seed,
                               const std::string& out_dir, bool mix_coughs_only) {
    return build_spotting_dataset(commands, coughs, noises,
                                  variant == ScVariant::SC11 ? 10 : 35, seed, out_dir,
                                  mix_coughs_only);
}

std::vector<CougherClip> build_cougher_task(const DatasetManifest& coughs,
                                            const CougherTask& task) {
    if (task.num_subjects < 2) throw std::invalid_argument("build_cougher_task: N >= 2 required");
    if (task.cough_sec <= 0) throw std::invalid_argument("build_cougher_task: t must be positive");

    std::map<std::string, std::vector<const ManifestEntry*>> by_subject;
    for (const auto& e : coughs.entries)
        if (!e.subject.empty()) by_subject[e.subject].push_back(&e);

    std::vector<std::string> chosen;
    if (!task.subjects.empty()) {
        chosen = task.subjects;
    } else {
        for (const auto& [subj, entries] : by_subject) {
            double total = 0.0;
            for (const auto* e : entries) total += e->duration_sec;
            if (total >= task.cough_sec) chosen.push_back(subj);
            if (static_cast<int>(chosen.size()) == task.num_subjects) break;
        }
    }
    if (static_cast<int>(chosen.size()) < task.num_subjects)
        throw std::invalid_argument("build_cougher_task: fewer than N subjects with enough audio");
    chosen.resize(static_cast<size_t>(task.num_subjects));

    std::vector<CougherClip> out;
    for (const auto& subj : chosen) {
        auto it = by_subject.find(subj);
        if (it == by_subject.end())
            throw std::invalid_argument("build_cougher_task: unknown subject " + subj);
        std::vector<AudioClip> clips;
        for (const auto* e : it->second) clips.push_back(load_16k(e->path));
        AudioClip all = concatenate(clips);
        if (all.duration_sec() < task.cough_sec)
            throw std::invalid_argument("build_cougher_task: subject " + subj +
                                        " has insufficient audio");
        out.push_back({subj, normalize_duration(all, task.cough_sec)});
    }
    return out;
}

FixtureSpec default_fixture_spec(int num_coughers, int bursts_per_cougher) {
    FixtureSpec spec;
    spec.num_coughers = num_coughers;
    spec.bursts_per_cougher = bursts_per_cougher;
    // log-spaced centers; with the generator's fixed low/high formant
    // multipliers this interleaves all coughers' bands without overlap
    for (int i = 0; i < num_coughers; ++i)
        spec.signatures.push_back({690.0 * std::pow(1.395, i), 45.0 + 5.0 * i});
    spec.tone_words = {"alpha", "bravo", "delta", "tango"};
    return spec;
}

namespace {

// two-pole resonator applied to x in place
void resonate(std::vector<double>& x, double center_hz, double bandwidth_hz, int rate) {
    const double r = std::exp(-M_PI * bandwidth_hz / rate);
    const double theta = 2.0 * M_PI * center_hz / rate;
    const double a1 = 2.0 * r * std::cos(theta);
    const double a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
        const double y = v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

void peak_normalize(std::vector<double>& x, double peak) {
    double mx = 0.0;
    for (double v : x) mx = std::max(mx, std::abs(v));
    if (mx > 1e-12)
        for (double& v : x) v *= peak / mx;
}

} // namespace

FixtureResult generate_synthetic_fixtures(const FixtureSpec& spec, uint64_t seed,
                                          const std::string& out_dir) {
    if (spec.num_coughers < 1 || spec.bursts_per_cougher < 1)
        throw std::invalid_argument("generate_synthetic_fixtures: invalid spec");
    if (static_cast<int>(spec.signatures.size()) != spec.num_coughers)
        throw std::invalid_argument("generate_synthetic_fixtures: one signature per cougher required");
    for (size_t i = 0; i < spec.signatures.size(); ++i)
        for (size_t j = i + 1; j < spec.signatures.size(); ++j)
            if (spec.signatures[i].center_hz == spec.signatures[j].center_hz &&
                spec.signatures[i].bandwidth_hz == spec.signatures[j].bandwidth_hz)
                throw std::invalid_argument(
                    "generate_synthetic_fixtures: identical cougher signatures");

    const int rate = spec.sample_rate;
    FixtureResult result;
    uint64_t stream = 0;

    for (int c = 0; c < spec.num_coughers; ++c) {
        const std::string subj = "cougher" + std::string(c < 9 ? "0" : "") + std::to_string(c + 1);
        const fs::path dir = fs::path(out_dir) / "coughs" / subj;
        fs::create_directories(dir);
        const CougherSignature& sig = spec.signatures[static_cast<size_t>(c)];
        for (int b = 0; b < spec.bursts_per_cougher; ++b) {
            Rng rng(Rng::derive(seed, stream++));
            const size_t n = static_cast<size_t>(std::llround(spec.burst_sec * rate));
            // two formants derived from the signature, alternated at 10 Hz so
            // the identity survives per-utterance cepstral mean subtraction
            // (a stationary spectrum would be removed by it); the fixed low /
            // high multipliers keep all coughers' bands disjoint. A pitch
            // pulse train with a low noise floor keeps the spectrum stable
            // from burst to burst.
            std::vector<double> xa(n), xb(n);
            const double f0 = 110.0 + 7.0 * c;
            const size_t period = static_cast<size_t>(std::llround(rate / f0));
            for (size_t i = 0; i < n; ++i) {
                const double pulse = (i % period == 0) ? 1.0 : 0.0;
                xa[i] = xb[i] = pulse + 0.05 * rng.gaussian();
            }
            const double jitter = 1.0 + 0.003 * rng.gaussian();
            resonate(xa, sig.center_hz * 0.435 * jitter, sig.bandwidth_hz, rate);
            resonate(xb, sig.center_hz * 2.30 * jitter, sig.bandwidth_hz, rate);
            const double tau = spec.burst_sec / 3.5;
            const double f_mod = 10.0; // one low/high cycle per 0.1 s segment
            std::vector<double> x(n);
            for (size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / rate;
                const double g = std::sin(2.0 * M_PI * f_mod * t) >= 0.0 ? 1.0 : 0.0;
                x[i] = (g * xa[i] + (1.0 - g) * xb[i]) *
                       (1.0 - std::exp(-t / 0.004)) * std::exp(-t / tau);
            }
            peak_normalize(x, 0.55 + 0.1 * rng.uniform());

            AudioClip clip{std::move(x), rate};
            const std::string name = "burst_" + std::to_string(b) + ".wav";
            const std::string path = (dir / name).string();
            write_wav(path, clip);
            ManifestEntry e;
            e.id = subj + "/" + std::to_string(b);
            e.path = path;
            e.label = "cough";
            e.subject = subj;
            e.duration_sec = clip.duration_sec();
            result.coughs.entries.push_back(std::move(e));
        }
    }

    for (size_t w = 0; w < spec.tone_words.size(); ++w) {
        const std::string& word = spec.tone_words[w];
        const fs::path dir = fs::path(out_dir) / "words" / word;
        fs::create_directories(dir);
        const double base = 300.0 + 210.0 * static_cast<double>(w);
        for (int ev = 0; ev < spec.events_per_word; ++ev) {
            Rng rng(Rng::derive(seed, stream++));
            const size_t n = static_cast<size_t>(rate);
            const double f = base * (1.0 + 0.01 * rng.gaussian());
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            const double amp = 0.4 + 0.15 * rng.uniform();
            std::vector<double> x(n);
            for (size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / rate;
                const double env = std::sin(M_PI * t); // fade in/out over the second
                x[i] = amp * env *
                       (std::sin(2.0 * M_PI * f * t + phase) +
                        0.3 * std::sin(4.0 * M_PI * f * t + 2.0 * phase));
            }
            AudioClip clip{std::move(x), rate};
            const std::string path = (dir / ("ev_" + std::to_string(ev) + ".wav")).string();
            write_wav(path, clip);
            ManifestEntry e;
            e.id = word + "/" + std::to_string(ev);
            e.path = path;
            e.label = word;
            e.duration_sec = 1.0;
            result.words.entries.push_back(std::move(e));
        }
    }

    const fs::path ndir = fs::path(out_dir) / "noise";
    fs::create_directories(ndir);
    for (int k = 0; k < spec.num_noise_files; ++k) {
        Rng rng(Rng::derive(seed, stream++));
        const size_t n = static_cast<size_t>(3 * rate);
        std::vector<double> x(n);
        double state = 0.0;
        for (size_t i = 0; i < n; ++i) {
            // lightly lowpassed white noise
            state = 0.8 * state + 0.2 * rng.gaussian();
            x[i] = 0.2 * state;
        }
        AudioClip clip{std::move(x), rate};
        const std::string path = (ndir / ("noise_" + std::to_string(k) + ".wav")).string();
        write_wav(path, clip);
        ManifestEntry e;
        e.id = "noise/" + std::to_string(k);
        e.path = path;
        e.label = "noise";
        e.duration_sec = clip.duration_sec();
        result.noises.entries.push_back(std::move(e));
    }

    save_manifest((fs::path(out_dir) / "coughs.jsonl").string(), result.coughs);
    save_manifest((fs::path(out_dir) / "words.jsonl").string(), result.words);
    save_manifest((fs::path(out_dir) / "noise.jsonl").string(), result.noises);
    return result;
}

} // namespace wakecough
