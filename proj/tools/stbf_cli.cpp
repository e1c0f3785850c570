// Command-line driver: scene simulation, oracle-mask beamforming, scoring.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "stbf/stbf.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json scene_config_to_json(const stbf::SceneConfig& cfg) {
    json j;
    j["room_dims"] = {cfg.room_dims.x(), cfg.room_dims.y(), cfg.room_dims.z()};
    j["source_positions"] = json::array();
    for (const auto& p : cfg.source_positions)
        j["source_positions"].push_back({p.x(), p.y(), p.z()});
    j["mic_positions"] = json::array();
    for (const auto& p : cfg.mic_positions)
        j["mic_positions"].push_back({p.x(), p.y(), p.z()});
    j["reflection_order"] = cfg.reflection_order;
    j["absorption"] = cfg.absorption;
    j["sample_rate"] = cfg.sample_rate;
    j["sound_speed"] = cfg.sound_speed;
    j["sir_db"] = cfg.sir_db;
    j["snr_db"] = cfg.snr_db;
    j["seed"] = cfg.seed;
    j["duration_seconds"] = cfg.duration_seconds;
    j["target_theta_deg"] = cfg.target_theta_deg;
    j["min_separation_deg"] = cfg.min_separation_deg;
    j["max_separation_deg"] = cfg.max_separation_deg;
    return j;
}

stbf::SceneConfig scene_config_from_json(const json& j) {
    stbf::SceneConfig cfg;
    auto vec3 = [](const json& a) {
        return Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    cfg.room_dims = vec3(j["room_dims"]);
    cfg.source_positions.clear();
    for (const auto& p : j["source_positions"]) cfg.source_positions.push_back(vec3(p));
    cfg.mic_positions.clear();
    for (const auto& p : j["mic_positions"]) cfg.mic_positions.push_back(vec3(p));
    cfg.reflection_order = j["reflection_order"];
    for (size_t i = 0; i < 6; ++i) cfg.absorption[i] = j["absorption"][i];
    cfg.sample_rate = j["sample_rate"];
    cfg.sound_speed = j["sound_speed"];
    cfg.sir_db = j["sir_db"];
    cfg.snr_db = j["snr_db"];
    cfg.seed = j["seed"];
    cfg.duration_seconds = j["duration_seconds"];
    cfg.target_theta_deg = j["target_theta_deg"];
    cfg.min_separation_deg = j["min_separation_deg"];
    cfg.max_separation_deg = j["max_separation_deg"];
    return cfg;
}

std::string scene_name(int index) {
    std::ostringstream os;
    os << "scene_" << std::setw(4) << std::setfill('0') << index;
    return os.str();
}

std::string bucket_label(const stbf::SceneConfig& cfg) {
    std::ostringstream os;
    os << static_cast<int>(cfg.min_separation_deg) << "-"
       << static_cast<int>(cfg.max_separation_deg) << "deg/" << cfg.sources() << "spk";
    return os.str();
}

void write_scene(const fs::path& dir, const stbf::SimulatedScene& scene,
                 const std::string& id) {
    fs::create_directories(dir);
    stbf::wav::write((dir / "mixture.wav").string(), scene.mixture);
    stbf::wav::write((dir / "target.wav").string(), scene.target_reverberant);
    for (size_t k = 0; k < scene.interferences_reverberant.size(); ++k)
        stbf::wav::write((dir / ("interf_" + std::to_string(k) + ".wav")).string(),
                         scene.interferences_reverberant[k]);
    stbf::wav::write((dir / "noise.wav").string(), scene.noise);

    json manifest;
    manifest["scene_id"] = id;
    manifest["bucket"] = bucket_label(scene.config);
    manifest["achieved_sir_db"] = scene.achieved_sir_db;
    manifest["achieved_snr_db"] = scene.achieved_snr_db;
    manifest["files"] = {{"mixture", "mixture.wav"},
                         {"target", "target.wav"},
                         {"noise", "noise.wav"}};
    for (size_t k = 0; k < scene.interferences_reverberant.size(); ++k)
        manifest["files"]["interf_" + std::to_string(k)] =
            "interf_" + std::to_string(k) + ".wav";
    manifest["config"] = scene_config_to_json(scene.config);
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
}

stbf::SimulatedScene load_scene(const fs::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw std::runtime_error("missing manifest: " + (dir / "manifest.json").string());
    json manifest = json::parse(is);
    stbf::SimulatedScene scene;
    scene.config = scene_config_from_json(manifest["config"]);
    scene.mixture = stbf::wav::read((dir / "mixture.wav").string());
    scene.target_reverberant = stbf::wav::read((dir / "target.wav").string());
    scene.noise = stbf::wav::read((dir / "noise.wav").string());
    for (int k = 0;; ++k) {
        const fs::path p = dir / ("interf_" + std::to_string(k) + ".wav");
        if (!fs::exists(p)) break;
        scene.interferences_reverberant.push_back(stbf::wav::read(p.string()));
    }
    return scene;
}

std::vector<fs::path> list_scene_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && e.path().filename().string().rfind("scene_", 0) == 0)
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw std::runtime_error("no scene_* directories under " + root.string());
    return dirs;
}

int env_jobs(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* e = std::getenv("STBF_JOBS")) return std::max(1, std::atoi(e));
    return 1;
}

/// Fixed work assignment so results never depend on the job count.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i; (i = next.fetch_add(1)) < n;) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

stbf::MaskKind parse_mask_kind(const std::string& s) {
    if (s == "sigmoid") return stbf::MaskKind::sigmoid;
    if (s == "relu") return stbf::MaskKind::relu;
    if (s == "cm") return stbf::MaskKind::complex_mask;
    throw CLI::ValidationError("--mask", "expected sigmoid, relu, or cm");
}

int cmd_simulate(const std::string& out_dir, stbf::TestsetPolicy policy, int jobs) {
    const auto configs = stbf::generate_testset(policy);
    const fs::path root(out_dir);
    fs::create_directories(root);
    parallel_for(static_cast<int>(configs.size()), jobs, [&](int i) {
        const auto& cfg = configs[i];
        std::vector<stbf::TimeSignal> dry;
        for (int s = 0; s < cfg.sources(); ++s)
            dry.push_back(stbf::make_speech_like_source(cfg.duration_seconds, cfg.sample_rate,
                                                        cfg.seed * 31ull + s));
        const auto scene = stbf::render_scene(cfg, dry);
        write_scene(root / scene_name(i), scene, scene_name(i));
    });
    std::cout << "wrote " << configs.size() << " scenes under " << root << "\n";
    return 0;
}

int cmd_beamform(const std::string& scene_dir, const std::string& out_wav,
                 const stbf::EnhanceOptions& opt, const std::string& mask_file,
                 const std::string& dump_mask, const std::string& dump_weights) {
    const auto scene = load_scene(scene_dir);
    const auto mix = stbf::stft(scene.mixture, opt.stft);

    stbf::MaskTensor speech, noise;
    if (!mask_file.empty()) {
        speech = stbf::mask_from_tensor(stbf::tensor_io::load(mask_file), opt.mask);
        noise = stbf::complement_noise_mask(speech);
    } else {
        const auto tgt = stbf::stft(scene.target_reverberant, opt.stft);
        const auto noi = stbf::stft(stbf::scene_noise_plus_interference(scene), opt.stft);
        const auto masks = stbf::oracle_masks(tgt, noi, mix, opt);
        speech = masks.speech;
        noise = masks.noise;
    }
    if (!dump_mask.empty()) stbf::tensor_io::save(dump_mask, stbf::mask_to_tensor(speech));

    const auto enhanced_spec = stbf::enhance_spectrogram(mix, speech, noise, opt);
    if (!dump_weights.empty() && opt.beamform) {
        // re-solve on full-utterance statistics for the dump
        const auto stack = stbf::stack_taps(mix, opt.taps);
        const auto phi_ss = stbf::mask_covariance(stack, speech, stbf::CovarianceRole::speech, opt);
        const auto phi_nn = stbf::mask_covariance(stack, noise, stbf::CovarianceRole::noise, opt);
        stbf::MvdrOptions mvdr;
        mvdr.diagonal_loading = opt.diagonal_loading;
        const auto w = stbf::solve_multitap_mvdr(phi_ss, phi_nn, opt.ref_channel, mvdr);
        stbf::tensor_io::save(dump_weights, stbf::weights_to_tensor(w));
    }
    const auto enhanced = stbf::istft(enhanced_spec);
    stbf::wav::write(out_wav, enhanced);
    std::cout << "wrote " << out_wav << "\n";
    return 0;
}

int cmd_evaluate(const std::string& scenes_root,
                 const std::vector<std::string>& system_specs, int ref_channel,
                 const std::string& report_path, const std::string& table_path) {
    const auto dirs = list_scene_dirs(scenes_root);
    std::vector<stbf::ScoredScene> scored;
    for (const auto& d : dirs) {
        const auto scene = load_scene(d);
        stbf::ScoredScene sc;
        sc.scene_id = d.filename().string();
        std::ifstream is(d / "manifest.json");
        sc.bucket = json::parse(is)["bucket"];
        sc.reference = scene.target_reverberant.channel(ref_channel);
        sc.mixture_ref = scene.mixture.channel(ref_channel);
        scored.push_back(std::move(sc));
    }

    std::ofstream report(report_path);
    if (!report) throw std::runtime_error("cannot write report: " + report_path);
    std::ostringstream table;
    table << std::fixed << std::setprecision(2);
    table << std::left << std::setw(24) << "system" << std::setw(12) << "si_snr_db"
          << std::setw(12) << "impr_db" << std::setw(10) << "scenes" << "\n";

    for (const auto& spec : system_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--system expects name=dir, got: " + spec);
        const std::string name = spec.substr(0, eq);
        const fs::path dir = spec.substr(eq + 1);
        std::vector<stbf::TimeSignal> outputs;
        for (const auto& sc : scored) {
            const fs::path p = dir / (sc.scene_id + ".wav");
            if (!fs::exists(p))
                throw std::runtime_error("missing system output: " + p.string());
            outputs.push_back(
                stbf::match_length(stbf::wav::read(p.string()), sc.reference.length()));
        }
        const auto rep = stbf::score_systems(scored, name, outputs);
        double mean_si = 0.0, mean_impr = 0.0;
        int used = 0;
        for (const auto& rec : rep.records) {
            json line;
            line["scene_id"] = rec.scene_id;
            line["system_id"] = rec.system_id;
            line["si_snr_db"] = rec.sentinel ? json("inf") : json(rec.si_snr_db);
            line["snr_db"] = std::isinf(rec.snr_db) ? json("inf") : json(rec.snr_db);
            line["si_snr_improvement_db"] =
                rec.sentinel ? json("inf") : json(rec.si_snr_improvement_db);
            line["sentinel"] = rec.sentinel;
            report << line.dump() << "\n";
            if (!rec.sentinel) {
                mean_si += rec.si_snr_db;
                mean_impr += rec.si_snr_improvement_db;
                ++used;
            }
        }
        for (const auto& agg : rep.aggregates) {
            json line;
            line["system_id"] = name;
            line["bucket"] = agg.bucket;
            line["count"] = agg.count;
            line["excluded_sentinels"] = agg.excluded;
            line["mean_si_snr_db"] = agg.mean_si_snr_db;
            line["mean_improvement_db"] = agg.mean_improvement_db;
            report << line.dump() << "\n";
        }
        if (used > 0) {
            mean_si /= used;
            mean_impr /= used;
        }
        table << std::left << std::setw(24) << name << std::setw(12) << mean_si
              << std::setw(12) << mean_impr << std::setw(10) << used << "\n";
    }
    std::ofstream tos(table_path);
    tos << table.str();
    std::cout << table.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multichannel speech separation: simulation, mask-based (multi-tap) MVDR, scoring"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::string output_root = ".";
    if (const char* e = std::getenv("STBF_OUTPUT_ROOT")) output_root = e;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a seeded scene set with ground truth");
    std::string sim_out = output_root + "/scenes";
    stbf::TestsetPolicy policy;
    int sim_jobs = 0, sim_mics = 15;
    sim->add_option("--out", sim_out, "Output directory");
    sim->add_option("--count", policy.count, "Number of scenes")->check(CLI::PositiveNumber);
    sim->add_option("--seed", policy.seed, "RNG seed");
    sim->add_option("--speakers", policy.speakers, "Simultaneous speakers (1-3, 0=random)")
        ->check(CLI::Range(0, 3));
    sim->add_option("--bucket", policy.bucket, "Angle-separation bucket index (0-3, -1=random)")
        ->check(CLI::Range(-1, 3));
    sim->add_option("--order", policy.reflection_order, "Image-source reflection order");
    sim->add_option("--duration", policy.duration_seconds, "Source duration, seconds");
    sim->add_option("--sir-min", policy.sir_min_db, "Min SIR, dB");
    sim->add_option("--sir-max", policy.sir_max_db, "Max SIR, dB");
    sim->add_option("--snr-min", policy.snr_min_db, "Min SNR, dB");
    sim->add_option("--snr-max", policy.snr_max_db, "Max SNR, dB");
    sim->add_option("--mics", sim_mics, "Array elements (prefix of the default 15-mic layout)")
        ->check(CLI::Range(2, 15));
    sim->add_option("--jobs", sim_jobs, "Parallel scene workers");

    // beamform
    auto* bf = app.add_subcommand("beamform", "Enhance one scene with oracle or imported masks");
    std::string bf_scene, bf_out = "enhanced.wav", bf_mask = "cm";
    std::string bf_noise_mask = "oracle", bf_mask_file, bf_dump_mask, bf_dump_weights;
    stbf::EnhanceOptions opt;
    bool no_beamformer = false;
    bf->add_option("--scene", bf_scene, "Scene directory")->required();
    bf->add_option("--out", bf_out, "Enhanced WAV path");
    bf->add_option("--mask", bf_mask, "Mask kind: sigmoid, relu, cm");
    bf->add_option("--noise-mask", bf_noise_mask, "Noise mask policy: oracle, complement");
    bf->add_option("--taps", opt.taps, "Filter taps L")->check(CLI::PositiveNumber);
    bf->add_option("--loading", opt.diagonal_loading, "Diagonal loading delta")
        ->check(CLI::NonNegativeNumber);
    bf->add_option("--ref-channel", opt.ref_channel, "Reference channel");
    bf->add_option("--chunk-seconds", opt.chunk_seconds,
                   "Chunked covariance statistics (0 = full utterance)");
    bf->add_flag("--no-beamformer", no_beamformer, "Plain masking on the reference channel");
    bf->add_flag("--shift-mask-per-tap", opt.shift_mask_per_tap,
                 "Apply the frame t-l mask to tap block l instead of broadcasting");
    bf->add_option("--mask-file", bf_mask_file, "Import speech mask (shared tensor format)");
    bf->add_option("--dump-mask", bf_dump_mask, "Write speech mask tensor");
    bf->add_option("--dump-weights", bf_dump_weights, "Write weight tensor");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score system outputs against scene ground truth");
    std::string ev_scenes, ev_report = "report.jsonl", ev_table = "report.txt";
    std::vector<std::string> ev_systems;
    int ev_ref = 0;
    ev->add_option("--scenes", ev_scenes, "Scene set root directory")->required();
    ev->add_option("--system", ev_systems, "System outputs as name=dir (repeatable)")
        ->required();
    ev->add_option("--ref-channel", ev_ref, "Reference channel for scoring");
    ev->add_option("--report", ev_report, "Line-delimited record output");
    ev->add_option("--table", ev_table, "Aggregate table output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            auto full = stbf::ArrayGeometry::default_linear_15();
            full.mic_positions.resize(sim_mics);
            policy.geometry = full;
            policy.geometry.validate();
            return cmd_simulate(sim_out, policy, env_jobs(sim_jobs));
        }
        if (bf->parsed()) {
            opt.mask = parse_mask_kind(bf_mask);
            if (bf_noise_mask == "complement")
                opt.noise_mask = stbf::NoiseMaskPolicy::complement;
            else if (bf_noise_mask != "oracle")
                throw std::runtime_error("--noise-mask expects oracle or complement");
            opt.beamform = !no_beamformer;
            return cmd_beamform(bf_scene, bf_out, opt, bf_mask_file, bf_dump_mask,
                                bf_dump_weights);
        }
        if (ev->parsed())
            return cmd_evaluate(ev_scenes, ev_systems, ev_ref, ev_report, ev_table);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
