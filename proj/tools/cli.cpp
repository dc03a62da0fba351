// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "strokesynth/augment.hpp"
#include "strokesynth/encoder.hpp"
#include "strokesynth/errors.hpp"
#include "strokesynth/io.hpp"
#include "strokesynth/onnx.hpp"
#include "strokesynth/raster.hpp"
#include "strokesynth/scene.hpp"

namespace strokesynth {

namespace {

EncoderChoice parse_encoder_spec(const std::string& spec) {
    EncoderChoice ec;
    if (spec == "toy") {
        return ec;
    }
    if (spec.rfind("toy:", 0) == 0) {
        const std::string tail = spec.substr(4);
        try {
            std::size_t used = 0;
            ec.toy_seed = std::stoull(tail, &used);
            if (used != tail.size()) {
                throw std::invalid_argument(tail);
            }
        } catch (const std::exception&) {
            throw ConfigError("--encoder toy:SEED needs an unsigned integer, got \"" + tail +
                              "\"");
        }
        return ec;
    }
    if (spec.rfind("onnx:", 0) == 0) {
        ec.kind = EncoderChoice::Kind::kOnnx;
        ec.onnx_path = spec.substr(5);
        if (ec.onnx_path.empty()) {
            throw ConfigError("--encoder onnx:PATH needs a model path");
        }
        return ec;
    }
    throw ConfigError("unknown encoder \"" + spec + "\"; expected toy, toy:SEED, or onnx:PATH");
}

std::int64_t parse_block(const std::string& text, const std::string& spec) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 1) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("schedule \"" + spec + "\" needs positive block lengths C:S");
    }
}

ScheduleSpec parse_schedule_spec(const std::string& spec) {
    ScheduleSpec s;
    if (spec == "concerted") {
        return s;
    }
    for (const auto& [prefix, kind] :
         {std::pair<std::string, Schedule>{"alternated:", Schedule::kAlternated},
          std::pair<std::string, Schedule>{"sequential:", Schedule::kSequential}}) {
        if (spec.rfind(prefix, 0) != 0) {
            continue;
        }
        const std::string tail = spec.substr(prefix.size());
        const std::size_t colon = tail.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("schedule \"" + spec + "\" needs two block lengths C:S");
        }
        s.kind = kind;
        s.block_content = parse_block(tail.substr(0, colon), spec);
        s.block_style = parse_block(tail.substr(colon + 1), spec);
        return s;
    }
    throw ConfigError("unknown schedule \"" + spec +
                      "\"; expected concerted, alternated:C:S, or sequential:C:S");
}

nlohmann::json load_config_file(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such file: " + path);
    }
    std::ifstream in(path, std::ios::binary);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config file " + path + " must hold a JSON object");
    }
    return j;
}

} // namespace

CliConfig parse_cli(const std::vector<std::string>& args) {
    CLI::App app{"Paints a text prompt in the brush texture of a style image"};
    app.name("strokesynth");

    std::string style;
    std::string text;
    std::string out;
    std::string encoder = "toy";
    std::string schedule = "concerted";
    std::vector<std::int64_t> canvas;
    std::int64_t save_every = 0;
    std::string config_path;
    RunConfig rc;

    app.add_option("--style", style, "Style image (PNG)");
    app.add_option("--text-embedding", text, "Text embedding (JSON)");
    app.add_option("--encoder", encoder, "toy | toy:SEED | onnx:PATH");
    app.add_option("--out", out, "Output directory");
    app.add_option("--lambda-content", rc.lambda_content, "Content loss weight");
    app.add_option("--lambda-style", rc.lambda_style, "Style loss weight");
    app.add_option("--strokes", rc.num_strokes, "Number of strokes");
    app.add_option("--iters", rc.iterations,
                   "Iterations (ignored for sequential:C:S, which runs C+S)");
    app.add_option("--schedule", schedule, "concerted | alternated:C:S | sequential:C:S");
    app.add_option("--candidates", rc.candidates, "Random restarts; the best final image wins");
    app.add_option("--seed", rc.seed, "Master random seed");
    app.add_option("--n-aug", rc.augmentations, "Augmented views per content evaluation");
    app.add_option("--canvas", canvas, "Canvas size: WIDTH HEIGHT")->expected(2);
    app.add_option("--save-every", save_every, "Write frames/frame_NNNNNN.png every K iterations");
    app.add_option("--feature-samples", rc.feature_samples, "Style feature locations per layer");
    app.add_option("--sigma", rc.sigma, "Stroke edge softness in pixels");
    app.add_option("--segments", rc.segments, "Polyline segments per stroke");
    app.add_option("--lr-trajectories", rc.lr_trajectories, "Learning rate for control points");
    app.add_option("--lr-radii", rc.lr_radii, "Learning rate for radii");
    app.add_option("--lr-colors", rc.lr_colors, "Learning rate for colors");
    app.add_option("--config", config_path, "JSON file supplying values for unset flags");

    try {
        // CLI11's vector overload wants the arguments reversed and without
        // the program name.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    if (!config_path.empty()) {
        const nlohmann::json j = load_config_file(config_path);
        static const std::set<std::string> known = {
            "style",      "text_embedding",  "encoder",  "out",
            "lambda_content", "lambda_style", "strokes",  "iters",
            "schedule",   "candidates",      "seed",     "n_aug",
            "canvas",     "save_every",      "feature_samples", "sigma",
            "segments",   "lr_trajectories", "lr_radii", "lr_colors"};
        for (const auto& item : j.items()) {
            if (known.find(item.key()) == known.end()) {
                throw ConfigError("unknown config key \"" + item.key() + "\" in " + config_path);
            }
        }
        const auto overlay = [&](const char* key, const char* flag, auto& target) {
            if (!j.contains(key) || app.count(flag) > 0) {
                return;
            }
            try {
                target = j.at(key).get<std::decay_t<decltype(target)>>();
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("config key ") + key + ": " + e.what());
            }
        };
        overlay("style", "--style", style);
        overlay("text_embedding", "--text-embedding", text);
        overlay("encoder", "--encoder", encoder);
        overlay("out", "--out", out);
        overlay("lambda_content", "--lambda-content", rc.lambda_content);
        overlay("lambda_style", "--lambda-style", rc.lambda_style);
        overlay("strokes", "--strokes", rc.num_strokes);
        overlay("iters", "--iters", rc.iterations);
        overlay("schedule", "--schedule", schedule);
        overlay("candidates", "--candidates", rc.candidates);
        overlay("seed", "--seed", rc.seed);
        overlay("n_aug", "--n-aug", rc.augmentations);
        overlay("canvas", "--canvas", canvas);
        overlay("save_every", "--save-every", save_every);
        overlay("feature_samples", "--feature-samples", rc.feature_samples);
        overlay("sigma", "--sigma", rc.sigma);
        overlay("segments", "--segments", rc.segments);
        overlay("lr_trajectories", "--lr-trajectories", rc.lr_trajectories);
        overlay("lr_radii", "--lr-radii", rc.lr_radii);
        overlay("lr_colors", "--lr-colors", rc.lr_colors);
    }

    if (style.empty()) {
        throw ConfigError("--style is required");
    }
    if (text.empty()) {
        throw ConfigError("--text-embedding is required");
    }
    if (out.empty()) {
        throw ConfigError("--out is required");
    }
    if (!canvas.empty()) {
        if (canvas.size() != 2) {
            throw ConfigError("canvas needs exactly two values: WIDTH HEIGHT");
        }
        rc.canvas_width = canvas[0];
        rc.canvas_height = canvas[1];
    }
    if (save_every < 0) {
        throw ConfigError("--save-every must be >= 0");
    }

    CliConfig cfg;
    cfg.style_path = style;
    cfg.text_embedding_path = text;
    cfg.out_dir = out;
    cfg.encoder = parse_encoder_spec(encoder);
    cfg.save_every = save_every;
    cfg.run = rc;
    cfg.run.schedule = parse_schedule_spec(schedule);
    return cfg;
}

namespace {

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

int run_configured(const CliConfig& cfg) {
    namespace fs = std::filesystem;
    if (!fs::exists(cfg.style_path)) {
        throw IoError("no such file: " + cfg.style_path);
    }
    if (!fs::exists(cfg.text_embedding_path)) {
        throw IoError("no such file: " + cfg.text_embedding_path);
    }

    std::unique_ptr<ToyEncoder> toy;
    std::unique_ptr<OnnxEncoder> onnx;
    const ImageEncoder* embedder = nullptr;
    const StyleFeatureExtractor* extractor = nullptr;
    if (cfg.encoder.kind == EncoderChoice::Kind::kToy) {
        toy = std::make_unique<ToyEncoder>(cfg.encoder.toy_seed);
        embedder = toy.get();
        extractor = toy.get();
    } else {
        if (!fs::exists(cfg.encoder.onnx_path)) {
            throw IoError("no such file: " + cfg.encoder.onnx_path);
        }
        onnx = std::make_unique<OnnxEncoder>(cfg.encoder.onnx_path);
        embedder = onnx.get();
        extractor = onnx.get();
    }

    const TextEmbedding text = load_text_embedding(cfg.text_embedding_path);
    Tensor style = center_crop_square(decode_png(cfg.style_path));
    if (style.shape()[1] != extractor->input_size()) {
        style = resize_bilinear(style, extractor->input_size(), extractor->input_size());
    }

    const fs::path out(cfg.out_dir);
    ensure_directory(out);

    const RunResult best =
        best_of_n(cfg.run, *embedder, *extractor, text.embedding, style, cfg.run.candidates);

    if (cfg.save_every > 0) {
        const fs::path frames = out / "frames";
        ensure_directory(frames);
        RunConfig winner = cfg.run;
        winner.seed = best.seed;
        const std::int64_t every = cfg.save_every;
        // Deterministic replay of the winning candidate drives the timelapse.
        run(winner, *embedder, *extractor, text.embedding, style,
            [&](std::int64_t iter, const Drawing& d) {
                if (iter % every != 0) {
                    return;
                }
                char name[32];
                std::snprintf(name, sizeof(name), "frame_%06lld.png",
                              static_cast<long long>(iter));
                encode_png(rasterize(d, winner.sigma, winner.segments), (frames / name).string());
            });
    }

    encode_png(rasterize(best.drawing, cfg.run.sigma, cfg.run.segments),
               (out / "final.png").string());
    export_svg(best.drawing, (out / "final.svg").string());
    write_file_atomic((out / "drawing.json").string(), drawing_to_json(best.drawing));
    export_history_csv(best.history, (out / "losses.csv").string());

    nlohmann::json t;
    t["seconds"] = {{"content", best.seconds.content},
                    {"style", best.seconds.style},
                    {"both", best.seconds.both},
                    {"total", best.seconds.content + best.seconds.style + best.seconds.both}};
    t["final"] = {{"cosine", best.final_cosine},
                  {"content", best.final_losses.content},
                  {"style", best.final_losses.style},
                  {"combined", best.final_losses.combined}};
    t["seed"] = best.seed;
    write_file_atomic((out / "timings.json").string(), t.dump(2) + "\n");

    std::cout << "final cosine " << best.final_cosine << ", outputs in " << cfg.out_dir << "\n";
    return 0;
}

} // namespace

int run_command(const std::vector<std::string>& args) {
    CliConfig cfg;
    try {
        cfg = parse_cli(args);
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        return run_configured(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace strokesynth
