#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "facealign/annotate.hpp"
#include "facealign/cascade.hpp"
#include "facealign/error.hpp"
#include "facealign/pipeline.hpp"
#include "facealign/server.hpp"
#include "facealign/stats.hpp"

namespace fs = std::filesystem;
using namespace facealign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return kExitUsage;
        case ErrorKind::singular_matrix:
        case ErrorKind::degenerate_pair:
        case ErrorKind::rect_out_of_bounds:
        case ErrorKind::empty_image: return kExitInternal;
        default: return kExitIo;
    }
}

struct Options {
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string mode = "faithful";
    std::string out_size = "60x70";
    std::string crop_y = "above";
    std::string face_cascade = std::string(FACEALIGN_DATA_DIR) + "/cascades/haarcascade_frontalface_default.xml";
    std::string eye_cascade = std::string(FACEALIGN_DATA_DIR) + "/cascades/haarcascade_eye.xml";
    double face_scale_factor = 1.1;
    int face_min_neighbors = 5;
    bool upper_face_eyes = false;
};

Size parse_size(const std::string& s) {
    const auto x = s.find_first_of("xX");
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t used_w = 0, used_h = 0;
        const int w = std::stoi(s.substr(0, x), &used_w);
        const int h = std::stoi(s.substr(x + 1), &used_h);
        if (used_w != x || used_h != s.size() - x - 1 || w < 1 || h < 1) throw std::invalid_argument(s);
        return {w, h};
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::invalid_argument, "config", "--out-size expects WxH, got '" + s + "'");
    }
}

PipelineConfig make_config(const Options& o) {
    PipelineConfig c;
    const auto mode = pipeline_mode_from_string(o.mode);
    if (!mode) throw Error(ErrorKind::invalid_argument, "config", "unknown mode '" + o.mode + "'");
    const auto crop_y = crop_y_convention_from_string(o.crop_y);
    if (!crop_y) throw Error(ErrorKind::invalid_argument, "config", "unknown crop-y convention '" + o.crop_y + "'");
    c.mode = *mode;
    c.crop_y = *crop_y;
    c.output_size = parse_size(o.out_size);
    c.face_params.scale_factor = o.face_scale_factor;
    c.face_params.min_neighbors = o.face_min_neighbors;
    c.upper_face_eyes = o.upper_face_eyes;
    c.validate();
    return c;
}

int cmd_process(const Options& o, const fs::path& input_dir, fs::path run_root, bool as_json) {
    const PipelineConfig config = make_config(o);
    if (run_root.empty()) run_root = input_dir.parent_path() / (input_dir.filename().string() + "_run");
    Pipeline pipeline(Detector(load_cascade(o.face_cascade), load_cascade(o.eye_cascade)), config);
    const BatchResult batch = run_batch(pipeline, input_dir, run_root, o.jobs);
    const RunStats stats = stats_from_files(batch.manifest_path);
    if (as_json) {
        std::cout << stats_json(stats).dump(2) << '\n';
    } else {
        std::cout << "run root " << run_root.string() << "\nconfig " << config.hash() << " (" << to_string(config.mode)
                  << ")\n"
                  << stats_table(stats);
    }
    return kExitOk;
}

int cmd_stats(const fs::path& manifest, bool as_json) {
    const RunStats stats = stats_from_files(manifest);
    if (as_json) {
        std::cout << stats_json(stats).dump(2) << '\n';
    } else {
        std::cout << stats_table(stats);
    }
    return kExitOk;
}

int cmd_cascade_inspect(const fs::path& xml) {
    const CascadeModel m = load_cascade(xml);
    std::cout << "window " << m.base_width << "x" << m.base_height << '\n';
    for (std::size_t i = 0; i < m.stages.size(); ++i) {
        std::cout << "stage " << i << ": " << m.stages[i].classifiers.size() << " stumps, threshold "
                  << m.stages[i].threshold << '\n';
    }
    const std::size_t stumps = m.stump_count();
    std::cout << m.stages.size() << (m.stages.size() == 1 ? " stage, " : " stages, ") << stumps
              << (stumps == 1 ? " stump" : " stumps") << '\n';
    return kExitOk;
}

int cmd_annotate_serve(const Options& o, const fs::path& run_root, const std::string& host, int port,
                       int lease_seconds, const fs::path& static_dir) {
    const PipelineConfig config = make_config(o);
    AnnotationQueue queue(run_root, std::chrono::seconds(lease_seconds));
    const std::size_t added = queue.enqueue_from_buckets();
    AnnotationService service(queue, config);
    AnnotateServer server(service, static_dir);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    const int bound = server.bind(host, port);
    const auto p = queue.progress();
    std::cout << "enqueued " << added << " new tasks (" << p.pending << " pending, " << p.done << " done)\n"
              << "serving http://" << host << ":" << bound << "/\n"
              << std::flush;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.wait_until_ready();
        server.stop();
    });
    server.listen();
    // Wake the waiter if the server stopped on its own.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::cout << "stopped\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Face detection, eye alignment and cropping for portrait batches"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; flags override its values");

    Options o;
    app.add_option("--jobs,-j", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--mode", o.mode, "faithful or optimized")
        ->check(CLI::IsMember({"faithful", "optimized"}));
    app.add_option("--out-size", o.out_size, "Output size WxH");
    app.add_option("--crop-y-convention", o.crop_y, "above or paper-literal")
        ->check(CLI::IsMember({"above", "paper-literal"}));
    app.add_option("--face-cascade", o.face_cascade, "Face cascade XML");
    app.add_option("--eye-cascade", o.eye_cascade, "Eye cascade XML");
    app.add_option("--face-scale-factor", o.face_scale_factor, "Face scan scale step (> 1)");
    app.add_option("--face-min-neighbors", o.face_min_neighbors, "Face grouping threshold");
    app.add_flag("--upper-face-eyes", o.upper_face_eyes, "Search eyes in the upper 60% of the face only");
    app.fallthrough();

    auto* process = app.add_subcommand("process", "Run the pipeline over a directory of images");
    std::string input_dir;
    std::string run_root;
    bool process_json = false;
    process->add_option("input", input_dir, "Directory of images")->required();
    process->add_option("--run-root", run_root, "Output root (default <input>_run beside the input)");
    process->add_flag("--json", process_json, "Print the summary as JSON");

    auto* serve = app.add_subcommand("annotate-serve", "Serve bucket images for manual eye annotation");
    std::string serve_root;
    std::string host = "127.0.0.1";
    int port = 8080;
    int lease_seconds = 600;
    std::string static_dir;
    serve->add_option("--run-root", serve_root, "Run root with bucket folders")->required();
    serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--lease-seconds", lease_seconds, "Task lease duration")->check(CLI::PositiveNumber);
    serve->add_option("--static-dir", static_dir, "Directory served at /");

    auto* stats = app.add_subcommand("stats", "Summarise a manifest");
    std::string manifest;
    bool stats_json_out = false;
    stats->add_option("manifest", manifest, "manifest.jsonl")->required();
    stats->add_flag("--json", stats_json_out, "Print JSON instead of a table");

    auto* inspect = app.add_subcommand("cascade-inspect", "Print the structure of a cascade XML file");
    std::string xml;
    inspect->add_option("xml", xml, "Cascade file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*process) return cmd_process(o, input_dir, run_root, process_json);
        if (*serve) return cmd_annotate_serve(o, serve_root, host, port, lease_seconds, static_dir);
        if (*stats) return cmd_stats(manifest, stats_json_out);
        if (*inspect) return cmd_cascade_inspect(xml);
    } catch (const Error& e) {
        std::cerr << "facealign: " << e.stage() << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "facealign: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "facealign: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}
