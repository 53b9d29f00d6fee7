#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "proxyworld/agents.hpp"
#include "proxyworld/arranger.hpp"
#include "proxyworld/depthadapt.hpp"
#include "proxyworld/erp_render.hpp"
#include "proxyworld/fixtures.hpp"
#include "proxyworld/genbridge.hpp"
#include "proxyworld/gltf.hpp"
#include "proxyworld/pipeline.hpp"
#include "proxyworld/terrain.hpp"

namespace fs = std::filesystem;

// exit codes: 0 ok, 2 config, 3 backend, 4 validation
namespace {
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitValidation = 4;
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proxyworld: compiles a scene configuration into an alpha-textured proxy world"};
    app.require_subcommand(1);

    // --- run ---
    auto* run = app.add_subcommand("run", "run the generation pipeline from a config file");
    std::string config_path;
    int stage = -1;
    std::string backend_override;
    run->add_option("config", config_path, "scene config JSON")->required();
    run->add_option("--stage", stage, "re-run a single stage (1-13) from cached predecessors");
    run->add_option("--backend", backend_override, "override backend mode: stub or remote")
        ->check(CLI::IsMember({"stub", "remote"}));

    // --- pano dump-depth ---
    auto* pano = app.add_subcommand("pano", "panorama debug tools");
    auto* dump_depth = pano->add_subcommand("dump-depth", "render a panoramic depth map");
    std::string mesh_path, out_base;
    std::vector<double> origin_v{0.0, 1.7, 0.0};
    int height = 256;
    bool write_png = false;
    dump_depth->add_option("--mesh", mesh_path, "terrain mesh (OBJ)")->required();
    dump_depth->add_option("--out", out_base, "output base path (.f32 + .json)")->required();
    dump_depth->add_option("--origin", origin_v, "camera origin x y z")->expected(3);
    dump_depth->add_option("--height", height, "image height (width = 2x)");
    dump_depth->add_flag("--png", write_png, "also write a normalized PNG preview");

    // --- depth fit ---
    auto* depth = app.add_subcommand("depth", "depth-domain adaptation tools");
    auto* fit = depth->add_subcommand("fit", "fit the cubic remap against a reference library");
    std::string src_path, lib_path;
    fit->add_option("--src", src_path, "source depth map base path (.f32 + .json sidecar)")
        ->required();
    fit->add_option("--lib", lib_path, "reference thumb library directory")->required();

    // --- arrange --dry-run ---
    auto* arrange_cmd = app.add_subcommand("arrange", "asset arrangement tools");
    std::string arrange_config;
    bool dry_run = false;
    arrange_cmd->add_option("config", arrange_config, "scene config JSON")->required();
    arrange_cmd->add_flag("--dry-run", dry_run, "run through arrangement and print the audit log");

    // --- export validate ---
    auto* export_cmd = app.add_subcommand("export", "export tools");
    auto* validate = export_cmd->add_subcommand("validate", "structurally validate a glTF file");
    std::string gltf_path;
    validate->add_option("gltf", gltf_path, "path to a .gltf file")->required();

    // --- make-fixtures ---
    auto* fixtures_cmd =
        app.add_subcommand("make-fixtures", "write a self-contained demo workspace");
    std::string fixture_dir = "fixtures";
    uint64_t fixture_seed = 42;
    fixtures_cmd->add_option("dir", fixture_dir, "target directory");
    fixtures_cmd->add_option("--seed", fixture_seed, "workspace seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            pw::pipeline::SceneConfig config;
            try {
                config = pw::pipeline::validate_config(config_path);
            } catch (const pw::pipeline::ConfigInvalid& e) {
                for (const std::string& v : e.violations) std::cerr << "config: " << v << "\n";
                return kExitConfig;
            }
            if (!backend_override.empty()) config.backend_mode = backend_override;
            const pw::pipeline::RunReport report =
                stage > 0 ? pw::pipeline::run_single_stage(config, stage)
                          : pw::pipeline::run_pipeline(config);
            for (const auto& s : report.stages_run) std::cout << "stage: " << s << "\n";
            for (const auto& [name, seconds] : report.timings_seconds)
                std::printf("timing: %-18s %8.2f s\n", name.c_str(), seconds);
            for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
            std::cout << "scene: " << report.scene_dir << "\n";
            return kExitOk;
        }

        if (*dump_depth) {
            const pw::TerrainMesh mesh = pw::load_obj(mesh_path);
            const pw::TriBvh bvh(mesh.vertices, mesh.triangles);
            const pw::ErpImage depth_map = pw::erp::render_depth(
                mesh, bvh, {origin_v[0], origin_v[1], origin_v[2]}, height);
            pw::save_raw_float(out_base, depth_map);
            if (write_png) {
                pw::Image preview(depth_map.width, depth_map.height, 1);
                float lo = pw::kSkyDepth, hi = 0.0f;
                for (float d : depth_map.data)
                    if (!pw::is_sky(d)) {
                        lo = std::min(lo, d);
                        hi = std::max(hi, d);
                    }
                const float span = hi > lo ? hi - lo : 1.0f;
                for (size_t i = 0; i < depth_map.data.size(); ++i)
                    preview.data[i] =
                        pw::is_sky(depth_map.data[i]) ? 1.0f : (depth_map.data[i] - lo) / span;
                pw::save_png(out_base + ".png", preview, 16);
            }
            std::cout << "wrote " << out_base << ".f32 (" << depth_map.width << "x"
                      << depth_map.height << ")\n";
            return kExitOk;
        }

        if (*fit) {
            const pw::Image src = pw::load_raw_float(src_path);
            const auto library = pw::depthadapt::load_library(lib_path);
            const auto thumb = pw::depthadapt::make_thumb(src, "src");
            const auto& ref = pw::depthadapt::retrieve_reference(thumb, library);
            const auto poly = pw::depthadapt::fit_remap(thumb, ref);
            const auto meters = poly.coeffs_in_meters();
            std::cout << "reference: " << ref.id << "\n";
            std::printf("coeffs (normalized src): c3=%.9g c2=%.9g c1=%.9g c0=%.9g\n", poly.c3,
                        poly.c2, poly.c1, poly.c0);
            std::printf("coeffs (meters):         c3=%.9g c2=%.9g c1=%.9g c0=%.9g\n", meters[0],
                        meters[1], meters[2], meters[3]);
            std::printf("src range: [%.6g, %.6g] m\n", poly.src_min, poly.src_max);
            std::printf("residual rms: %.9g\n", poly.residual_rms);
            std::printf("monotonic: %s\n", poly.monotonic ? "yes" : "no");
            return kExitOk;
        }

        if (*arrange_cmd) {
            pw::pipeline::SceneConfig config;
            try {
                config = pw::pipeline::validate_config(arrange_config);
            } catch (const pw::pipeline::ConfigInvalid& e) {
                for (const std::string& v : e.violations) std::cerr << "config: " << v << "\n";
                return kExitConfig;
            }
            (void)dry_run;  // arrangement never writes the scene; stages 1-8 only
            const pw::pipeline::RunReport report = pw::pipeline::run_pipeline(config, 8);
            const fs::path audit =
                fs::path(config.output_dir) / "work" / "s08_arrange" / "placements.jsonl";
            const fs::path annotated =
                fs::path(config.output_dir) / "work" / "s08_arrange" / "annotated.png";
            std::cout << "annotated grid: " << annotated.string() << "\n";
            std::ifstream log(audit);
            std::string line;
            while (std::getline(log, line)) std::cout << line << "\n";
            for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
            return kExitOk;
        }

        if (*validate) {
            const std::vector<std::string> errors = pw::gltf::validate_gltf(gltf_path);
            if (errors.empty()) {
                std::cout << "valid: " << gltf_path << "\n";
                std::cout << "unlit materials: "
                          << (pw::gltf::all_materials_unlit(gltf_path) ? "all" : "NOT all") << "\n";
                return kExitOk;
            }
            for (const std::string& e : errors) std::cout << "error: " << e << "\n";
            return kExitValidation;
        }

        if (*fixtures_cmd) {
            const std::string config = pw::fixtures::write_demo_workspace(fixture_dir, fixture_seed);
            std::cout << "workspace: " << fixture_dir << "\n";
            std::cout << "config: " << config << "\n";
            return kExitOk;
        }
    } catch (const pw::gen::BackendUnavailable& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const pw::gen::BackendMalformedReply& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const pw::agent::AgentUnavailable& e) {
        std::cerr << "agent error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const pw::pipeline::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
